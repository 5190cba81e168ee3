"""Complex special functions: log-gamma, sin(pi z), hypergeometric series,
Bessel and Hankel functions of complex order.

Everything here is double precision.  Scalar arguments return Python
``complex``; ``log_gamma``, ``rgamma``, ``sin_pi`` and ``sin_pi_log`` also
accept numpy arrays.
"""

import math
import cmath
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (PoleAt, Divergent, LowerParamPole, DegenerateParameters,
                     TruncationCapHit, NearIntegerOrder)

NEAR_INT_TOL = 1e-9
DEFAULT_TOL = 1e-14
DEFAULT_MAX_TERMS = 20000

# Lanczos coefficients, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS = (0.99999999999980993, 676.5203681218851, -1259.1392167224028,
            771.32342877765313, -176.61502916214059, 12.507343278686905,
            -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7)
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)
_LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class SeriesResult:
    """Value of a truncated series and its bookkeeping."""
    value: complex
    terms_used: int
    tail_bound: float
    converged: bool

    def __complex__(self):
        return complex(self.value)


# ---------------------------------------------------------------- helpers

def dist_to_int(x):
    """Distance from x (complex allowed) to the nearest integer."""
    x = complex(x)
    return abs(x - round(x.real))


def is_integer(x, tol=NEAR_INT_TOL):
    return dist_to_int(x) < tol


def is_nonpositive_integer(x, tol=NEAR_INT_TOL):
    x = complex(x)
    return is_integer(x, tol) and round(x.real) <= 0


def int_parity_sign(x):
    """(-1)**x for x an integer up to rounding noise."""
    n = int(round(complex(x).real))
    return -1 if n % 2 else 1


def log_cut(z):
    """log z with arg z in [0, 2*pi)."""
    z = np.asarray(z, dtype=complex)
    ang = np.angle(z)
    ang = np.where(ang < 0, ang + 2 * np.pi, ang)
    out = np.log(np.abs(z)) + 1j * ang
    return out[()] if out.ndim == 0 else out


def cpow(z, a, branch="cut", log_z=None):
    """z**a with the chosen branch of log z.

    branch="cut" puts arg z in [0, 2*pi); branch="principal" in (-pi, pi].
    An explicit ``log_z`` overrides both.
    """
    if log_z is None:
        log_z = log_cut(z) if branch == "cut" else np.log(np.asarray(z, dtype=complex))
    out = np.exp(a * np.asarray(log_z))
    return out[()] if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- gamma

def _lanczos_log_gamma(z):
    # valid for Re z >= 1/2
    zm = z - 1.0
    x = np.full(np.shape(z), _LANCZOS[0], dtype=complex)
    for k in range(1, 9):
        x = x + _LANCZOS[k] / (zm + k)
    t = zm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (zm + 0.5) * np.log(t) - t + np.log(x)


def _log_sin_pi_upper(z):
    # a branch of log sin(pi z) analytic on Im z >= 0
    rough = (math.log(0.5) + 0.5j * math.pi - 1j * math.pi * z
             + np.log1p(-np.exp(2j * math.pi * z)))
    # the exponential form cancels near the real integers; take the modulus
    # from the reduced sine and only the branch from the rough value
    small = np.abs(np.imag(z)) < 20.0
    if np.any(small):
        zs = z[small] if np.ndim(z) else z
        acc = np.log(sin_pi(zs))
        r = rough[small] if np.ndim(z) else rough
        acc = acc + 2j * np.pi * np.round((r - acc).imag / (2 * np.pi))
        if np.ndim(z):
            rough = np.array(rough)
            rough[small] = acc
        else:
            rough = acc
    return rough


def _pole_mask(z, tol):
    re = np.real(z)
    n = np.round(re)
    return (np.abs(z - n) < tol) & (n <= 0)


def log_gamma(z, pole_tol=NEAR_INT_TOL):
    """Principal branch of log Gamma(z).

    Uses the Lanczos form for Re z >= 1/2 and the reflection formula below
    that.  The branch of log sin(pi z) used in the reflection is analytic in
    the closed upper half plane, which makes the result the principal branch
    there; the lower half plane follows by conjugation.
    """
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    poles = _pole_mask(z, pole_tol)
    if np.any(poles):
        bad = z[poles].ravel()[0] if z.ndim else complex(z)
        raise PoleAt(complex(bad), int(round(bad.real)))
    out = np.empty(z.shape, dtype=complex)
    right = z.real >= 0.5
    out[right] = _lanczos_log_gamma(z[right])
    left = ~right
    if np.any(left):
        zl = z[left]
        up = zl.imag >= 0
        w = np.where(up, zl, np.conj(zl))
        v = _LOG_PI - _log_sin_pi_upper(w) - _lanczos_log_gamma(1.0 - w)
        out[left] = np.where(up, v, np.conj(v))
    return complex(out) if scalar else out


def gamma(z):
    return np.exp(log_gamma(z))


def rgamma(z):
    """1/Gamma(z), exactly zero at the poles."""
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    poles = _pole_mask(z, NEAR_INT_TOL)
    out = np.zeros(z.shape, dtype=complex)
    if np.any(~poles):
        out[~poles] = np.exp(-log_gamma(z[~poles]))
    return complex(out) if scalar else out


# ---------------------------------------------------------------- sine

_SINH_LIMIT = 700.0 / math.pi


def sin_pi(z):
    """sin(pi z), with exact reduction of the real part."""
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z.imag) > _SINH_LIMIT):
        raise OverflowError("sin_pi: |Im z| too large, use sin_pi_log")
    n = np.round(z.real)
    r = z.real - n
    sign = np.where(np.mod(n, 2) == 0, 1.0, -1.0)
    py = np.pi * z.imag
    out = sign * (np.sin(np.pi * r) * np.cosh(py) + 1j * np.cos(np.pi * r) * np.sinh(py))
    return complex(out) if scalar else out


def sin_pi_log(z):
    """A branch of log sin(pi z) that stays finite for large |Im z|."""
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z.imag) < 20.0
    if np.any(small):
        out[small] = np.log(sin_pi(z[small]))
    big = ~small
    if np.any(big):
        zb = z[big]
        up = zb.imag > 0
        w = np.where(up, zb, np.conj(zb))
        v = _log_sin_pi_upper(w)
        out[big] = np.where(up, v, np.conj(v))
    return complex(out) if scalar else out


# ---------------------------------------------------------------- series

def _tail_estimate(abs_t, n, ratio_abs, zabs, power_exp):
    """Bound on sum_{k>n} |t_k| given |t_n| and the asymptotic behaviour."""
    best = math.inf
    r = max(ratio_abs, zabs)
    if r < 1.0:
        best = abs_t * r / (1.0 - r)
    if power_exp is not None and power_exp < -1.0 and n > 0:
        best = min(best, 2.0 * abs_t * (n + 1) / (-power_exp - 1.0))
    return best


def _hyper_series(upper, lower, z, tol, max_terms, chunk=256):
    """Sum_n prod (a)_n / prod (b)_n z^n / n! with the package stopping rule."""
    upper = [complex(a) for a in upper]
    lower = [complex(b) for b in lower]
    z = complex(z)
    zabs = abs(z)
    # terminating series
    nterm = [int(round(a.real)) for a in upper if is_nonpositive_integer(a)]
    if nterm:
        m = -max(nterm)
        t, s = 1.0 + 0j, 1.0 + 0j
        for n in range(m):
            num = np.prod([a + n for a in upper]) if upper else 1.0
            den = np.prod([b + n for b in lower]) if lower else 1.0
            t = t * num / den * z / (n + 1)
            s += t
        return SeriesResult(s, m + 1, 0.0, True)
    if len(upper) == len(lower) + 1:
        power_exp = (sum(upper) - sum(lower)).real - 1.0
    else:
        power_exp = None
    nmin = max([abs(a) for a in upper + lower] + [1.0])
    ua = np.array(upper, dtype=complex)[:, None]
    lb = np.array(lower, dtype=complex)[:, None]
    total = 0j
    t_last = 1.0 + 0j
    run = 0
    n0 = 0
    # term 0 = 1 is included as partial sum start
    total = 1.0 + 0j
    terms = 1
    tail = math.inf
    while n0 < max_terms - 1:
        nn = np.arange(n0, min(n0 + chunk, max_terms - 1), dtype=float)
        num = np.prod(ua + nn, axis=0) if len(upper) else np.ones_like(nn, dtype=complex)
        den = np.prod(lb + nn, axis=0) if len(lower) else np.ones_like(nn, dtype=complex)
        ratio = num / den * z / (nn + 1.0)
        t = t_last * np.cumprod(ratio)
        partial = total + np.cumsum(t)
        at = np.abs(t)
        ap = np.abs(partial)
        small = at <= tol * ap
        # ratio from term n+1 to n+2, used for the tail of term n+1
        nxt = np.abs(np.append(ratio[1:], ratio[-1]))
        for k in range(len(nn)):
            run = run + 1 if small[k] else 0
            n = int(nn[k]) + 1
            if run >= 3 and n >= nmin:
                tail = _tail_estimate(at[k], n, nxt[k], zabs, power_exp)
                if tail <= tol * ap[k]:
                    return SeriesResult(complex(partial[k]), n + 1, float(tail), True)
        total = complex(partial[-1])
        t_last = complex(t[-1])
        terms = int(nn[-1]) + 2
        n0 = int(nn[-1]) + 1
        if not np.isfinite(total):
            break
        if t_last == 0:
            return SeriesResult(total, terms, 0.0, True)
    tail = _tail_estimate(abs(t_last), terms - 1, abs(ratio[-1]), zabs, power_exp)
    warnings.warn(f"series stopped at the term cap {max_terms}", TruncationCapHit, stacklevel=3)
    return SeriesResult(total, terms, float(tail), bool(tail <= tol * abs(total)))


def _check_lower(lower):
    for b in lower:
        if is_nonpositive_integer(b):
            raise LowerParamPole(f"lower parameter {b!r} is a non-positive integer")


def pfq(upper, lower, z, tol=DEFAULT_TOL, max_terms=DEFAULT_MAX_TERMS):
    """Generalized hypergeometric series {}_{p+1}F_p(upper; lower; z) for |z| < 1.

    Stops once three consecutive terms are below ``tol`` times the partial
    sum and the estimated remainder is below the same threshold.
    """
    z = complex(z)
    _check_lower(lower)
    terminating = any(is_nonpositive_integer(a) for a in upper)
    if abs(z) >= 1.0 and not terminating:
        raise Divergent(f"|z| = {abs(z)} >= 1 for the power series")
    return _hyper_series(upper, lower, z, tol, max_terms)


def pfq_large_z(upper, lower, z, tol=DEFAULT_TOL, max_terms=DEFAULT_MAX_TERMS):
    """{}_{p+1}F_p continued to |z| > 1 through the Mellin-Barnes connection formula.

    Valid for 0 < arg z < 2 pi; the factor (e^{i pi}/z)^{a_j} is the principal
    power of -z.
    """
    upper = [complex(a) for a in upper]
    lower = [complex(b) for b in lower]
    z = complex(z)
    _check_lower(lower)
    if len(upper) != len(lower) + 1:
        raise ValueError("pfq_large_z needs len(upper) == len(lower) + 1")
    if any(is_nonpositive_integer(a) for a in upper):
        return _hyper_series(upper, lower, z, tol, max_terms)
    if abs(z) <= 1.0:
        raise Divergent(f"|z| = {abs(z)} <= 1 for the large-argument expansion")
    if z.imag == 0 and z.real > 0:
        raise Divergent("z on the positive real axis (arg z must be in (0, 2 pi))")
    log_mz = cmath.log(-z)
    coeffs = connection_coeffs(upper, lower)
    value = 0j
    tail = 0.0
    used = 0
    ok = True
    for j, aj in enumerate(upper):
        if coeffs[j] == 0:
            continue
        others = [ak for k, ak in enumerate(upper) if k != j]
        coeff = coeffs[j] * cmath.exp(-aj * log_mz)
        inner = pfq([aj] + [1 + aj - b for b in lower], [1 + aj - ak for ak in others],
                    1.0 / z, tol, max_terms)
        value += coeff * inner.value
        tail += abs(coeff) * inner.tail_bound
        used += inner.terms_used
        ok = ok and inner.converged
    return SeriesResult(value, used, tail, bool(ok and tail <= tol * abs(value)))


def connection_coeffs(upper, lower):
    """Coefficients C_j of F(z) = sum_j C_j (-z)^{-a_j} F(a_j, 1+a_j-b; 1+a_j-a_{l!=j}; 1/z).

    C_j = prod Gamma(b) / prod_{k!=j} Gamma(a_k) * prod_{k!=j} Gamma(a_k-a_j) / prod Gamma(b_k-a_j).
    """
    upper = [complex(a) for a in upper]
    lower = [complex(b) for b in lower]
    for j in range(len(upper)):
        for k in range(j + 1, len(upper)):
            if is_integer(upper[j] - upper[k]):
                raise DegenerateParameters(
                    f"upper parameters {upper[j]!r} and {upper[k]!r} differ by an integer")
    base = sum(log_gamma(b) for b in lower)
    out = []
    for j, aj in enumerate(upper):
        others = [ak for k, ak in enumerate(upper) if k != j]
        lc = base - sum(log_gamma(ak) for ak in others)
        lc += sum(log_gamma(ak - aj) for ak in others)
        inv = 1.0 + 0j
        for bk in lower:
            inv *= rgamma(bk - aj)
        out.append(0j if inv == 0 else cmath.exp(lc) * inv)
    return out


# ---------------------------------------------------------------- Bessel

def bessel_j(nu, z, tol=DEFAULT_TOL, max_terms=DEFAULT_MAX_TERMS):
    """Bessel J_nu(z) from the ascending series, principal branch of (z/2)^nu."""
    nu = complex(nu)
    z = complex(z)
    if z == 0:
        if nu == 0:
            return SeriesResult(1.0 + 0j, 1, 0.0, True)
        raise ValueError("bessel_j needs z != 0 for nu != 0")
    if is_nonpositive_integer(nu + 1):
        m = -int(round(nu.real))
        r = bessel_j(m, z, tol, max_terms)
        s = -1 if m % 2 else 1
        return SeriesResult(s * r.value, r.terms_used, r.tail_bound, r.converged)
    series = _hyper_series([], [nu + 1], -0.25 * z * z, tol, max_terms)
    pref = cmath.exp(nu * cmath.log(0.5 * z) - log_gamma(nu + 1))
    return SeriesResult(pref * series.value, series.terms_used,
                        abs(pref) * series.tail_bound, series.converged)


_HANKEL_DELTA = 1e-5


def _hankel_direct(kind, nu, z, tol):
    jp = bessel_j(nu, z, tol).value
    jm = bessel_j(-nu, z, tol).value
    s = 1j * sin_pi(nu)
    if kind == 1:
        return (jm - cmath.exp(-1j * math.pi * nu) * jp) / s
    return (cmath.exp(1j * math.pi * nu) * jp - jm) / s


_HANKEL_LAPLACE_MIN = 4.0


def _hankel_laplace(kind, nu, z, tol):
    """H^{(1,2)}_nu(z) from the Laplace-type integral

        H1_nu(z) = sqrt(2/(pi z)) e^{i(z - nu pi/2 - pi/4)} / Gamma(nu + 1/2)
                   * int_0^inf e^{-u} u^{nu-1/2} (1 + i u/(2z))^{nu-1/2} du,

    (H2 with i -> -i), valid for Re nu > -1/2 away from the ray where
    1 + i u/(2z) vanishes.  There is no cancellation for large |z|.
    """
    from scipy import integrate

    sg = 1j if kind == 1 else -1j
    m = nu - 0.5

    # u = s^2 removes the endpoint singularity of u^(nu-1/2)
    def f(s):
        u = s * s
        return 2 * cmath.exp(-u + (2 * m + 1) * math.log(s) + m * cmath.log(1 + sg * u / (2 * z))) if s > 0 else 0j

    opts = dict(epsabs=0.0, epsrel=max(tol, 2e-14), limit=200)
    with warnings.catch_warnings():
        # a component far below the other cannot meet epsrel on its own
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        re, _ = integrate.quad(lambda s: f(s).real, 0, np.inf, **opts)
        im, _ = integrate.quad(lambda s: f(s).imag, 0, np.inf, **opts)
    pref = cmath.exp(0.5 * cmath.log(2 / (math.pi * z)) + sg * (z - nu * math.pi / 2 - math.pi / 4)
                     - log_gamma(nu + 0.5))
    return pref * complex(re, im)


def _sector(kind, z):
    """'direct' where the straight-path integral gives the principal branch,
    'reflect' in the opposite quadrant (reached through z -> -z), None on the
    remaining sliver and for small |z|."""
    if abs(z) < _HANKEL_LAPLACE_MIN:
        return None
    ph = cmath.phase(z) * (1 if kind == 1 else -1)
    if kind == 2 and z.imag == 0 and z.real < 0:
        ph = -math.pi
    if ph > -math.pi / 2 + 0.1:
        return "direct"
    if ph < -math.pi / 2 - 0.1:
        return "reflect"
    return None


def _hankel_large(kind, nu, z, tol):
    if nu.real >= 0:
        return _hankel_laplace(kind, nu, z, tol)
    # H1_{-m} = e^{i pi m} H1_m, H2_{-m} = e^{-i pi m} H2_m
    sg = 1j if kind == 1 else -1j
    return cmath.exp(-sg * math.pi * nu) * _hankel_laplace(kind, -nu, z, tol)


def hankel(kind, nu, z, tol=DEFAULT_TOL):
    """Hankel function H^{(kind)}_nu(z).

    For |z| >= 4 a Laplace-type integral is used (continued to the far
    half-plane by the z -> -z connection formulas); otherwise the J_{+nu}, J_{-nu} combination,
    whose ascending series would cancel catastrophically at large |z|.  In the
    series regime orders within 1e-5 of an integer are handled by symmetric perturbation
    about the integer and Richardson extrapolation (a NearIntegerOrder
    warning is issued).
    """
    if kind not in (1, 2):
        raise ValueError("kind must be 1 or 2")
    nu = complex(nu)
    z = complex(z)
    if z == 0:
        raise ValueError("hankel needs z != 0")
    sector = _sector(kind, z)
    if sector == "direct":
        return _hankel_large(kind, nu, z, tol)
    if sector == "reflect":
        # H2_nu(-w) = 2 cos(pi nu) H2_nu(w) + e^{i pi nu} H1_nu(w) for arg w = arg z - pi,
        # and the mirror image for H1
        w = -z
        other = 3 - kind
        sg = 1j if kind == 2 else -1j
        return (2 * cmath.cos(math.pi * nu) * _hankel_large(kind, nu, w, tol)
                + cmath.exp(sg * math.pi * nu) * _hankel_large(other, nu, w, tol))
    if dist_to_int(nu) >= _HANKEL_DELTA:
        return _hankel_direct(kind, nu, z, tol)
    warnings.warn(f"order {nu!r} is near an integer; extrapolated", NearIntegerOrder,
                  stacklevel=2)
    n0 = round(nu.real)
    d = _HANKEL_DELTA
    f = {k: _hankel_direct(kind, n0 + k * d, z, tol) for k in (-2, -1, 1, 2)}
    mid = (4 * (f[1] + f[-1]) / 2 - (f[2] + f[-2]) / 2) / 3
    der = (8 * (f[1] - f[-1]) - (f[2] - f[-2])) / (12 * d)
    return mid + (nu - n0) * der
