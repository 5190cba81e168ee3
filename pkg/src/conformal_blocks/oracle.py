"""Brute-force evaluation of the defining integrals.

Nothing here calls the closed forms; the integrands are evaluated directly.
Every integrand is single valued: exponent pairs (e, e~) with e - e~ an
integer enter through

    spow(w, e, e~) = |w|^(e+e~) (w/|w|)^(e-e~),

so no branch cut needs to be tracked.

Two engines:

* ``Adaptive``: a partition of unity chi_k = d_k^-2m / sum_q d_q^-2m splits the
  plane among the marked singular points; each piece is integrated in polar
  coordinates about its own point with log-radius u = log r.  The r^kappa
  singularity turns into exponential decay in u, which Gauss-Legendre panels
  integrate spectrally; the angular integral is periodic and uses the
  trapezoid rule.  The analytically known power-law ends (r -> 0 and
  r -> infinity) are added in closed form.  The error is the difference of two
  refinement levels plus the size of the end corrections.
* ``MC``: importance sampling from a mixture of power-law densities centred on
  the marked points (balance heuristic, deterministic component counts,
  Latin-hypercube uniforms inside each stratum).  Chunks draw from
  ``SeedSequence(seed).spawn`` streams and are summed in a fixed order with
  ``math.fsum``, so the result does not depend on the number of workers.
"""

import cmath
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial.legendre import leggauss

from .blocks import ParameterSet
from .errors import (BudgetExhausted, ExtrapolationUnstable, InputError, NonConvergentWindow,
                     OracleNotConverged)
from .fourier import FourierParams, QCDParams

THREADS_ENV = "CONFORMAL_BLOCKS_THREADS"
DEFAULT_MC_BUDGET = {1: 10_000_000, 2: 40_000_000}
DEFAULT_ADAPTIVE_BUDGET = 2_000_000
MC_CHUNK = 1 << 16
EPS_LADDER = (0.2, 0.1, 0.05)
EPS_EXTRA = (0.025,)
OSC_REL_TOL = 5e-3
LIMIT_POINTS = (1e-1, 3e-2, 1e-2)


class Kind(str, Enum):
    Ip1 = "Ip1"
    Ip2_iterated = "Ip2_iterated"
    GenBeta = "GenBeta"
    Fourier = "Fourier"
    QCD = "QCD"
    AppendixA = "AppendixA"


class Method(str, Enum):
    Adaptive = "Adaptive"
    MC = "MC"


@dataclass(frozen=True)
class BetaParams:
    """Exponents of the generalized Euler integral t^(alpha-1) (1-t)^(beta-1) x c.c."""
    alpha: complex
    beta: complex
    alpha_t: complex
    beta_t: complex

    def __post_init__(self):
        for name in ("alpha", "beta", "alpha_t", "beta_t"):
            object.__setattr__(self, name, complex(getattr(self, name)))


@dataclass(frozen=True)
class Regularization:
    """Damping ladder used for an oscillatory integral and the fit applied."""
    eps: tuple
    exponents: tuple
    raw: tuple


@dataclass(frozen=True)
class QuadratureEstimate:
    value: complex
    abs_error: float
    n_evals: int
    method: Method
    seed: int = None
    regularization: Regularization = None
    converged: bool = True


def spow(w, e, et):
    """Single-valued w^e wbar^et for integer e - et (w = 0 gives 0 or inf)."""
    n = int(round((complex(e) - complex(et)).real))
    w = np.asarray(w, dtype=complex)
    r = np.abs(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        ph = np.where(r > 0, w / np.where(r > 0, r, 1.0), 1.0)
        return np.exp((complex(e) + complex(et)) * np.log(r)) * ph ** n


# ---------------------------------------------------------------- integrand specs

@dataclass(frozen=True)
class IntegrandSpec:
    """One defining integral.

    ``params`` is a ParameterSet (Ip1, Ip2_iterated, AppendixA), BetaParams
    (GenBeta), FourierParams (Fourier) or QCDParams (QCD).  For single-valued
    integrands ``cut_angle`` is informational.  The Fourier kind also accepts
    a non-integer gamma - gamma~; arg t then runs over [cut_angle,
    cut_angle + 2 pi), with cut_angle = arg q (principal) by default, the
    branch the closed form uses.  ``damping`` is the epsilon of e^{-eps |t|} for the
    oscillatory kinds; ``None`` means the default ladder with extrapolation.
    """
    kind: Kind
    params: object
    z: complex = None
    cut_angle: float = None
    damping: float = None
    windows: dict = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.z is not None:
            object.__setattr__(self, "z", complex(self.z))
        if self.cut_angle is None and self.z is not None and self.z != 0:
            ang = math.atan2(self.z.imag, self.z.real) % (2 * math.pi)
            object.__setattr__(self, "cut_angle", ang)
        if self.cut_angle is None and self.kind == Kind.Fourier:
            object.__setattr__(self, "cut_angle", cmath.phase(self.params.q))
        w = _windows(self)
        object.__setattr__(self, "windows", w)
        bad = [k for k, ok in w.items() if not ok]
        if bad:
            raise NonConvergentWindow("integral diverges: " + "; ".join(bad))


def _re(x):
    return complex(x).real


def _windows(spec):
    k, P = spec.kind, spec.params
    w = {}
    if k == Kind.GenBeta:
        if not isinstance(P, BetaParams):
            raise InputError("GenBeta needs BetaParams")
        w["Re(alpha+alpha~) > 0"] = _re(P.alpha + P.alpha_t) > 0
        w["Re(beta+beta~) > 0"] = _re(P.beta + P.beta_t) > 0
        w["Re(alpha+alpha~+beta+beta~) < 2"] = _re(P.alpha + P.alpha_t + P.beta + P.beta_t) < 2
        _int_diff(P.alpha - P.alpha_t, "alpha-alpha~")
        _int_diff(P.beta - P.beta_t, "beta-beta~")
    elif k in (Kind.Ip1, Kind.Ip2_iterated):
        if not isinstance(P, ParameterSet):
            raise InputError(f"{k.value} needs a ParameterSet")
        want = 1 if k == Kind.Ip1 else 2
        if P.p != want:
            raise InputError(f"{k.value} needs p = {want}, got {P.p}")
        if spec.z is None:
            raise InputError(f"{k.value} needs z")
        _check_pairs(P)
        A, At, B, Bt = P.upper, P.upper_t, (1.0,) + P.b, (1.0,) + P.b_t
        for i in range(1, P.p + 1):
            w[f"Re(a_{i}+a~_{i}) > 0"] = _re(A[i] + At[i]) > 0
            w[f"Re(b_{i}+b~_{i}-a_{i}-a~_{i}) > 0"] = _re(B[i] + Bt[i] - A[i] - At[i]) > 0
        if spec.z != 0:
            w["Re(a_0+a~_0) < 2"] = _re(A[0] + At[0]) < 2
            for i in range(1, P.p + 1):
                for j in range(P.p + 1):
                    if j != i:
                        w[f"Re(b_{i}+b~_{i}-a_{j}-a~_{j}) < 2"] = _re(B[i] + Bt[i] - A[j] - At[j]) < 2
        else:
            for i in range(1, P.p + 1):
                w[f"Re(b_{i}+b~_{i}) < 2"] = _re(B[i] + Bt[i]) < 2
    elif k == Kind.AppendixA:
        if not isinstance(P, ParameterSet) or P.p not in (1, 2):
            raise InputError("AppendixA needs a ParameterSet with p = 1 or 2")
        _check_pairs(P)
        A, At, B, Bt = P.upper, P.upper_t, (1.0,) + P.b, (1.0,) + P.b_t
        p = P.p
        w["Re(b_p+b~_p) > 2"] = _re(B[p] + Bt[p]) > 2
        w["Re(a_0+a~_0) < 2"] = _re(A[0] + At[0]) < 2
        w["Re(b_p+b~_p-a_0-a~_0) < 2"] = _re(B[p] + Bt[p] - A[0] - At[0]) < 2
        if p == 2:
            w["Re(a_1+a~_1) > 0"] = _re(A[1] + At[1]) > 0
            w["Re(b_1+b~_1-a_1-a~_1) > 0"] = _re(B[1] + Bt[1] - A[1] - At[1]) > 0
            w["Re(b_1+b~_1-a_0-a~_0) < 2"] = _re(B[1] + Bt[1] - A[0] - At[0]) < 2
            w["Re(b_2+b~_2-a_1-a~_1) < 2"] = _re(B[2] + Bt[2] - A[1] - At[1]) < 2
            w["Re(b_2+b~_2-b_1-b~_1) > 0"] = _re(B[2] + Bt[2] - B[1] - Bt[1]) > 0
    elif k == Kind.Fourier:
        if not isinstance(P, FourierParams):
            raise InputError("Fourier needs FourierParams")
        w["0 < Re(gamma+gamma~) < 1"] = P.in_window
    elif k == Kind.QCD:
        if not isinstance(P, QCDParams):
            raise InputError("QCD needs QCDParams")
        w["-1/4 < Re(u+uhat) < 1"] = -0.25 < _re(P.u + P.uhat) < 1
        _int_diff(2 * P.v1, "uhat-u")
    return w


def _int_diff(d, label):
    d = complex(d)
    if abs(d - round(d.real)) > 1e-9:
        raise InputError(f"{label} = {d!r} must be an integer for a single-valued integrand")


def _check_pairs(P):
    for i, (a, at) in enumerate(zip(P.upper, P.upper_t)):
        _int_diff(a - at, f"a_{i}-a~_{i}")
    for i, (b, bt) in enumerate(zip(P.b, P.b_t)):
        _int_diff(b - bt, f"b_{i + 1}-b~_{i + 1}")


# ---------------------------------------------------------------- planar description

@dataclass
class _Planar:
    """A 2D integrand C * f(t) with power-law behaviour at marked points and at infinity."""
    f: object                 # vectorized callable on complex arrays
    points: list              # marked points
    exps: list                # (e, e~) at each point
    exp_inf: tuple = None     # (E, E~) at infinity; None when damped
    osc: float = 0.0          # |grad of the phase| for oscillatory integrands
    r_max: float = None       # outer radius where the damping kills the integrand
    cut: float = None         # branch cut angle (single marked point only)


def _lead(e, et, at_inf=False):
    """Exponent c of the angular average rho^2 <f> ~ rho^c in log-radius."""
    d = complex(e) - complex(et)
    s, n = complex(e) + complex(et), abs(int(round(d.real)))
    if abs(d - round(d.real)) > 1e-9:
        n = 0       # off the integer locus the angular average does not vanish
    return s - n + 2 if at_inf else s + n + 2


def _planar(spec, eps=None):
    k, P = spec.kind, spec.params
    if k == Kind.GenBeta:
        al, be, alt, bet = P.alpha, P.beta, P.alpha_t, P.beta_t
        f = lambda t: spow(t, al - 1, alt - 1) * spow(1 - t, be - 1, bet - 1)
        return _Planar(f, [0j, 1 + 0j], [(al - 1, alt - 1), (be - 1, bet - 1)],
                       (al + be - 2, alt + bet - 2))
    if k == Kind.Ip1:
        a0, a1, b1 = P.a0, P.a[0], P.b[0]
        a0t, a1t, b1t = P.a0_t, P.a_t[0], P.b_t[0]
        z = spec.z
        base = lambda t: spow(t, a1 - 1, a1t - 1) * spow(1 - t, b1 - a1 - 1, b1t - a1t - 1)
        if z == 0:
            return _Planar(base, [0j, 1 + 0j], [(a1 - 1, a1t - 1), (b1 - a1 - 1, b1t - a1t - 1)],
                           (b1 - 2, b1t - 2))
        f = lambda t: base(t) * spow(1 - z * t, -a0, -a0t)
        return _Planar(f, [0j, 1 + 0j, 1 / z],
                       [(a1 - 1, a1t - 1), (b1 - a1 - 1, b1t - a1t - 1), (-a0, -a0t)],
                       (b1 - a0 - 2, b1t - a0t - 2))
    if k == Kind.AppendixA and P.p == 1:
        a0, a0t, b1, b1t = P.a0, P.a0_t, P.b[0], P.b_t[0]
        f = lambda t: spow(t, b1 - 2, b1t - 2) * spow(1 - t, -a0, -a0t)
        return _Planar(f, [0j, 1 + 0j], [(b1 - 2, b1t - 2), (-a0, -a0t)],
                       (b1 - a0 - 2, b1t - a0t - 2))
    if k == Kind.Fourier:
        g, gt, q = P.gamma, P.gamma_t, P.q
        qb = q.conjugate()
        d = g - gt
        single = abs(d - round(d.real)) < 1e-9
        cut = spec.cut_angle

        def power(t):
            if single:
                return spow(t, g - 1, gt - 1)
            th = cut + np.mod(np.angle(t) - cut, 2 * np.pi)
            return np.exp((g + gt - 2) * np.log(np.abs(t)) + 1j * d * th)

        f = lambda t: power(t) * np.exp(1j * (qb * t + q * np.conj(t)) - eps * np.abs(t))
        return _Planar(f, [0j], [(g - 1, gt - 1)], None, 2 * abs(q), _damped_radius(eps),
                       None if single else cut)
    if k == Kind.QCD:
        u, uh, rho, q = P.u, P.uhat, P.rho, P.q
        qb = q.conjugate()
        c = rho * rho / 4
        f = lambda z: (np.exp(0.5j * (q * np.conj(z) + qb * z)) * spow(z * z - c, -u - 0.5, -uh - 0.5)
                       * np.exp(-eps * np.abs(z)))
        pts = [rho / 2, -rho / 2]
        return _Planar(f, pts, [(-u - 0.5, -uh - 0.5)] * 2, None, abs(q),
                       abs(rho) / 2 + _damped_radius(eps))
    raise InputError(f"no planar quadrature for {k.value} with these parameters")


def _damped_radius(eps):
    return 36.0 / eps


# ---------------------------------------------------------------- adaptive engine

_GL = {n: leggauss(n) for n in (8, 12, 16)}


def _radial_panels(r_lo, r_hi, hu, width):
    """Panel edges: geometric (ratio e^hu) while the panel is narrower than
    ``width``, then uniform of size ``width``."""
    edges = [r_lo]
    r = r_lo
    while r < r_hi:
        step = min(r * (math.exp(hu) - 1), width) if width else r * (math.exp(hu) - 1)
        r = min(r + step, r_hi)
        edges.append(r)
    return np.array(edges)


def _chi(T, k, pts, m):
    dk = np.abs(T - pts[k])
    dens = np.zeros(T.shape)
    for q in pts:
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = dens + (dk / np.abs(T - q)) ** (2 * m)
    return 1.0 / dens


def _ring_integral(pl, k, rho, nth, m=4):
    """rho^2 int_0^{2 pi} (f chi_k)(p_k + rho e^{i theta}) d theta for each rho (array)."""
    p = pl.points[k]
    if pl.cut is None:
        # periodic: trapezoid rule
        th = 2 * np.pi * (np.arange(nth) + 0.5) / nth
        wt = np.full(nth, 2 * np.pi / nth)
    else:
        # jump across the cut: composite Gauss-Legendre on [cut, cut + 2 pi]
        xg, wg = _GL[16]
        npan = max(1, -(-nth // 16))
        h = 2 * np.pi / npan
        a = pl.cut + h * np.arange(npan)[:, None]
        th = (a + 0.5 * h * (xg + 1)).ravel()
        wt = np.tile(0.5 * h * wg, npan)
    T = p + rho[:, None] * np.exp(1j * th)[None, :]
    val = pl.f(T) * _chi(T, k, pl.points, m)
    val = np.where(np.isfinite(val), val, 0.0)
    return (val @ wt) * rho ** 2


def _pou_level(pl, level, tol):
    """One refinement level of the partition-of-unity polar rule.

    Returns (value, tail_error, n_evals)."""
    hu = 0.5 / 2 ** level
    nth0 = 64 * 2 ** level
    xg, wg = _GL[8]
    pts = pl.points
    total, tail_err, evals = 0j, 0.0, 0
    span = max([abs(p) for p in pts] + [1.0])
    for k, p in enumerate(pts):
        others = [q for j, q in enumerate(pts) if j != k]
        d = min([abs(q - p) for q in others]) if others else 1.0
        c0 = _lead(*pl.exps[k])
        # inner cut: the neglected piece is ~ r^c0 and its first correction ~ r^(c0+1)
        r_lo = d * math.exp(math.log(tol * 1e-3) / (c0.real + 1.0))
        if pl.r_max is not None:
            r_hi = pl.r_max + abs(p)
            cinf = None
        else:
            cinf = _lead(*pl.exp_inf, at_inf=True)
            decay = -(cinf.real - 1.0)
            r_hi = (span + d) * math.exp(-math.log(tol * 1e-3) / decay)
        width = (2.0 / pl.osc / 2 ** level) if pl.osc else None
        edges = _radial_panels(r_lo, r_hi, hu, width)
        a, b = edges[:-1, None], edges[1:, None]
        # Gauss-Legendre in u = log r on geometric panels, in r on uniform ones
        geo = (b - a) > (a * (math.exp(hu) - 1) * 0.999) if width else np.ones_like(a, bool)
        ua, ub = np.log(a), np.log(b)
        u = 0.5 * (ub - ua) * xg + 0.5 * (ua + ub)
        r_geo = np.exp(u)
        w_geo = 0.5 * (ub - ua) * wg                      # dr/r = du, ring gives rho^2
        r_lin = 0.5 * (b - a) * xg + 0.5 * (a + b)
        w_lin = 0.5 * (b - a) * wg / r_lin                # dr = rho du -> weight / rho
        rr = np.where(geo, r_geo, r_lin)
        ww = np.where(geo, w_geo, w_lin)
        # angular resolution follows the oscillation
        for i in range(rr.shape[0]):
            nth = nth0 + (int(math.ceil(1.2 * pl.osc * rr[i].max())) * 2 ** level if pl.osc else 0)
            A = _ring_integral(pl, k, rr[i], nth)
            total += np.sum(A * ww[i])
            evals += nth * rr.shape[1]
        # closed-form ends
        A_lo = _ring_integral(pl, k, np.array([r_lo]), nth0)[0]
        t_lo = A_lo / c0
        total += t_lo
        tail_err += abs(t_lo) * (r_lo / d)
        if cinf is not None:
            A_hi = _ring_integral(pl, k, np.array([r_hi]), nth0)[0]
            t_hi = -A_hi / cinf
            total += t_hi
            tail_err += abs(t_hi) * (span + d) / r_hi
        evals += 2 * nth0
    return total, tail_err, evals


def _adaptive(pl, tol, budget, strict):
    prev = None
    evals = 0
    level = 0
    while True:
        val, terr, n = _pou_level(pl, level, tol)
        evals += n
        if prev is not None:
            err = abs(val - prev) + terr + 1e-15 * abs(val) * 10
            if err <= max(tol * abs(val), 1e-300):
                return QuadratureEstimate(val, err, evals, Method.Adaptive)
            if evals * 4 > budget or level >= 3:
                est = QuadratureEstimate(val, err, evals, Method.Adaptive, converged=False)
                if strict:
                    exc = BudgetExhausted(f"adaptive quadrature stopped at error {err:.3g}")
                    exc.estimate = est
                    raise exc
                return est
        prev = val
        level += 1


# ---------------------------------------------------------------- Monte Carlo engine

@dataclass
class _Stage:
    """Importance-sampling mixture for one complex variable.

    ``points(prev)`` returns an array (n_samples, K) of centres given the
    previously sampled variables; ``gammas`` are the radial exponents of the
    density rho^(gamma-2) near each centre, ``gamma_inf`` the tail exponent of
    rho^(-gamma_inf-2), ``radius`` the radius of the uniform core disk."""
    points: object
    gammas: tuple
    gamma_inf: float
    radius: float
    local: float = 1.0

    @property
    def n_components(self):
        return len(self.gammas) + 2


def _stage_sample(stage, comp, prev, u1, u2):
    """Sample component ``comp`` (0..K-1 points, K uniform core, K+1 tail)."""
    K = len(stage.gammas)
    th = 2 * np.pi * u2
    if comp < K:
        c = stage.points(prev)[:, comp]
        g = stage.gammas[comp]
        r = stage.local * u1 ** (1.0 / g)
        return c + r * np.exp(1j * th)
    if comp == K:
        r = stage.radius * np.sqrt(u1)
        return r * np.exp(1j * th)
    r = stage.radius * (1.0 - u1) ** (-1.0 / stage.gamma_inf)
    return r * np.exp(1j * th)


def _stage_density(stage, w, prev):
    K = len(stage.gammas)
    cs = stage.points(prev)
    g = np.zeros(w.shape)
    for k in range(K):
        rho = np.abs(w - cs[:, k])
        gk = stage.gammas[k]
        with np.errstate(divide="ignore"):
            dk = gk / (2 * np.pi * stage.local ** gk) * rho ** (gk - 2)
        g += np.where(rho < stage.local, dk, 0.0)
    r = np.abs(w)
    R = stage.radius
    g += np.where(r < R, 1.0 / (np.pi * R * R), 0.0)
    gi = stage.gamma_inf
    with np.errstate(divide="ignore"):
        g += np.where(r >= R, gi * R ** gi / (2 * np.pi) * r ** (-gi - 2), 0.0)
    return g / (K + 2)


@dataclass
class _MCProblem:
    f: object            # callable(list of sample arrays) -> complex array
    stages: list


def _lhs(rng, n):
    return (rng.permutation(n) + rng.random(n)) / n


def _mc_chunk(problem, combo_list, n_per, seed_seq):
    """Sum of f/g over one chunk, per stratum: returns list of (sum, sumsq_re, sumsq_im, n)."""
    rng = np.random.default_rng(seed_seq)
    out = []
    for combo in combo_list:
        prev = []
        dens = np.ones(n_per)
        for stage, comp in zip(problem.stages, combo):
            w = _stage_sample(stage, comp, prev, _lhs(rng, n_per), _lhs(rng, n_per))
            dens = dens * _stage_density(stage, w, prev)
            prev.append(w)
        with np.errstate(all="ignore"):
            v = problem.f(prev) / dens
        v = np.where(np.isfinite(v), v, 0.0)
        out.append((complex(v.sum()), float((v.real ** 2).sum()), float((v.imag ** 2).sum())))
    return out


def _workers(workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer >= 1, got {env!r}") from None
        if n < 1:
            raise InputError(f"{THREADS_ENV} must be an integer >= 1, got {env!r}")
        return n
    return os.cpu_count() or 1


def _mc(problem, budget, seed, workers):
    import itertools
    combos = list(itertools.product(*[range(s.n_components) for s in problem.stages]))
    n_strata = len(combos)
    n_per = max(16, MC_CHUNK // n_strata)
    n_chunks = max(1, int(math.ceil(budget / (n_per * n_strata))))
    seeds = np.random.SeedSequence(seed).spawn(n_chunks)
    with ThreadPoolExecutor(max_workers=_workers(workers)) as ex:
        results = list(ex.map(lambda s: _mc_chunk(problem, combos, n_per, s), seeds))
    n_tot = n_chunks * n_per * n_strata
    value_re, value_im, var = [], [], 0.0
    for j in range(n_strata):
        s_re = math.fsum(r[j][0].real for r in results)
        s_im = math.fsum(r[j][0].imag for r in results)
        q_re = math.fsum(r[j][1] for r in results)
        q_im = math.fsum(r[j][2] for r in results)
        m = n_chunks * n_per
        value_re.append(s_re)
        value_im.append(s_im)
        # variance of the stratum mean, each stratum weighted 1/n_strata
        v = (q_re - s_re ** 2 / m + q_im - s_im ** 2 / m) / max(m - 1, 1)
        var += max(v, 0.0) / m / n_strata ** 2
    value = complex(math.fsum(value_re), math.fsum(value_im)) / n_tot
    return value, 3.0 * math.sqrt(var), n_tot


def _power_stage(points_fn, exps, exp_inf, radius, inf_scale=0.5):
    gam = tuple(max(0.05, min(2.0, _re(e + et) + 2)) for e, et in exps)
    ginf = max(0.05, inf_scale * (-(_re(exp_inf[0] + exp_inf[1]) + 2)))
    return _Stage(points_fn, gam, ginf, radius)


def _mc_problem(spec):
    k, P = spec.kind, spec.params
    if k in (Kind.GenBeta, Kind.Ip1) or (k == Kind.AppendixA and P.p == 1):
        pl = _planar(spec)
        pts = np.array(pl.points)
        R = 2.0 + float(np.max(np.abs(pts)))
        st = _power_stage(lambda prev: np.broadcast_to(pts, (_n(prev), len(pts))) if prev
                          else pts[None, :], pl.exps, pl.exp_inf, R)
        st.points = _const_points(pts)
        return _MCProblem(lambda ws: pl.f(ws[0]), [st])
    if k == Kind.Ip2_iterated:
        z = spec.z
        a0, a1, a2 = P.a0, P.a[0], P.a[1]
        b1, b2 = P.b
        a0t, a1t, a2t = P.a0_t, P.a_t[0], P.a_t[1]
        b1t, b2t = P.b_t

        def f(ws):
            z1, z2 = ws
            return (spow(z1, a1 - 1, a1t - 1) * spow(1 - z1, b1 - a1 - 1, b1t - a1t - 1)
                    * spow(z2, a2 - 1, a2t - 1) * spow(1 - z2, b2 - a2 - 1, b2t - a2t - 1)
                    * spow(1 - z * z1 * z2, -a0, -a0t))

        # z_1 marginal: at infinity the z_2 integral adds |z z_1|^(-min Re(a_0+a~_0, a_2+a~_2))
        m1 = min(_re(a0 + a0t), _re(a2 + a2t))
        e_inf1 = (b1 - 2 - m1 / 2, b1t - 2 - m1 / 2)
        s1 = _power_stage(_const_points(np.array([0j, 1 + 0j])),
                          [(a1 - 1, a1t - 1), (b1 - a1 - 1, b1t - a1t - 1)], e_inf1, 3.0)
        s2 = _power_stage(lambda prev: np.stack([np.zeros_like(prev[0]), np.ones_like(prev[0]),
                                                 1 / (z * prev[0])], axis=1),
                          [(a2 - 1, a2t - 1), (b2 - a2 - 1, b2t - a2t - 1), (-a0, -a0t)],
                          (b2 - a0 - 2, b2t - a0t - 2), 3.0)
        return _MCProblem(f, [s1, s2])
    if k == Kind.AppendixA and P.p == 2:
        a0, a1, b1, b2 = P.a0, P.a[0], P.b[0], P.b[1]
        a0t, a1t, b1t, b2t = P.a0_t, P.a_t[0], P.b_t[0], P.b_t[1]

        def f(ws):
            t, z1 = ws
            return (spow(t, b2 - 2, b2t - 2) * spow(z1, a1 - 1, a1t - 1)
                    * spow(1 - z1, b1 - a1 - 1, b1t - a1t - 1) * spow(1 - t * z1, -a0, -a0t))

        m = min(_re(a0 + a0t), _re(a1 + a1t))
        st = _power_stage(_const_points(np.array([0j, 1 + 0j])),
                          [(b2 - 2, b2t - 2), (b1 - 1 - a0, b1t - 1 - a0t)],
                          (b2 - 2 - m / 2, b2t - 2 - m / 2), 3.0)
        sz = _power_stage(lambda prev: np.stack([np.zeros_like(prev[0]), np.ones_like(prev[0]),
                                                 1 / prev[0]], axis=1),
                          [(a1 - 1, a1t - 1), (b1 - a1 - 1, b1t - a1t - 1), (-a0, -a0t)],
                          (b1 - a0 - 2, b1t - a0t - 2), 3.0)
        return _MCProblem(f, [st, sz])
    raise InputError(f"no Monte Carlo path for {k.value}")


def _n(prev):
    return len(prev[0])


def _const_points(pts):
    pts = np.asarray(pts, dtype=complex)

    def fn(prev):
        n = len(prev[0]) if prev else 1
        return np.broadcast_to(pts, (n, len(pts)))
    return fn


# ---------------------------------------------------------------- public API

def _default_method(spec):
    if spec.kind == Kind.Ip2_iterated or (spec.kind == Kind.AppendixA and spec.params.p == 2):
        return Method.MC
    return Method.Adaptive


def integrate(spec, budget=None, tol=1e-8, method=None, seed=0, workers=None, strict=False):
    """Estimate the integral described by ``spec``.

    ``budget`` caps the number of integrand evaluations (adaptive) or sets the
    sample count (MC).  Oscillatory kinds without an explicit ``damping`` are
    integrated on the ladder eps = 0.2, 0.1, 0.05 (plus 0.025 when the fit has
    not settled) and extrapolated to eps = 0.
    """
    method = Method(method) if method is not None else _default_method(spec)
    if spec.kind in (Kind.Fourier, Kind.QCD):
        if method != Method.Adaptive:
            raise InputError("oscillatory kinds use the adaptive engine")
        return _oscillatory(spec, budget, tol, strict)
    if method == Method.MC:
        problem = _mc_problem(spec)
        p = 2 if len(problem.stages) == 2 else 1
        n = int(budget) if budget is not None else DEFAULT_MC_BUDGET[p]
        value, err, n_tot = _mc(problem, n, seed, workers)
        return QuadratureEstimate(value, err, n_tot, Method.MC, seed=seed)
    budget = budget if budget is not None else DEFAULT_ADAPTIVE_BUDGET
    return _adaptive(_planar(spec), tol, budget, strict)


def _oscillatory(spec, budget, tol, strict):
    budget = budget if budget is not None else 50 * DEFAULT_ADAPTIVE_BUDGET
    if spec.damping is not None:
        return _adaptive(_planar(spec, spec.damping), max(tol, 1e-9), budget, strict)
    ladder, vals, errs, evals = [], [], [], 0

    def rung(eps):
        nonlocal evals
        est = _adaptive(_planar(spec, eps), max(tol, 1e-9), budget, strict)
        ladder.append(eps)
        vals.append(est.value)
        errs.append(est.abs_error)
        evals += est.n_evals

    # the damped integral is analytic in eps at 0: fit a polynomial through the
    # ladder and compare with the fit of one degree less on the smallest eps
    def fit():
        eps, v = np.array(ladder), np.array(vals)
        k = len(ladder) - 1
        full = _poly_extrapolate(eps, v, k)
        low = _poly_extrapolate(eps[1:], v[1:], k - 1)
        return full, abs(full - low) + 7 * max(errs)

    for eps in EPS_LADDER:
        rung(eps)
    full, err = fit()
    for eps in EPS_EXTRA:
        if err <= OSC_REL_TOL * abs(full):
            break
        rung(eps)
        full, err = fit()
    ok = err <= OSC_REL_TOL * abs(full)
    if strict and not ok:
        raise OracleNotConverged(f"damping extrapolation error {err:.2e} above target")
    reg = Regularization(tuple(ladder), tuple(range(1, len(ladder))), tuple(vals))
    return QuadratureEstimate(full, err, evals, Method.Adaptive, converged=ok, regularization=reg)


def _poly_extrapolate(x, y, order):
    V = np.vander(x, order + 1, increasing=True)
    coef = np.linalg.solve(V, y.astype(complex))
    return complex(coef[0])


def oracle_limits(spec, exponent_pair, points=LIMIT_POINTS, correction_exponents=None,
                  **kwargs):
    """lim_{z -> 0+} z^beta zbar^beta~ I(z) by Richardson extrapolation over real z.

    The corrections to the limit are powers z^d; by default d runs over the
    differences (b_k+b~_k) - (b_j+b~_j) of the block exponents (b_0 = 1)
    together with 1, and the two with the smallest positive real part are
    eliminated.  Kinds without z are passed through.
    """
    if spec.kind not in (Kind.Ip1, Kind.Ip2_iterated):
        return integrate(spec, **kwargs)
    beta, beta_t = (complex(x) for x in exponent_pair)
    P = spec.params
    if correction_exponents is None:
        # term k of the block sum scales as |z|^(2 - b_k - b~_k) (1 + O(z))
        me = 2 + beta + beta_t
        B = [2.0] + [b + bt for b, bt in zip(P.b, P.b_t)]
        lead = [me - x for x in B]
        if any(_re(c) < -1e-12 for c in lead):
            raise InputError("the limit does not exist: a block term grows faster than "
                             "z^-beta zbar^-beta~")
        cands = {complex(c + n) for c in lead for n in range(3)}
        cands = sorted((c for c in cands if _re(c) > 1e-12), key=_re)
        correction_exponents = cands[:len(points) - 1]
    vals, errs, evals = [], [], 0
    for x in points:
        est = integrate(IntegrandSpec(spec.kind, P, complex(x)), **kwargs)
        f = x ** (beta + beta_t)
        vals.append(est.value * f)
        errs.append(est.abs_error * abs(f))
        evals += est.n_evals
    xs = np.array(points, dtype=float)
    M = np.column_stack([np.ones(len(xs))] + [xs ** complex(d) for d in correction_exponents])
    sol = np.linalg.solve(M, np.array(vals, dtype=complex))
    limit = complex(sol[0])
    # the same with one correction fewer, from the two smallest z
    M2 = M[1:, :2]
    lower = complex(np.linalg.solve(M2, np.array(vals[1:], dtype=complex))[0])
    amp = float(np.abs(np.linalg.inv(M)[0]).sum())
    err = abs(limit - lower) + amp * max(errs)
    if abs(limit - lower) > abs(vals[-1] - limit) + amp * max(errs) and abs(limit - lower) > 1e-8 * abs(limit):
        raise ExtrapolationUnstable(
            f"successive extrapolants disagree: {limit!r} vs {lower!r} (raw {vals[-1]!r})")
    method = Method.MC if _default_method(spec) == Method.MC else Method.Adaptive
    return QuadratureEstimate(limit, err, evals, method)
