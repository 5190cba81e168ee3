"""Mellin-Barnes evaluation of the boundary integral

    I = int d^2t  t^(b_p - 2) tbar^(b~_p - 2) I_p(a_0, a^(p-1), b^(p-1); t, tbar),

which is the coefficient of the last block of I_{p+1}.  The part of the
integral inside the unit disk, scaled by w, equals the residue sum f_R(w) of

    K(t) = pi^2 mu_{p-1} prod_{j<p} Gamma(1-b_j-t) Gamma(b_p-b~_p+a~_j+t)
                                    / (Gamma(1-a_j-t) Gamma(b_p-b~_p+b~_j+t))
           * 1/(t + b_p - 1) * w^(2 (b_p - 1 + t))        (b_0 = 1)

over its right poles; the outside part is minus the left-pole sum f_L(w)
without the pole at t = 1 - b_p.  Since f_L = f_R at w = 1, the whole
integral is the residue at t = 1 - b_p, a product of gamma functions.

The hypergeometric (G-function) intermediate form of the disk integral is
not implemented; the contour form replaces it.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import specfun as sf
from .blocks import ParameterSet, lambda_coeffs, require_condition_c
from .errors import (InputError, NonConvergent, PoleCollision, TruncationCapHit)
from .specfun import SeriesResult

DEFAULT_TOL = 1e-13
MAX_TERMS = 2_000_000
CHUNK = 4096
LIMIT_DELTAS = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class GammaRatioKernel:
    """prefactor * prod Gamma(c - t) prod Gamma(d + t) / (prod Gamma(e - t) prod Gamma(f + t))
    * 1/(t + beta) * w^(2 (beta + t)).

    ``numerator_offsets`` = (c..., d...) split by ``n_minus`` (the first
    ``n_minus`` enter as Gamma(c - t)); likewise for the denominator.
    ``power_base_exponent`` is beta.  Right poles: t = c + n; left poles:
    t = -d - n and t = -beta.
    """
    numerator_minus: tuple
    numerator_plus: tuple
    denominator_minus: tuple = ()
    denominator_plus: tuple = ()
    power_base_exponent: complex = 0j
    prefactor: complex = 1.0
    decay_exponent: complex = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("numerator_minus", "numerator_plus", "denominator_minus", "denominator_plus"):
            object.__setattr__(self, name, tuple(complex(x) for x in getattr(self, name)))
        object.__setattr__(self, "power_base_exponent", complex(self.power_base_exponent))
        object.__setattr__(self, "prefactor", complex(self.prefactor))
        if (len(self.numerator_minus) != len(self.denominator_minus)
                or len(self.numerator_plus) != len(self.denominator_plus)):
            raise InputError("each Gamma(c -+ t) in the numerator needs a partner in the denominator")
        self._check_collisions()
        # with balanced counts the residues behave like n^(-kappa) w^(+-2n)
        if self.decay_exponent is None:
            k = (sum(self.denominator_minus) - sum(self.numerator_minus)
                 + sum(self.denominator_plus) - sum(self.numerator_plus) + 1)
            object.__setattr__(self, "decay_exponent", complex(k))

    @property
    def numerator_offsets(self):
        return self.numerator_minus + self.numerator_plus

    @property
    def denominator_offsets(self):
        return self.denominator_minus + self.denominator_plus

    def _check_collisions(self):
        c, d, beta = self.numerator_minus, self.numerator_plus, self.power_base_exponent
        for i in range(len(c)):
            for j in range(i + 1, len(c)):
                if sf.is_integer(c[i] - c[j]):
                    raise PoleCollision(f"right pole families c={c[i]!r}, c={c[j]!r} overlap")
        for i in range(len(d)):
            for j in range(i + 1, len(d)):
                if sf.is_integer(d[i] - d[j]):
                    raise PoleCollision(f"left pole families d={d[i]!r}, d={d[j]!r} overlap")
        for ci in c:
            for dj in d:
                if sf.is_nonpositive_integer(ci + dj):
                    raise PoleCollision(f"right family c={ci!r} meets left family d={dj!r}")
            if sf.is_nonpositive_integer(ci + beta):
                raise PoleCollision(f"right family c={ci!r} meets the pole t={-beta!r}")
        for dj in d:
            if sf.is_nonpositive_integer(dj - beta):
                raise PoleCollision(f"left family d={dj!r} contains the pole t={-beta!r}")

    def _log_rest(self, t, skip_minus=None, skip_plus=None, skip_beta=False):
        """log of the kernel without the gamma whose pole sits at t (and
        without w); returns (log value, mask of exact zeros from 1/Gamma)."""
        t = np.asarray(t, dtype=complex)
        lv = np.full(t.shape, complex(np.log(self.prefactor)) if self.prefactor != 0 else 0j)
        zero = np.full(t.shape, self.prefactor == 0)
        for i, c in enumerate(self.numerator_minus):
            if i != skip_minus:
                lv = lv + sf.log_gamma(c - t)
        for i, d in enumerate(self.numerator_plus):
            if i != skip_plus:
                lv = lv + sf.log_gamma(d + t)
        for args in ([e - t for e in self.denominator_minus] + [f + t for f in self.denominator_plus]):
            pole = sf._pole_mask(args, sf.NEAR_INT_TOL)
            zero |= pole
            safe = np.where(pole, 1.0, args)
            lv = lv - sf.log_gamma(safe)
        if not skip_beta:
            lv = lv - np.log(t + self.power_base_exponent)
        return lv, zero

    def _residues(self, t, n, w, **skip):
        lv, zero = self._log_rest(t, **skip)
        lv = lv - _log_factorial(n) + 2 * (self.power_base_exponent + t) * math.log(w)
        sign = np.where(n % 2 == 0, 1.0, -1.0)
        return np.where(zero, 0j, sign * np.exp(np.where(zero, 0, lv)))

    def right_residues(self, family, n, w):
        """-Res at t = c + n (the right contour runs clockwise)."""
        n = np.asarray(n)
        return self._residues(self.numerator_minus[family] + n, n, w, skip_minus=family)

    def left_residues(self, family, n, w):
        """Res at t = -d - n."""
        n = np.asarray(n)
        return self._residues(-self.numerator_plus[family] - n, n, w, skip_plus=family)

    def beta_residue(self, w=1.0):
        """Res at t = -beta (the 1/(t + beta) factor); w^0 = 1."""
        t = np.array([-self.power_base_exponent])
        lv, zero = self._log_rest(t, skip_beta=True)
        return 0j if zero[0] else complex(np.exp(lv[0]))


def _log_factorial(n):
    from scipy.special import gammaln
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def _sum_family(term_fn, w, tol, max_terms, kappa, side):
    """Sum term_fn(n) for n = 0, 1, ... with a geometric or power-law tail bound."""
    parts, n0, last = [], 0, None
    geo = abs(math.log(w)) if w != 1.0 else 0.0
    while n0 < max_terms:
        n = np.arange(n0, min(n0 + CHUNK, max_terms))
        v = term_fn(n, w)
        v = np.where(np.isfinite(v), v, np.nan)
        if np.any(np.isnan(v)):
            raise NonConvergent(f"{side} residue series overflowed near n={n0}")
        parts.append(v)
        total = sum(complex(np.sum(p)) for p in parts)
        tail_n = float(n[-1])
        a = np.abs(v[-min(64, len(v)):])
        amax = float(a.max())
        # tail bound: geometric factor w^(2n) times a power n^(-kappa)
        k = kappa.real
        if geo > 0:
            r = math.exp(-2 * geo) * (1 + max(0.0, -k) / max(tail_n, 1.0))
            tail = amax * r / (1 - r) if r < 1 else math.inf
            if k > 1:
                tail = min(tail, amax * tail_n / (k - 1))
        else:
            tail = amax * tail_n / (k - 1) if k > 1 else math.inf
        if tail <= tol * max(abs(total), 1e-300):
            return total, int(n[-1]) + 1, tail, True
        n0 += CHUNK
        last = tail
    warnings.warn(f"{side} residue sum hit the cap of {max_terms} terms", TruncationCapHit,
                  stacklevel=3)
    return total, max_terms, last, False


def _converges(kernel, w, side):
    if w <= 0:
        raise InputError("w must be positive")
    k = kernel.decay_exponent
    if side == "right" and w > 1 or side == "left" and w < 1:
        raise NonConvergent(f"the {side} residue series diverges at w = {w}")
    if w == 1.0 and not k.real > 1:
        raise NonConvergent(f"at w = 1 the residues decay like n^-{k.real:.3g}; "
                            "the series does not converge absolutely")


def residue_sum_right(kernel, w, tol=DEFAULT_TOL, max_terms=MAX_TERMS):
    """f_R(w): minus the sum of residues at the right poles t = c + n.

    Converges for 0 < w < 1; at w = 1 only when the residues decay faster than
    1/n (NonConvergent otherwise, and for w > 1).
    """
    w = float(w)
    _converges(kernel, w, "right")
    total, used, tail, ok = 0j, 0, 0.0, True
    for fam in range(len(kernel.numerator_minus)):
        v, u, t, c = _sum_family(lambda n, w, f=fam: kernel.right_residues(f, n, w), w, tol,
                                 max_terms, kernel.decay_exponent, "right")
        total += v
        used += u
        tail += t
        ok = ok and c
    return SeriesResult(total, used, tail, ok)


def residue_sum_left(kernel, w, tol=DEFAULT_TOL, max_terms=MAX_TERMS, include_beta=True):
    """f_L(w): the sum of residues at the left poles t = -d - n and t = -beta.

    Converges for w > 1; at w = 1 only when the residues decay faster than
    1/n.  ``include_beta=False`` drops the single pole t = -beta.
    """
    w = float(w)
    _converges(kernel, w, "left")
    total = kernel.beta_residue(w) if include_beta else 0j
    used, tail, ok = 1, 0.0, True
    for fam in range(len(kernel.numerator_plus)):
        v, u, t, c = _sum_family(lambda n, w, f=fam: kernel.left_residues(f, n, w), w, tol,
                                 max_terms, kernel.decay_exponent, "left")
        total += v
        used += u
        tail += t
        ok = ok and c
    return SeriesResult(total, used, tail, ok)


# ---------------------------------------------------------------- the boundary integral

def _split(ps):
    """(a_j, a~_j, b_j, b~_j) for j = 0..p-1 with b_0 = 1, and (b_p, b~_p)."""
    p = ps.p
    A, At = ps.upper[:p], ps.upper_t[:p]
    B = (1.0 + 0j,) + ps.b[:p - 1]
    Bt = (1.0 + 0j,) + ps.b_t[:p - 1]
    return A, At, B, Bt, ps.b[p - 1], ps.b_t[p - 1]


def mu_reduced(ps):
    """mu_{p-1} = pi^-2 (-1)^{a_0-a~_0} prod_{j<p} Gamma(b_j-a_j) Gamma(b~_j-a~_j) S(b_j-a_j)."""
    A, At, B, Bt, _, _ = _split(ps)
    lv = -2 * math.log(math.pi)
    for j in range(ps.p):
        lv += sf.log_gamma(B[j] - A[j]) + sf.log_gamma(Bt[j] - At[j]) + sf.sin_pi_log(B[j] - A[j])
    return sf.int_parity_sign(ps.a0 - ps.a0_t) * np.exp(lv)


def _check_hypotheses(ps):
    require_condition_c(ps)
    A, At, B, Bt, bp, bpt = _split(ps)
    for j in range(ps.p):
        d = (bp - bpt) - (B[j] - Bt[j])
        if round(d.real) < 0:
            raise InputError(f"b_p - b~_p - b_{j} + b~_{j} = {round(d.real)} must be >= 0")


def appendix_kernel(ps):
    """The Gamma-ratio kernel of the boundary integral for the exponents in ``ps``
    (a_0, a^(p-1), b^(p-1) and b_p are used; a_p is not)."""
    _check_hypotheses(ps)
    A, At, B, Bt, bp, bpt = _split(ps)
    D = bp - bpt
    return GammaRatioKernel(
        numerator_minus=tuple(1 - b for b in B),
        numerator_plus=tuple(D + a for a in At),
        denominator_minus=tuple(1 - a for a in A),
        denominator_plus=tuple(D + b for b in Bt),
        power_base_exponent=bp - 1,
        prefactor=math.pi ** 2 * mu_reduced(ps))


@dataclass(frozen=True)
class BoundaryValue:
    value: complex
    lambda_form: complex
    phase: int


def boundary_value_closed_form(ps):
    """I = pi^2 mu_{p-1} prod_{j<p} Gamma(b_p-b_j) Gamma(1-b~_p+a~_j)
    / (Gamma(b_p-a_j) Gamma(1-b~_p+b~_j)),

    with ``lambda_form`` = (-1)^{b_p-b~_p-(a_p-a~_p)} lambda_p of the
    (p+1)-fold integral, which must agree with it.
    """
    _check_hypotheses(ps)
    A, At, B, Bt, bp, bpt = _split(ps)
    lv = 0j
    for j in range(ps.p):
        lv += (sf.log_gamma(bp - B[j]) + sf.log_gamma(1 - bpt + At[j])
               - sf.log_gamma(bp - A[j]) - sf.log_gamma(1 - bpt + Bt[j]))
    value = math.pi ** 2 * mu_reduced(ps) * np.exp(lv)
    phase = sf.int_parity_sign(bp - bpt - ps.a[-1] + ps.a_t[-1])
    lam = lambda_coeffs(ps).coeffs[ps.p]
    return BoundaryValue(complex(value), complex(phase * lam), phase)


@dataclass(frozen=True)
class BoundaryLimit:
    value: complex
    abs_error: float
    inside: complex
    outside: complex
    deltas: tuple


def _richardson(deltas, vals, exps):
    x = np.array(deltas, dtype=float)
    M = np.column_stack([np.ones(len(x))] + [x ** complex(e) for e in exps])
    sol = np.linalg.solve(M, np.array(vals, dtype=complex))
    return complex(sol[0])


def boundary_value_limit(ps, deltas=LIMIT_DELTAS, tol=1e-14):
    """Disk part f_R(1 - delta) plus outside part -f_L'(1 + delta) (f_L without
    the t = 1 - b_p pole), each extrapolated to delta -> 0.

    The corrections are powers delta^1 and delta^(kappa-1), kappa = psi+psi~+3, of the
    approach to the singular point t = 1 on the unit circle; the two
    smallest are removed.
    """
    k = appendix_kernel(ps)
    kap = k.decay_exponent - 1
    if not kap.real > 0:
        raise NonConvergent(f"f_R(1 - delta) grows like delta^{kap.real:.3g}: no separate limits")
    cands = sorted({complex(kap), 1 + 0j, complex(kap + 1), 2 + 0j}, key=lambda c: c.real)
    cands = [c for c in cands if c.real > 1e-9][:len(deltas) - 1]
    ins = [residue_sum_right(k, 1 - d, tol).value for d in deltas]
    outs = [-residue_sum_left(k, 1 + d, tol, include_beta=False).value for d in deltas]
    fi = _richardson(deltas, ins, cands)
    fo = _richardson(deltas, outs, cands)
    # error: change when the largest delta and the last correction are dropped
    fi2 = _richardson(deltas[1:], ins[1:], cands[:len(deltas) - 2])
    fo2 = _richardson(deltas[1:], outs[1:], cands[:len(deltas) - 2])
    err = abs(fi - fi2) + abs(fo - fo2)
    return BoundaryLimit(fi + fo, err, fi, fo, tuple(deltas))


# ---------------------------------------------------------------- generalized Euler recovery

def euler_kernel(a, b, a_t, b_t):
    """Kernel for p = 1 with b_1 = a + 1, a_0 = 1 - b (no prefactor):
    Gamma(-t) Gamma(a-a~+1-b~+t) / (Gamma(b-t) Gamma(a-a~+1+t)) * 1/(t+a)."""
    a, b, a_t, b_t = (complex(x) for x in (a, b, a_t, b_t))
    return GammaRatioKernel((0j,), (a - a_t + 1 - b_t,), (b,), (a - a_t + 1,), a, 1.0)


def euler_recovery(a, b, a_t, b_t):
    """int d^2t t^(a-1) (1-t)^(b-1) x c.c. from the residue at t = -a,

        f = Gamma(a) Gamma(1-a~-b~) / (Gamma(a+b) Gamma(1-a~)),
        I = f pi^2 / (S(b) Gamma(1-b) Gamma(1-b~))
          = pi Gamma(a) Gamma(b) Gamma(1-a~-b~) / (Gamma(1-b~) Gamma(a+b) Gamma(1-a~)).
    """
    a, b, a_t, b_t = (complex(x) for x in (a, b, a_t, b_t))
    f = euler_kernel(a, b, a_t, b_t).beta_residue()
    lv = sf.sin_pi_log(b) + sf.log_gamma(1 - b) + sf.log_gamma(1 - b_t)
    return complex(f * math.pi ** 2 * np.exp(-lv))
