"""The p-uple conformal integral I_{p+1} and its conformal block decomposition.

    I_{p+1}(z, zbar) = sum_j lambda_j u_j(z) u~_j(zbar)        (|z| < 1)
                     = sum_j J_jj w_j(z) w~_j(zbar)           (|z| > 1)

with u_j the Frobenius solutions of the {}_{p+1}F_p equation at z = 0 and
w_j(z) = (-z)^{-a_j} {}_{p+1}F_p(a_j, 1+a_j-b_i; 1+a_j-a_l; 1/z) the ones at
infinity.  Powers of z use arg z in [0, 2 pi); the antiholomorphic factor
uses log zbar = conj(log z), which makes every block product single valued.
"""

import cmath
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import specfun as sf
from .errors import (ConditionCViolation, NonIntegerDifference, GammaPole, SineZero,
                     DegeneratePoints, Divergent, StepTooLarge,
                     NearDegenerateWarning)

NEAR_DEGENERATE_TOL = 1e-6


def _c(x):
    if isinstance(x, (list, tuple)) and len(x) == 2 and not isinstance(x[0], complex):
        return complex(float(x[0]), float(x[1]))
    return complex(x)


@dataclass(frozen=True)
class ParameterSet:
    """Exponents (a_0, a^p, b^p; a~_0, a~^p, b~^p) of the p-uple integral."""
    a0: complex
    a: tuple
    b: tuple
    a0_t: complex
    a_t: tuple
    b_t: tuple

    def __post_init__(self):
        object.__setattr__(self, "a0", _c(self.a0))
        object.__setattr__(self, "a0_t", _c(self.a0_t))
        for name in ("a", "b", "a_t", "b_t"):
            object.__setattr__(self, name, tuple(_c(x) for x in getattr(self, name)))
        n = len(self.a)
        if n < 1 or any(len(getattr(self, k)) != n for k in ("b", "a_t", "b_t")):
            raise ValueError("a, b, a_t, b_t must all have length p >= 1")

    @property
    def p(self):
        return len(self.a)

    @property
    def upper(self):
        return (self.a0,) + self.a

    @property
    def upper_t(self):
        return (self.a0_t,) + self.a_t

    @property
    def psi(self):
        return sum(self.b) - sum(self.upper)

    @property
    def psi_t(self):
        return sum(self.b_t) - sum(self.upper_t)

    def tilde(self):
        """The same integral with holomorphic and antiholomorphic roles swapped."""
        return ParameterSet(self.a0_t, self.a_t, self.b_t, self.a0, self.a, self.b)

    def dual(self):
        """Exponents of the integral obtained by z_i -> 1/z_i (argument 1/z)."""
        a0, a0t = self.a0, self.a0_t
        return ParameterSet(
            a0, tuple(a0 - bi + 1 for bi in self.b), tuple(a0 - ai + 1 for ai in self.a),
            a0t, tuple(a0t - bi + 1 for bi in self.b_t), tuple(a0t - ai + 1 for ai in self.a_t))

    def to_dict(self):
        pair = lambda x: [x.real, x.imag]
        return {"p": self.p, "a0": pair(self.a0), "a": [pair(x) for x in self.a],
                "b": [pair(x) for x in self.b], "a0_t": pair(self.a0_t),
                "a_t": [pair(x) for x in self.a_t], "b_t": [pair(x) for x in self.b_t]}

    @classmethod
    def from_dict(cls, d):
        ps = cls(d["a0"], d["a"], d["b"], d["a0_t"], d["a_t"], d["b_t"])
        if "p" in d and int(d["p"]) != ps.p:
            raise ValueError(f"field p={d['p']} does not match the parameter lists (p={ps.p})")
        return ps


# ---------------------------------------------------------------- Condition C

@dataclass(frozen=True)
class Violation:
    clause: str
    label: str
    value: complex
    distance: float

    def describe(self):
        return f"({self.clause}) {self.label} = {self.value:.6g}, distance to integer {self.distance:.3g}"


@dataclass(frozen=True)
class ConditionReport:
    violations: tuple
    near_degenerate: tuple
    windows: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.violations

    @property
    def window_ok(self):
        return all(self.windows.values())

    def to_dict(self):
        v = lambda x: {"clause": x.clause, "label": x.label,
                       "value": [x.value.real, x.value.imag], "distance": x.distance}
        return {"ok": self.ok, "violations": [v(x) for x in self.violations],
                "near_degenerate": [v(x) for x in self.near_degenerate],
                "windows": dict(self.windows)}


def _integral_windows(ps):
    p = ps.p
    # psi_{p-1}: drop a_p and b_p
    psi1 = sum(ps.b[:-1]) - sum(ps.upper[:-1])
    psi1t = sum(ps.b_t[:-1]) - sum(ps.upper_t[:-1])
    ap, apt, bp, bpt = ps.a[-1], ps.a_t[-1], ps.b[-1], ps.b_t[-1]
    bs = (1.0,) + ps.b
    bst = (1.0,) + ps.b_t
    w = {
        "psi_{p-1} not integer": not sf.is_integer(psi1),
        "Re(psi_{p-1}+psi~_{p-1}) > -2": (psi1 + psi1t).real > -2,
        "Re(a_p+a~_p) > 0": (ap + apt).real > 0,
        "Re(b_p+b~_p-a_p-a~_p) > 0": (bp + bpt - ap - apt).real > 0,
        "Re(b_j+b~_j-a_p-a~_p) < 2": all((bs[j] + bst[j] - ap - apt).real < 2 for j in range(p)),
        "Re(b_p+b~_p-a_j-a~_j) < 2": all((bp + bpt - ps.upper[j] - ps.upper_t[j]).real < 2
                                        for j in range(p)),
    }
    return w


def validate(ps):
    """Check Condition C and report the convergence-window flags of the block sum."""
    p = ps.p
    items = []   # (clause, label, value, must_be_integer)
    A, At, B, Bt = ps.upper, ps.upper_t, ps.b, ps.b_t
    for i in range(p + 1):
        items.append(("a", f"a_{i}", A[i], False))
        items.append(("a", f"a~_{i}", At[i], False))
    for j in range(p):
        items.append(("a", f"b_{j+1}", B[j], False))
        items.append(("a", f"b~_{j+1}", Bt[j], False))
    for i in range(p + 1):
        for k in range(i + 1, p + 1):
            items.append(("b", f"a_{i}-a_{k}", A[i] - A[k], False))
            items.append(("b", f"a~_{i}-a~_{k}", At[i] - At[k], False))
    for i in range(p):
        for k in range(i + 1, p):
            items.append(("b", f"b_{i+1}-b_{k+1}", B[i] - B[k], False))
            items.append(("b", f"b~_{i+1}-b~_{k+1}", Bt[i] - Bt[k], False))
    for i in range(p + 1):
        for j in range(p):
            items.append(("c", f"a_{i}-b_{j+1}", A[i] - B[j], False))
            items.append(("c", f"a~_{i}-b~_{j+1}", At[i] - Bt[j], False))
    for i in range(p + 1):
        items.append(("d", f"a_{i}-a~_{i}", A[i] - At[i], True))
    for j in range(p):
        items.append(("d", f"b_{j+1}-b~_{j+1}", B[j] - Bt[j], True))
    viol, near = [], []
    for clause, label, val, want_int in items:
        d = sf.dist_to_int(val)
        if want_int:
            if d >= sf.NEAR_INT_TOL:
                viol.append(Violation(clause, label, val, d))
        else:
            if d < sf.NEAR_INT_TOL:
                viol.append(Violation(clause, label, val, d))
            elif d < NEAR_DEGENERATE_TOL:
                near.append(Violation(clause, label, val, d))
    return ConditionReport(tuple(viol), tuple(near), _integral_windows(ps))


def require_condition_c(ps):
    rep = validate(ps)
    if not rep.ok:
        raise ConditionCViolation(rep)
    if rep.near_degenerate:
        warnings.warn("near-degenerate parameters: "
                      + "; ".join(v.describe() for v in rep.near_degenerate),
                      NearDegenerateWarning, stacklevel=3)
    return rep


# ---------------------------------------------------------------- coefficients

class Basis(str, Enum):
    SmallZ_U = "SmallZ_U"
    LargeZ_W = "LargeZ_W"
    GBasis_V = "GBasis_V"


@dataclass(frozen=True)
class BlockDecomposition:
    basis: Basis
    coeffs: tuple
    params: ParameterSet
    prefactor: complex = 1.0 + 0j

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if len(self.coeffs) != self.params.p + 1:
            raise ValueError("coefficient vector must have length p+1")
        if not all(cmath.isfinite(c) for c in self.coeffs):
            raise ArithmeticError("non-finite block coefficient")


def _log_generalized_beta(al, be, alt, bet):
    """log B_{al,be;alt,bet} (any branch) and the checks of the closed form."""
    al, be, alt, bet = (complex(x) for x in (al, be, alt, bet))
    for name, d in (("alpha-alpha~", al - alt), ("beta-beta~", be - bet)):
        if not sf.is_integer(d):
            raise NonIntegerDifference(f"{name} = {d!r} is not an integer")
    for name, x in (("alpha", al), ("beta", be), ("alpha~", alt), ("beta~", bet),
                    ("alpha+beta", al + be), ("alpha~+beta~", alt + bet)):
        if sf.is_nonpositive_integer(x):
            raise GammaPole(f"{name} = {x!r}")
    if sf.is_integer(alt + bet):
        raise SineZero(f"alpha~+beta~ = {alt + bet!r} is an integer")
    if sf.is_integer(alt) or sf.is_integer(bet):
        return None
    lg = sf.log_gamma
    return (lg(al) + lg(be) - lg(al + be) + lg(alt) + lg(bet) - lg(alt + bet)
            + sf.sin_pi_log(alt) + sf.sin_pi_log(bet) - sf.sin_pi_log(alt + bet))


def generalized_beta(alpha, beta, alpha_t, beta_t):
    """Two-dimensional Euler integral

        B = int dx dy t^(alpha-1) (1-t)^(beta-1) tbar^(alpha_t-1) (1-tbar)^(beta_t-1)

    for alpha-alpha_t, beta-beta_t integers (the closed form continues it
    outside the convergence window).
    """
    lb = _log_generalized_beta(alpha, beta, alpha_t, beta_t)
    return 0j if lb is None else cmath.exp(lb)


def _beta_product(factors):
    """Product of generalized Euler functions evaluated in log space."""
    total = 0j
    for idx, f in enumerate(factors):
        try:
            lb = _log_generalized_beta(*f)
        except (GammaPole, SineZero, NonIntegerDifference) as exc:
            raise type(exc)(f"factor {idx}: {exc}") from None
        if lb is None:
            return None
        total += lb
    return total


def _exp_or_zero(lv, sign=1):
    return 0j if lv is None else sign * cmath.exp(lv)


def lambda_coeffs(ps):
    """Small-z block coefficients lambda_j."""
    require_condition_c(ps)
    return BlockDecomposition(Basis.SmallZ_U, _lambda_raw(ps), ps)


def _lambda_raw(ps):
    p = ps.p
    A, At, B, Bt = ps.a, ps.a_t, ps.b, ps.b_t
    out = [_exp_or_zero(_beta_product([(A[i], B[i] - A[i], At[i], Bt[i] - At[i])
                                        for i in range(p)]))]
    for j in range(p):
        facs = [(B[j] - 1, 1 - ps.a0, Bt[j] - 1, 1 - ps.a0_t)]
        facs += [(A[i] - B[j] + 1, B[i] - A[i], At[i] - Bt[j] + 1, Bt[i] - At[i])
                 for i in range(p) if i != j]
        sign = sf.int_parity_sign((B[j] - Bt[j]) - (A[j] - At[j]))
        out.append(_exp_or_zero(_beta_product(facs), sign))
    return out


def _dual_sign(ps):
    s = 0
    for i in range(ps.p):
        s += int(round(((ps.b[i] - ps.a[i]) - (ps.b_t[i] - ps.a_t[i])).real))
    return -1 if s % 2 else 1


def large_z_coeffs(ps):
    """Large-z block coefficients J_jj, in the basis w_j(z) w~_j(zbar).

    J_00 = prod_{i>=1} B_{b_i-a_i, a_i-a_0; b~_i-a~_i, a~_i-a~_0} and, for j >= 1,
    J_jj = B_{a_j, a_0-a_j; a~_j, a~_0-a~_j} prod_{i>=1, i!=j} B_{b_i-a_i, a_i-a_j; ...}.
    The literal published form carries an extra sine ratio and an i = 0 factor; the
    connection-formula assembly (``connection_matrix``) selects this one.
    """
    require_condition_c(ps)
    return BlockDecomposition(Basis.LargeZ_W, _large_z_raw(ps), ps)


def _large_z_raw(ps):
    p = ps.p
    A, At, B, Bt = ps.upper, ps.upper_t, (1.0,) + ps.b, (1.0,) + ps.b_t
    out = []
    for j in range(p + 1):
        facs = [(A[j], A[0] - A[j], At[j], At[0] - At[j])] if j else []
        facs += [(B[i] - A[i], A[i] - A[j], Bt[i] - At[i], At[i] - At[j])
                 for i in range(1, p + 1) if i != j]
        out.append(_exp_or_zero(_beta_product(facs)))
    return out


def _large_z_dual(ps):
    # z_i -> 1/z_i maps I_{p+1}(z) onto (-z)^{-a0} (-zbar)^{-a0~} times the
    # integral with dual exponents at 1/z, whose small-z blocks are the w_j
    lam = _lambda_raw(ps.dual())
    sigma = _dual_sign(ps)
    d0 = ps.a0 - ps.a0_t
    out = [sigma * lam[0]]
    for j in range(ps.p):
        out.append(sigma * sf.int_parity_sign((ps.a[j] - ps.a_t[j]) - d0) * lam[j + 1])
    return out


def large_z_coeffs_literal(ps):
    """J_jj in the literal published form (diagonal prefactor
    s(b~_j-a~_j)/s(a~_0-a~_j), product over i = 0..p with i != j).  Kept for
    comparison only; see large_z_coeffs for the values the connection
    formula produces."""
    p = ps.p
    A, At = ps.upper, ps.upper_t
    B, Bt = (1.0,) + ps.b, (1.0,) + ps.b_t
    out = [_exp_or_zero(_beta_product([(B[i] - A[i], A[i] - A[0], Bt[i] - At[i], At[i] - At[0])
                                       for i in range(1, p + 1)]))]
    for j in range(1, p + 1):
        facs = [(A[j], A[0] - A[j], At[j], At[0] - At[j])]
        facs += [(B[i] - A[i], A[i] - A[j], Bt[i] - At[i], At[i] - At[j])
                 for i in range(0, p + 1) if i != j]
        pref = sf.sin_pi(Bt[j] - At[j]) / sf.sin_pi(At[0] - At[j])
        out.append(pref * _exp_or_zero(_beta_product(facs)))
    return out


# ---------------------------------------------------------------- block functions

def _shifted(upper, lower, j):
    """Parameters of the j-th Frobenius solution at z = 0 (j >= 1)."""
    bj = lower[j - 1]
    up = [a - bj + 1 for a in upper]
    lo = [bi - bj + 1 for i, bi in enumerate(lower) if i != j - 1] + [2 - bj]
    return up, lo


def _u(upper, lower, j, z, log_z, tol, max_terms):
    if j == 0:
        return sf.pfq(upper, lower, z, tol, max_terms)
    up, lo = _shifted(upper, lower, j)
    r = sf.pfq(up, lo, z, tol, max_terms)
    pref = cmath.exp((1 - lower[j - 1]) * log_z)
    return sf.SeriesResult(pref * r.value, r.terms_used, abs(pref) * r.tail_bound, r.converged)


def _log_for(z, branch, log_z):
    if log_z is not None:
        return complex(log_z)
    z = complex(z)
    if branch == "cut":
        return complex(sf.log_cut(z))
    if branch == "principal":
        return cmath.log(z)
    raise ValueError("branch must be 'cut' or 'principal'")


def block_solution(ps, j, z, tol=sf.DEFAULT_TOL, tilde=False, branch="cut", log_z=None,
                   max_terms=sf.DEFAULT_MAX_TERMS):
    """u_j(z) (or u~_j with the tilded exponents when ``tilde``) for |z| < 1.

    u_0 = {}_{p+1}F_p(a_0, a; b; z) and
    u_j = z^{1-b_j} {}_{p+1}F_p(a_i-b_j+1; 1+b_i-b_j (i != j), 2-b_j; z).
    """
    if not 0 <= j <= ps.p:
        raise ValueError(f"block index j={j} outside 0..{ps.p}")
    upper, lower = (ps.upper_t, ps.b_t) if tilde else (ps.upper, ps.b)
    if j and z == 0:
        if (1 - lower[j - 1]).real > 0:
            return sf.SeriesResult(0j, 1, 0.0, True)
        raise Divergent("u_j(0) is singular for Re(1-b_j) <= 0")
    lz = _log_for(z, branch, log_z) if j else 0j
    return _u(list(upper), list(lower), j, complex(z), lz, tol, max_terms)


def w_solution(ps, j, z, tol=sf.DEFAULT_TOL, tilde=False, log_mz=None,
               max_terms=sf.DEFAULT_MAX_TERMS):
    """w_j(z) = (-z)^{-a_j} {}_{p+1}F_p(a_j, 1+a_j-b_i; 1+a_j-a_l (l != j); 1/z), |z| > 1."""
    upper, lower = (ps.upper_t, ps.b_t) if tilde else (ps.upper, ps.b)
    z = complex(z)
    aj = upper[j]
    if log_mz is None:
        log_mz = cmath.log(-z)
    up = [aj] + [1 + aj - b for b in lower]
    lo = [1 + aj - a for k, a in enumerate(upper) if k != j]
    r = sf.pfq(up, lo, 1.0 / z, tol, max_terms)
    pref = cmath.exp(-aj * log_mz)
    return sf.SeriesResult(pref * r.value, r.terms_used, abs(pref) * r.tail_bound, r.converged)


def _combine(pairs, coeffs, tol):
    value, tail, used, ok = 0j, 0.0, 0, True
    for c, (u, ut) in zip(coeffs, pairs):
        value += c * u.value * ut.value
        tail += abs(c) * (abs(u.value) * ut.tail_bound + abs(ut.value) * u.tail_bound
                          + u.tail_bound * ut.tail_bound)
        used += u.terms_used + ut.terms_used
        ok = ok and u.converged and ut.converged
    return sf.SeriesResult(value, used, tail, bool(ok))


def evaluate_small_z(ps, z, tol=sf.DEFAULT_TOL, zbar=None, log_z=None, log_zbar=None,
                     max_terms=sf.DEFAULT_MAX_TERMS):
    """I_{p+1}(z, zbar) from the small-z block sum, 0 < |z| < 1.

    ``zbar`` defaults to conj(z) and its logarithm to conj(log z); passing
    them explicitly treats z and zbar as independent variables.  Passing
    ``log_z`` (e.g. log z + 2 pi i) selects another sheet of the blocks.
    """
    require_condition_c(ps)
    z = complex(z)
    if z == 0 and zbar is None:
        if all((1 - b).real + (1 - bt).real > 0 for b, bt in zip(ps.b, ps.b_t)):
            lam = _lambda_raw(ps)
            return sf.SeriesResult(lam[0], 1, 0.0, True)
        raise Divergent("I_{p+1}(0) is singular for these exponents")
    if not 0 < abs(z) < 1:
        raise Divergent(f"|z| = {abs(z)} outside 0 < |z| < 1")
    zb = z.conjugate() if zbar is None else complex(zbar)
    lz = _log_for(z, "cut", log_z)
    if log_zbar is None:
        log_zbar = lz.conjugate() if zbar is None else _log_for(zb, "cut", None).conjugate()
    lam = _lambda_raw(ps)
    pairs = []
    for j in range(ps.p + 1):
        u = _u(list(ps.upper), list(ps.b), j, z, lz, tol, max_terms)
        ut = _u(list(ps.upper_t), list(ps.b_t), j, zb, complex(log_zbar), tol, max_terms)
        pairs.append((u, ut))
    return _combine(pairs, lam, tol)


def evaluate_large_z(ps, z, tol=sf.DEFAULT_TOL, max_terms=sf.DEFAULT_MAX_TERMS):
    """I_{p+1}(z, zbar) from the large-z block sum, |z| > 1.

    Each product w_j(z) w~_j(zbar) is single valued (a_j - a~_j is an
    integer), so real z > 1 is accepted as well.
    """
    require_condition_c(ps)
    z = complex(z)
    if abs(z) <= 1:
        raise Divergent(f"|z| = {abs(z)} <= 1")
    lmz = cmath.log(-z)
    J = _large_z_raw(ps)
    pairs = []
    for j in range(ps.p + 1):
        w = w_solution(ps, j, z, tol, False, lmz, max_terms)
        wt = w_solution(ps, j, z.conjugate(), tol, True, lmz.conjugate(), max_terms)
        pairs.append((w, wt))
    return _combine(pairs, J, tol)


def evaluate(ps, z, tol=sf.DEFAULT_TOL, max_terms=sf.DEFAULT_MAX_TERMS):
    """Closed-form I_{p+1}: small-z blocks for |z| < 1, large-z blocks for |z| > 1."""
    if abs(complex(z)) < 1:
        return evaluate_small_z(ps, z, tol, max_terms=max_terms)
    return evaluate_large_z(ps, z, tol, max_terms=max_terms)


def connection_matrix(ps):
    """Coefficient matrix J_{kl} of w_k(z) w~_l(zbar) obtained by expanding every
    small-z block u_j u~_j through the connection formula.  Single valuedness
    forces the off-diagonal entries to vanish."""
    require_condition_c(ps)
    p = ps.p
    lam = _lambda_raw(ps)

    def rows(upper, lower, conj):
        out = [sf.connection_coeffs(upper, lower)]
        for j in range(1, p + 1):
            up, lo = _shifted(upper, lower, j)
            # z^{1-b_j} (-z)^{b_j-1} = exp(+-i pi (1-b_j)) for 0 < arg z < 2 pi
            ph = cmath.exp((-1j if conj else 1j) * math.pi * (1 - lower[j - 1]))
            out.append([ph * c for c in sf.connection_coeffs(up, lo)])
        return np.array(out)

    T = rows(list(ps.upper), list(ps.b), False)
    Tt = rows(list(ps.upper_t), list(ps.b_t), True)
    return np.einsum("j,jk,jl->kl", np.array(lam), T, Tt)


# ---------------------------------------------------------------- G-basis

def _g_norm(upper, lower, j):
    """Gamma normalization turning u_j into its G-function form (b_0 = 1)."""
    bs = (1.0,) + tuple(lower)
    bj = bs[j]
    lv = sum(sf.log_gamma(a - bj + 1) for a in upper)
    lv -= sum(sf.log_gamma(bk - bj + 1) for k, bk in enumerate(bs) if k != j)
    return cmath.exp(lv)


def _w_norm(upper, lower, j):
    bs = (1.0,) + tuple(lower)
    aj = upper[j]
    lv = sum(sf.log_gamma(aj - b + 1) for b in bs)
    lv -= sum(sf.log_gamma(aj - a + 1) for i, a in enumerate(upper) if i != j)
    return cmath.exp(lv)


def mu_top(ps):
    """mu_{p+1} = pi^-2 (-1)^{a_0-a~_0} prod_{i=0..p} Gamma(b_i-a_i) Gamma(b~_i-a~_i) S(b_i-a_i)."""
    B, Bt = (1.0,) + ps.b, (1.0,) + ps.b_t
    A, At = ps.upper, ps.upper_t
    lv = -2 * math.log(math.pi)
    for i in range(ps.p + 1):
        lv += sf.log_gamma(B[i] - A[i]) + sf.log_gamma(Bt[i] - At[i]) + sf.sin_pi_log(B[i] - A[i])
    return sf.int_parity_sign(ps.a0 - ps.a0_t) * cmath.exp(lv)


def _mu_raw(upper, lower):
    B = (1.0,) + tuple(lower)
    out = []
    for j in range(len(B)):
        num = np.prod([sf.sin_pi(B[j] - a) for a in upper])
        den = np.prod([sf.sin_pi(B[j] - B[i]) for i in range(len(B)) if i != j])
        out.append(complex(num / den))
    return out


def _rho_raw(upper, lower):
    B = (1.0,) + tuple(lower)
    out = []
    for j in range(len(upper)):
        num = np.prod([sf.sin_pi(b - upper[j]) for b in B])
        den = np.prod([sf.sin_pi(upper[i] - upper[j]) for i in range(len(upper)) if i != j])
        out.append(complex(num / den))
    return out


def g_basis_coeffs(ps):
    """mu_j in I = mu_{p+1} sum_j mu_j V_j(z) V~_j(zbar), V_j the G-normalized u_j.

    ``prefactor`` holds mu_{p+1}.
    """
    require_condition_c(ps)
    return BlockDecomposition(Basis.GBasis_V, _mu_raw(ps.upper, ps.b), ps, mu_top(ps))


def nu_coeffs(ps):
    """nu_j in I = sum_j nu_j W_j(z) W~_j(zbar) for |z| > 1, with
    W_j = z^{-a_j} {}_{p+1}G_p(a_j, 1+a_j-b_i; 1+a_j-a_l; 1/z) and
    nu_j = (-1)^{psi-psi~} mu_{p+1} prod_{i=0..p} S(b_i-a_j) / prod_{i!=j} S(a_i-a_j)."""
    require_condition_c(ps)
    sign = sf.int_parity_sign(ps.psi - ps.psi_t)
    m = mu_top(ps)
    return BlockDecomposition(Basis.LargeZ_W, [sign * m * r for r in _rho_raw(ps.upper, ps.b)], ps)


def evaluate_g_basis(ps, z, tol=sf.DEFAULT_TOL, max_terms=sf.DEFAULT_MAX_TERMS):
    """I_{p+1} for 0 < |z| < 1 from the mu/V form."""
    dec = g_basis_coeffs(ps)
    z = complex(z)
    lz = _log_for(z, "cut", None)
    pairs = []
    for j in range(ps.p + 1):
        u = _u(list(ps.upper), list(ps.b), j, z, lz, tol, max_terms)
        ut = _u(list(ps.upper_t), list(ps.b_t), j, z.conjugate(), lz.conjugate(), tol, max_terms)
        n, nt = _g_norm(ps.upper, ps.b, j), _g_norm(ps.upper_t, ps.b_t, j)
        pairs.append((_scale(u, n), _scale(ut, nt)))
    return _combine(pairs, [dec.prefactor * c for c in dec.coeffs], tol)


def evaluate_nu_basis(ps, z, tol=sf.DEFAULT_TOL, max_terms=sf.DEFAULT_MAX_TERMS):
    """I_{p+1} for |z| > 1 from the nu/W form."""
    dec = nu_coeffs(ps)
    z = complex(z)
    if abs(z) <= 1:
        raise Divergent(f"|z| = {abs(z)} <= 1")
    lz = _log_for(z, "cut", None)
    pairs = []
    for j in range(ps.p + 1):
        # W_j carries z^{-a_j} rather than (-z)^{-a_j}
        w = w_solution(ps, j, z, tol, False, lz, max_terms)
        wt = w_solution(ps, j, z.conjugate(), tol, True, lz.conjugate(), max_terms)
        n, nt = _w_norm(ps.upper, ps.b, j), _w_norm(ps.upper_t, ps.b_t, j)
        pairs.append((_scale(w, n), _scale(wt, nt)))
    return _combine(pairs, dec.coeffs, tol)


def _scale(r, c):
    return sf.SeriesResult(c * r.value, r.terms_used, abs(c) * r.tail_bound, r.converged)


# ---------------------------------------------------------------- residue identity

@dataclass(frozen=True)
class ResidueIdentity:
    lhs: np.ndarray     # B_{n,k}, n, k = 0..p
    rhs: np.ndarray     # delta-structured closed form


def residue_identity(x, y, tol=1e-9):
    """Both sides of the rational identity behind the off-diagonal cancellation:

        B_{n,k} = prod_i (1-x_i)/(1-y_i)
                  + sum_j (1-x_n)(1-x_k)(x_0-y_j)(y_j-x_j) / ((1-y_j)(1-x_0)(y_j-x_n)(y_j-x_k))
                          prod_{i!=j} (x_i-y_j)/(y_i-y_j)
                = delta_{nk} u_n prod_{i!=n} (u_n-u_i) / (u_0 prod_i (u_n-z_i)),

    with u_i = x_i - 1 (i = 0..p) and z_i = y_i - 1 (i = 1..p).
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    p = len(y)
    if len(x) != p + 1:
        raise ValueError("x needs p+1 entries and y p entries")
    pts = np.concatenate([x, y])
    for i in range(len(pts)):
        if abs(pts[i] - 1) < tol:
            raise DegeneratePoints(f"point {pts[i]!r} coincides with 1")
        for k in range(i + 1, len(pts)):
            if abs(pts[i] - pts[k]) < tol:
                raise DegeneratePoints(f"points {pts[i]!r} and {pts[k]!r} coincide")
    u, zz = x - 1, y - 1
    xs, ys = x[1:], y
    base = np.prod((1 - xs) / (1 - ys))
    lhs = np.empty((p + 1, p + 1), dtype=complex)
    for n in range(p + 1):
        for k in range(p + 1):
            s = base
            for j in range(p):
                others = [i for i in range(p) if i != j]
                prod = np.prod([(xs[i] - ys[j]) / (ys[i] - ys[j]) for i in others])
                s += ((1 - x[n]) * (1 - x[k]) * (x[0] - ys[j]) * (ys[j] - xs[j])
                      / ((1 - ys[j]) * (1 - x[0]) * (ys[j] - x[n]) * (ys[j] - x[k])) * prod)
            lhs[n, k] = s
    rhs = np.zeros((p + 1, p + 1), dtype=complex)
    for n in range(p + 1):
        num = u[n] * np.prod([u[n] - u[i] for i in range(p + 1) if i != n])
        rhs[n, n] = num / (u[0] * np.prod(u[n] - zz))
    return ResidueIdentity(lhs, rhs)


# ---------------------------------------------------------------- differential operators

def _operator_polys(upper, lower):
    """Coefficient polynomials P_k(z) of the operator
    d/dz prod_i (z d/dz + b_i - 1) - prod_i (z d/dz + a_i) = sum_k P_k(z) d^k/dz^k."""
    P = np.polynomial.Polynomial

    def theta_prod(shifts):
        ops = [P([1])]          # ops[k] multiplies d^k
        for c in shifts:
            new = [P([0])] * (len(ops) + 1)
            for k, q in enumerate(ops):
                # (z d + c)(q d^k) = (z q' + c q) d^k + z q d^{k+1}
                new[k] = new[k] + P([0, 1]) * q.deriv() + c * q
                new[k + 1] = new[k + 1] + P([0, 1]) * q
            ops = new
        return ops

    left = theta_prod([b - 1 for b in lower])
    d_left = [P([0])] * (len(left) + 1)
    for k, q in enumerate(left):
        d_left[k] = d_left[k] + q.deriv()
        d_left[k + 1] = d_left[k + 1] + q
    right = theta_prod(list(upper))
    n = max(len(d_left), len(right))
    out = []
    for k in range(n):
        a = d_left[k] if k < len(d_left) else P([0])
        b = right[k] if k < len(right) else P([0])
        out.append(a - b)
    return out


# central 5-point stencils for derivatives 0..4
_STENCIL = {0: np.array([0, 0, 1, 0, 0], float),
            1: np.array([1, -8, 0, 8, -1], float) / 12,
            2: np.array([-1, 16, -30, 16, -1], float) / 12,
            3: np.array([-1, 2, 0, -2, 1], float) / 2,
            4: np.array([1, -4, 6, -4, 1], float)}


def _fd_derivs(f, z, h, order):
    vals = np.array([f(z + k * h) for k in range(-2, 3)], dtype=complex)
    return [complex(_STENCIL[m] @ vals) / h ** m for m in range(order + 1)]


def _apply_operator(polys, derivs, z):
    terms = [complex(q(z)) * d for q, d in zip(polys, derivs)]
    return sum(terms), sum(abs(t) for t in terms)


@dataclass(frozen=True)
class FDResidual:
    """Finite-difference residual of an exact identity.

    The residual combines steps h and 2h by Richardson extrapolation.
    ``relative`` is max over the grid of |residual| / scale, with scale the sum of
    the magnitudes of the individual terms; ``fd_error`` is the relative size of
    the discretization error removed by the extrapolation."""
    max_abs: float
    relative: float
    fd_error: float


def _fd_check(pointwise, points, h, limit):
    worst_abs = worst_rel = worst_err = 0.0
    for pt in points:
        r1, s1 = pointwise(pt, h)
        r2, _ = pointwise(pt, 2 * h)
        err = abs(r2 - r1) / 3 / s1
        r = (4 * r1 - r2) / 3
        worst_abs = max(worst_abs, abs(r))
        worst_rel = max(worst_rel, abs(r) / s1)
        worst_err = max(worst_err, err)
    if worst_err > limit:
        raise StepTooLarge(f"finite-difference error estimate {worst_err:.3g} exceeds {limit:.3g}")
    return FDResidual(float(worst_abs), float(worst_rel), float(worst_err))


def ode_residual(ps, zs, h=3e-3, tilde=False, limit=1e-2):
    """Residual of the order p+1 operator applied to evaluate_small_z in z (zbar
    held fixed), or to the zbar dependence with the tilded operator when ``tilde``."""
    upper, lower = (ps.upper_t, ps.b_t) if tilde else (ps.upper, ps.b)
    polys = _operator_polys(upper, lower)
    order = len(polys) - 1
    if order > 4:
        raise ValueError("5-point stencils support p <= 3")

    def pointwise(z0, step):
        z0 = complex(z0)
        lz0 = _log_for(z0, "cut", None)
        fixed, lfixed = z0.conjugate(), lz0.conjugate()

        def f(z):
            lz = lz0 + cmath.log(z / z0)    # continuous branch near z0
            if tilde:
                return evaluate_small_z(ps, fixed, zbar=z, log_z=lfixed,
                                        log_zbar=lz).value
            return evaluate_small_z(ps, z, zbar=fixed, log_z=lz, log_zbar=lfixed).value

        return _apply_operator(polys, _fd_derivs(f, z0, step * abs(z0), order), z0)

    return _fd_check(pointwise, zs, h, limit)


def lemma4_residual(ps, j, grid, h=3e-3, limit=1e-2):
    """Residual of

        O_z H_j = -prod_{i=0}^{p-1} (a_i - b_j + 1) d/dz_p K_j(a_0+1, a+1, b)

    with H_j = z_p^{a_p-1} (1-z_p)^{b_p-a_p-1} u_j(a_0, a^{p-1}, b^{p-1}; z z_p) and
    K_j = z_p^{a_p-1} (1-z_p)^{b_p-a_p+1} u_j(...) at shifted exponents (b_0 = 1).
    ``grid`` is an iterable of (z, z_p) pairs; powers use the principal branch.
    """
    p = ps.p
    if not 0 <= j <= p - 1:
        raise ValueError(f"j={j} outside 0..{p - 1}")
    polys = _operator_polys(ps.upper, ps.b)
    order = len(polys) - 1
    up0 = list(ps.upper[:-1])
    lo0 = list(ps.b[:-1])
    ap, bp = ps.a[-1], ps.b[-1]
    bj = 1.0 if j == 0 else ps.b[j - 1]
    coef = np.prod([a - bj + 1 for a in up0])

    def uj(upper, lower, x):
        x = complex(x)
        return _u(upper, lower, j, x, cmath.log(x), sf.DEFAULT_TOL, sf.DEFAULT_MAX_TERMS).value

    def H(z, zp):
        return zp ** (ap - 1) * (1 - zp) ** (bp - ap - 1) * uj(up0, lo0, z * zp)

    def K(z, zp):
        # shifted exponents a -> a+1 (a_p included)
        return zp ** ap * (1 - zp) ** (bp - ap) * uj([a + 1 for a in up0], lo0, z * zp)

    def pointwise(pt, step):
        z0, zp0 = complex(pt[0]), complex(pt[1])
        lhs, scale = _apply_operator(polys, _fd_derivs(lambda z: H(z, zp0), z0, step * abs(z0),
                                                       order), z0)
        dK = _fd_derivs(lambda zp: K(z0, zp), zp0, step * abs(zp0), 1)[1]
        rhs = -coef * dK
        return lhs - rhs, scale + abs(rhs)

    return _fd_check(pointwise, grid, h, limit)
