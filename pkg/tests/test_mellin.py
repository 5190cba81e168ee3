import warnings

import mpmath as mp
import numpy as np
import pytest

from conformal_blocks import mellin as me
from conformal_blocks.blocks import ParameterSet, generalized_beta
from conformal_blocks.errors import InputError, NonConvergent, PoleCollision, TruncationCapHit

# kappa = 7.6: both residue series converge at w = 1
PS1 = ParameterSet(-2.3, [0.4], [1.6], -2.3, [0.4], [0.6])
PS2 = ParameterSet(-2.3, [0.4, 0.3], [1.6, 1.75], -2.3, [0.4, 0.3], [0.6, 0.75])
# p = 2 inside the window of the direct integral
PS2W = ParameterSet(0.3, [0.4, 0.35], [1.2, 1.25], 0.3, [0.4, 0.35], [1.2, 1.25])


def test_right_sum_simple_kernel_against_direct_series():
    # K = Gamma(-t) / Gamma(b - t) / (t + beta) w^(2(beta + t)):
    # f_R = sum_n (-1)^n / (n! Gamma(b - n) (n + beta)) w^(2(beta + n))
    b, beta, w = 0.37 + 0.2j, 0.45, 0.8
    k = me.GammaRatioKernel((0,), (), (b,), (), beta)
    ref = mp.nsum(lambda n: (-1) ** n * mp.rgamma(b - n) / (mp.factorial(n) * (n + beta))
                  * mp.mpf(w) ** (2 * (beta + n)), [0, mp.inf])
    r = me.residue_sum_right(k, w)
    assert r.converged and abs(r.value - complex(ref)) < 1e-12 * abs(complex(ref))


def test_left_sum_simple_kernel_against_direct_series():
    # K = Gamma(d + t) / Gamma(f + t) / (t + beta) w^(2(beta + t)), poles t = -d - n and -beta
    d, f, beta, w = 0.3, 1.45 + 0.1j, 0.7, 1.3
    k = me.GammaRatioKernel((), (d,), (), (f,), beta)
    fam = mp.nsum(lambda n: (-1) ** n * mp.rgamma(f - d - n) / (mp.factorial(n) * (beta - d - n))
                  * mp.mpf(w) ** (2 * (beta - d - n)), [0, mp.inf])
    pole = mp.gamma(d - beta) * mp.rgamma(f - beta)
    r = me.residue_sum_left(k, w)
    assert abs(r.value - complex(fam + pole)) < 1e-12 * abs(complex(fam + pole))


def test_empty_kernel_sums_to_zero():
    k = me.GammaRatioKernel((), (), (), (), 0.5)
    assert me.residue_sum_left(k, 2.0, include_beta=False).value == 0
    assert me.residue_sum_right(k, 0.5).value == 0


def test_kernel_errors():
    with pytest.raises(InputError):
        me.GammaRatioKernel((0.1,), (), (), ())
    with pytest.raises(PoleCollision):
        me.GammaRatioKernel((0.1, 2.1), (), (0.5, 0.7), ())
    with pytest.raises(PoleCollision):
        me.GammaRatioKernel((0.5,), (-1.5,), (0.2,), (0.3,))    # t = 0.5 + n meets t = 1.5 - n
    k = me.appendix_kernel(PS1)
    with pytest.raises(NonConvergent):
        me.residue_sum_right(k, 1.5)
    with pytest.raises(NonConvergent):
        me.residue_sum_left(k, 0.5)


def test_nonabsolute_convergence_at_one_is_rejected():
    # kappa = 3 - a_0 - a~_0 = 0.6
    ps = ParameterSet(1.2, [0.35], [1.3], 1.2, [0.35], [1.3])
    k = me.appendix_kernel(ps)
    assert k.decay_exponent.real <= 1
    with pytest.raises(NonConvergent):
        me.residue_sum_right(k, 1.0)
    with pytest.raises(NonConvergent):
        me.boundary_value_limit(ps)


def test_truncation_cap_warns():
    k = me.appendix_kernel(PS2W)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        r = me.residue_sum_right(k, 1 - 1e-4, max_terms=10)
    assert not r.converged
    assert any(issubclass(c.category, TruncationCapHit) for c in caught)


@pytest.mark.parametrize("ps", [PS1, PS2])
def test_right_equals_left_at_one(ps):
    k = me.appendix_kernel(ps)
    assert k.decay_exponent.real > 1
    r = me.residue_sum_right(k, 1.0)
    l = me.residue_sum_left(k, 1.0)
    assert abs(r.value - l.value) <= 1e-8 * abs(r.value)


@pytest.mark.parametrize("ps", [PS1, PS2, PS2W])
def test_closed_form_matches_lambda_form(ps):
    bv = me.boundary_value_closed_form(ps)
    assert abs(bv.value - bv.lambda_form) < 1e-12 * abs(bv.value)


@pytest.mark.parametrize("ps", [PS1, PS2W])
def test_limit_matches_closed_form(ps):
    bv = me.boundary_value_closed_form(ps)
    lim = me.boundary_value_limit(ps)
    assert abs(lim.value - bv.value) < 1e-6 * abs(bv.value)
    assert lim.abs_error < 1e-6 * abs(bv.value)


def test_closed_form_is_the_beta_residue():
    k = me.appendix_kernel(PS1)
    assert abs(k.beta_residue() - me.boundary_value_closed_form(PS1).value) < 1e-12 * abs(k.beta_residue())


def test_hypothesis_enforced():
    ps = ParameterSet(0.3, [0.4, 0.35], [1.2, 1.25], 0.3, [0.4, 0.35], [0.2, 1.25])
    with pytest.raises(InputError):
        me.appendix_kernel(ps)


def test_euler_recovery_random():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = complex(rng.uniform(-2, 2), rng.uniform(-1, 1))
        b = complex(rng.uniform(-2, 2), rng.uniform(-1, 1))
        at, bt = a + int(rng.integers(-2, 3)), b + int(rng.integers(-2, 3))
        e = me.euler_recovery(a, b, at, bt)
        g = generalized_beta(a, b, at, bt)
        assert abs(e - g) <= 1e-10 * abs(g)
