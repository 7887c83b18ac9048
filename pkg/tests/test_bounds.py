import math

import mpmath as mp
import numpy as np
import pytest

from jtdecoder.bounds import (
    RegimeParams,
    RegimeReport,
    binary_entropy,
    crb_gae,
    delta_from_zeta,
    eig_deviation_bound,
    f_endpoints,
    f_exponent,
    false_typicality_bound,
    miss_typicality_bound,
    union_bound_constant,
    validate_regime,
)
from jtdecoder.errors import DomainError, RegimeError
from jtdecoder.model import gen_gaussian_matrix


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b))


def test_crb_scaled_orthonormal():
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((16, 4)))
    assert math.isclose(crb_gae(4.0 * q, range(4), 1.0), 0.25, rel_tol=1e-12)


def test_crb_zero_noise():
    assert crb_gae(gen_gaussian_matrix(8, 10, 0), (1, 2), 0.0) == 0.0


def test_crb_explicit_inverse():
    A = gen_gaussian_matrix(16, 20, 5).entries
    I = (2, 7, 11)  # noqa: E741
    AI = A[:, list(I)]
    expected = 0.3 * np.trace(np.linalg.inv(AI.T @ AI))
    assert math.isclose(crb_gae(A, I, 0.3), expected, rel_tol=1e-9)


@pytest.mark.parametrize(
    "p,expected",
    [(0.5, math.log(2)), (0.0, 0.0), (1.0, 0.0), (0.25, 0.5623351446188083)],
)
def test_binary_entropy(p, expected):
    assert math.isclose(binary_entropy(p), expected, rel_tol=1e-12, abs_tol=1e-300)


def test_binary_entropy_matches_summation():
    for p in np.linspace(0.01, 0.99, 37):
        direct = -sum(q * math.log(q) for q in (p, 1 - p))
        assert math.isclose(binary_entropy(p), direct, rel_tol=1e-13)


def test_binary_entropy_domain():
    with pytest.raises(DomainError):
        binary_entropy(1.5)


def test_miss_bound_plug_in():
    # exponent (0.25/4) * 1e4 / 190 = 3.28947...
    assert math.isclose(miss_typicality_bound(100, 10, 1.0, 0.5), 0.07454692369217999, rel_tol=1e-12)


def test_miss_bound_vanishes_with_delta():
    vals = [miss_typicality_bound(50, 5, 1.0, d) for d in (0.1, 1, 10, 100, 1e4)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-100


def test_miss_bound_non_increasing_in_n():
    vals = [miss_typicality_bound(n, 10, 1.0, 0.5) for n in range(20, 201)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_false_bound_plug_in():
    assert math.isclose(false_typicality_bound(40, 4, 1.0, 1.0, 0.8), math.exp(-0.09), rel_tol=1e-13)


def test_false_bound_large_energy_limit():
    b = false_typicality_bound(40, 4, 1e12, 1.0, 0.8)
    assert math.isclose(math.log(b), -(40 - 4) / 4, rel_tol=1e-9)


def test_false_bound_precondition():
    with pytest.raises(DomainError):
        false_typicality_bound(40, 4, 1.0, 1.0, 1.0)


def test_eig_bound_zero_epsilon():
    assert eig_deviation_bound(100, 0.1, 4, 0.0) == 1.0


def test_eig_bound_plug_in():
    mp.mp.dps = 30
    a = mp.mpf("0.1")
    h = -(mp.mpf(1) / 4) * mp.log(mp.mpf(1) / 4) - (mp.mpf(3) / 4) * mp.log(mp.mpf(3) / 4)
    oracle = mp.e ** (-80 * mp.sqrt(h) / mp.sqrt(a * 4) * mp.sqrt(2 * a))
    assert math.isclose(eig_deviation_bound(160, 0.1, 4, math.sqrt(0.2)), float(oracle), rel_tol=1e-12)


def test_eig_bound_decreasing_in_m():
    vals = [eig_deviation_bound(m, 0.1, 4, 0.3) for m in range(10, 400, 10)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_f_endpoint_identities():
    args = dict(l=64, beta=4.0, c0=4.0, mu2=0.5, delta_prime=0.4, sigma2=1.0)
    lo, hi = f_endpoints(**args)
    assert rel(f_exponent(1 / 64, **args), lo) < 1e-12
    assert rel(f_exponent(1.0, **args), hi) < 1e-12


def test_f_maximum_at_endpoint_on_grid():
    args = dict(l=64, beta=4.0, c0=4.0, mu2=0.5, delta_prime=0.4, sigma2=1.0)
    vals = [f_exponent(k / 64, **args) for k in range(1, 65)]
    assert int(np.argmax(vals)) in (0, 63)


def test_f_domain():
    with pytest.raises(DomainError):
        f_exponent(0.0, 4, 3.0, 1.0, 1.0, 0.5, 1.0)


def test_f_endpoints_diverge_linearly_when_c0_large():
    # leading coefficient in L of both endpoints is 2 + log(beta-1) - c0 * ratio^2 -> negative
    beta, mu2, dp, s2 = 4.0, 1.0, 0.8, 0.25
    c0 = 2 + math.log(beta - 1) + 40.0
    lows = [f_endpoints(l, beta, c0, mu2, dp, s2)[0] for l in (100, 200, 400)]
    highs = [f_endpoints(l, beta, c0, mu2, dp, s2)[1] for l in (100, 200, 400)]
    assert lows[0] > lows[1] > lows[2] and highs[0] > highs[1] > highs[2]
    assert math.isclose(lows[2] - lows[1], 2 * (lows[1] - lows[0]), rel_tol=1e-2)


def test_union_bound_constant_small_alpha():
    assert math.isclose(union_bound_constant(2.5, 1e-14, 1.0), 2.5, rel_tol=1e-5)


def test_union_bound_constant_plug_in():
    assert math.isclose(union_bound_constant(1.0, 1 / 9, 1.0), 719586.9008304638, rel_tol=1e-9)


def test_union_bound_constant_pole():
    with pytest.raises(RegimeError):
        union_bound_constant(1.0, 1 / 8, 1.0)


def test_delta_from_zeta():
    d, dp = delta_from_zeta(0.8, 1.0, 100, 10)
    assert math.isclose(d, 0.72, rel_tol=1e-15) and dp == 0.8
    d, dp = delta_from_zeta(0.8, 1.0, 10**12, 10)
    assert math.isclose(d, dp, rel_tol=1e-10)
    with pytest.raises(RegimeError):
        delta_from_zeta(0.5, 1.0, 100, 10)


def test_delta_from_zeta_round_trip():
    for zeta, mu, n, l in [(0.8, 1.0, 100, 10), (0.7, 0.3, 41, 7), (0.99, 2.5, 1000, 999)]:  # noqa: E741
        d, dp = delta_from_zeta(zeta, mu, n, l)
        assert abs(d * n / (n - l) - zeta * mu**2) <= 1e-15 * max(1.0, zeta * mu**2)


def _check(report, name):
    return next(c for c in report.checks if c.name == name)


def test_regime_c1_boundary_fails():
    l = 4  # noqa: E741
    rep = validate_regime(RegimeParams(n=19 * l, m=3 * l, l=l, sigma2=1.0, mu=1.0, kappa=1.0), x_norm_sq=l)
    assert rep.c1 == 19.0
    c = _check(rep, "n_gt_c1_l")
    assert not c.passed and c.margin == 0.0
    assert not rep.passed


def test_regime_c2_at_beta_3():
    rep = validate_regime(RegimeParams(n=1000, m=30, l=10, sigma2=1.0, mu=1.0), x_norm_sq=10)
    assert abs(rep.c2 - 11.772588722239782) <= 1e-12 * 11.77


def test_regime_documented_example():
    # N=1280, L=16, M=64, sigma2=0.25, mu=1, kappa=1, zeta=0.8 evaluated check by check
    rep = validate_regime(RegimeParams(n=1280, m=64, l=16, sigma2=0.25, mu=1.0, kappa=1.0, zeta=0.8), x_norm_sq=16.0)
    assert math.isclose(rep.c0, 1264 / 64) and math.isclose(rep.c1, 2.125)
    assert math.isclose(rep.c_exponent, 0.64 * 19.75 / (2 * 0.0625))
    verdict = {c.name: c.passed for c in rep.checks}
    assert verdict == {
        "beta_gt_2": True,
        "n_gt_c1_l": True,
        "n_gt_c2_l": True,
        "alpha_lt_1_9": True,
        "sigma2_ge_2_zeta_mu2": False,  # 0.25 < 2 * 0.8
        "c_gt_kappa": True,
        "norm_sq_le_l_pow_kappa": True,  # 16 <= 16
        "growth_l_mu4_over_log_l": False,  # 16 / log 16 = 5.77 < 10
    }
    assert not rep.passed


def test_regime_all_pass():
    rep = validate_regime(
        RegimeParams(n=2000, m=64, l=16, sigma2=4.0, mu=1.0, kappa=1.0, zeta=0.8, growth_threshold=5.0),
        x_norm_sq=16.0,
    )
    # C1 = 18*16+1 = 289 -> N must exceed 4624
    assert not _check(rep, "n_gt_c1_l").passed
    rep = validate_regime(
        RegimeParams(n=5000, m=64, l=16, sigma2=4.0, mu=1.0, kappa=1.0, zeta=0.8, growth_threshold=5.0),
        x_norm_sq=16.0,
    )
    assert rep.passed, rep.checks


def test_regime_report_round_trip():
    rep = validate_regime(RegimeParams(n=100, m=40, l=5, sigma2=0.5, mu=1.0), x_norm_sq=5.0)
    assert RegimeReport.from_dict(rep.to_dict()) == rep
