import math

import numpy as np
import pytest
from scipy import stats as sps

from airylab import stats
from airylab.errors import ArgumentError, ConfigError

# published values of the GUE Tracy-Widom law
TW_MEAN = -1.7710868074
TW_VAR = 0.8131947928
TW_AT = {-2.0: 0.4132241425, 0.0: 0.9693728284}
# left-tail constant (1/24) log 2 + zeta'(-1)
TAIL_C = math.log(2) / 24 - 0.1654211437


@pytest.mark.parametrize("s", sorted(TW_AT))
def test_tracy_widom_values(s):
    assert stats.tracy_widom_cdf(s) == pytest.approx(TW_AT[s], abs=1e-9)


def test_tracy_widom_moments():
    m, v = stats.tracy_widom().moments()
    assert m == pytest.approx(TW_MEAN, abs=1e-6)
    assert v == pytest.approx(TW_VAR, abs=1e-6)


@pytest.mark.parametrize("s", [-6.0, -8.0, -9.5])
def test_left_tail(s):
    logf = math.log(stats.tracy_widom_cdf(s))
    assert logf == pytest.approx(-abs(s) ** 3 / 12 - math.log(abs(s)) / 8 + TAIL_C, abs=5e-4)


def test_right_tail_ratio_tends_to_one():
    ratios = []
    for s in (3.0, 4.0, 5.0):
        tail = 1 - stats.tracy_widom_cdf(s)
        ratios.append(tail / (math.exp(-4 / 3 * s**1.5) / (16 * math.pi * s**1.5)))
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert 0.85 < ratios[-1] < 1.0


def test_order_doubling_is_stable():
    a = stats.tracy_widom_cdf(-3.0, stats.FredholmConfig(order=40))
    b = stats.tracy_widom_cdf(-3.0, stats.FredholmConfig(order=80))
    assert abs(a - b) < 1e-12


def test_table_is_monotone_and_interpolates():
    tw = stats.tracy_widom()
    assert np.all(np.diff(tw.values) >= 0)
    assert tw.cdf(-2.0) == pytest.approx(TW_AT[-2.0], abs=1e-9)
    assert tw.cdf(-11.0) == 0.0 and tw.cdf(7.0) == 1.0
    assert tw.ppf(tw.cdf(-1.3)) == pytest.approx(-1.3, abs=2e-3)
    assert tw.pdf(-1.5) > 0


def test_fredholm_config_limits():
    with pytest.raises(ConfigError):
        stats.FredholmConfig(order=4)
    with pytest.raises(ArgumentError):
        stats.tracy_widom_cdf(20.0)


def test_tv_distance_extremes():
    a = {(0, 1): 0.5, (1, 2): 0.5}
    assert stats.tv_distance(a, a) == 0.0
    assert stats.tv_distance(a, {(5, 6): 1.0}) == 1.0
    with pytest.raises(ArgumentError):
        stats.tv_distance(a, {(0,): 1.0})


def test_pmf_from_samples():
    law = stats.pmf_from_samples(np.array([[0, 1], [0, 1], [1, 2], [0, 1]]))
    assert law == {(0, 1): 0.75, (1, 2): 0.25}


def test_ks_on_a_sample_from_the_reference_law():
    rng = np.random.default_rng(1)
    res = stats.empirical_compare(stats.EmpiricalLaw(rng.standard_normal(5000)),
                                  sps.norm.cdf)
    assert res["ks"] < 0.03 and res["ks_pvalue"] > 0.01
    shifted = stats.empirical_compare(stats.EmpiricalLaw(rng.standard_normal(5000) + 1),
                                      sps.norm.cdf)
    assert shifted["ks"] > 0.3


def test_tracy_widom_sample_passes_ks():
    tw = stats.tracy_widom()
    rng = np.random.default_rng(2)
    sample = tw.ppf(rng.uniform(1e-6, 1 - 1e-6, 3000))
    assert stats.empirical_compare(stats.EmpiricalLaw(sample), tw)["ks"] < 0.03


def test_empirical_input_checks():
    with pytest.raises(ArgumentError):
        stats.EmpiricalLaw([0.0, float("nan")])
    with pytest.raises(ArgumentError):
        stats.empirical_compare(np.array([3.0, 1.0] * 60), stats.tracy_widom())
    with pytest.raises(ArgumentError):
        stats.empirical_compare(np.arange(50.0), stats.tracy_widom())


def test_report_is_json():
    import json
    d = json.loads(stats.report("ks", 0.05, 0.1, True, n=3))
    assert d == {"test": "ks", "statistic": 0.05, "threshold": 0.1, "pass": True, "n": 3}


def test_counting_check_small():
    reps = stats.counting_intensity_check(2, 1.0, [3], lambda t: range(2, 5), 20000, seed=4,
                                          guard_horizon=60)
    r = reps[0]
    assert abs(r.mc_mean - r.kernel_mean) < 0.03
    assert abs(r.mc_pairs - r.kernel_pairs) < 0.06
    with pytest.raises(ConfigError):
        stats.counting_intensity_check(2, 1.0, [6], lambda t: [0], 10, seed=1, guard_horizon=20)


def test_edge_sample_is_deterministic():
    a = stats.lpp_edge_sample("exponential", 10, seed=3, replicas=50)
    b = stats.lpp_edge_sample("exponential", 10, seed=3, replicas=50)
    assert np.array_equal(a.values, b.values)
