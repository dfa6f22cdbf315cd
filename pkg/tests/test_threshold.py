import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavegrid.pipeline import discontinuous_field
from wavegrid.threshold import ThresholdError, ThresholdSpec, apply_threshold, band_threshold, threshold_field
from wavegrid.wavelet import WaveletPlan, dwt_nd, idwt_nd, trapezoid_mass


def coeffs_of(shape=(33, 33), levels=3, seed=0):
    f = np.random.default_rng(seed).normal(size=shape)
    return dwt_nd(f, WaveletPlan(shape, levels))


def test_constant_mode():
    spec = ThresholdSpec(0.01, "constant")
    for scales in [(0, 0), (3, 1), (5,), (2, 2, 2)]:
        assert band_threshold(scales, spec) == 0.01


def test_capped_example():
    assert band_threshold((3, 1), ThresholdSpec(0.01, "capped", 2.0)) == pytest.approx(0.08, rel=1e-15)


def test_capped_zero():
    assert band_threshold((4, 2), ThresholdSpec(0.0, "capped")) == 0.0


def test_accumulation_grows_with_scale():
    spec = ThresholdSpec(0.01, "accumulation", 2.0)
    assert band_threshold((0, 0), spec) == 0.01
    assert band_threshold((3, 1), spec) == pytest.approx(0.16)


def test_spec_validation():
    with pytest.raises(ThresholdError):
        ThresholdSpec(0.1, "median")
    with pytest.raises(ThresholdError):
        ThresholdSpec(-1.0)
    with pytest.raises(ThresholdError):
        ThresholdSpec(0.1, alpha=1.0)


def test_field_matches_band_threshold():
    cs = coeffs_of((17, 9), 2)
    for mode in ("constant", "capped", "accumulation"):
        spec = ThresholdSpec(0.3, mode)
        t = threshold_field(cs, spec)
        for idx in [(0, 0), (4, 7), (12, 3), (16, 8), (3, 4)]:
            scales, _ = cs.band(idx)
            assert t[idx] == band_threshold(scales, spec)


def test_zero_c_is_noop():
    cs = coeffs_of()
    before = cs.values.copy()
    assert apply_threshold(cs, ThresholdSpec(0.0)) == 0
    assert np.array_equal(cs.values, before)


def test_huge_details_survive():
    cs = coeffs_of()
    cs.values[cs.detail_mask()] = 1e6
    assert apply_threshold(cs, ThresholdSpec(1e-3)) == 0


def test_strict_comparison():
    cs = coeffs_of((9,), 1)
    spec = ThresholdSpec(0.5, "constant")
    cs.values[5:] = [0.5, -0.5, 0.4999999, -0.25]
    n = apply_threshold(cs, spec)
    assert n == 2
    assert cs.values[5:].tolist() == [0.5, -0.5, 0.0, 0.0]


def test_samples_untouched():
    cs = coeffs_of()
    mask = cs.sample_mask()
    before = cs.values[mask].copy()
    apply_threshold(cs, ThresholdSpec(math.inf, "constant"))
    assert np.array_equal(cs.values[mask], before)
    assert np.all(cs.values[~mask] == 0)


def test_discontinuous_counts():
    f = discontinuous_field()
    cs = dwt_nd(f, WaveletPlan(f.shape, 6))
    zeroed = apply_threshold(cs, ThresholdSpec(0.2, "constant"))
    nnz = int(np.count_nonzero(cs.values))
    assert nnz == 481
    # every detail now equal to zero was under the threshold
    assert zeroed == int(np.sum(cs.values[cs.detail_mask()] == 0))
    assert zeroed + nnz + int(np.sum(cs.values[cs.sample_mask()] == 0)) == 16641


@settings(max_examples=100, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.sampled_from(["constant", "capped", "accumulation"]),
    st.lists(st.floats(0, 5), min_size=2, max_size=2),
)
def test_monotone_in_c(seed, mode, cs_):
    lo, hi = sorted(cs_)
    base = coeffs_of((17, 17), 3, seed)
    a, b = base.copy(), base.copy()
    assert apply_threshold(a, ThresholdSpec(lo, mode)) <= apply_threshold(b, ThresholdSpec(hi, mode))


@settings(max_examples=100, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.sampled_from(["constant", "capped", "accumulation"]),
    st.floats(0, 10),
)
def test_mass_neutral(seed, mode, c):
    f = np.random.default_rng(seed).normal(size=(33, 17))
    cs = dwt_nd(f, WaveletPlan(f.shape, 3))
    apply_threshold(cs, ThresholdSpec(c, mode))
    assert abs(trapezoid_mass(idwt_nd(cs)) - trapezoid_mass(f)) <= 1e-12 * np.abs(f).sum()
