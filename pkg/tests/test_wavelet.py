import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import A9, A9_INV, interp_refine, scalar_dwt_2d, scalar_step
from wavegrid.wavelet import (
    CoefficientSet,
    InvalidLengthError,
    PlanError,
    WaveletPlan,
    analysis_matrix,
    dwt_nd,
    dwt_step_1d,
    idwt_nd,
    idwt_step_1d,
    interleave,
    synthesis_matrix,
    trapezoid_mass,
    write_matrix_csv,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def signal(j_min=1, j_max=6):
    return st.integers(j_min, j_max).flatmap(lambda j: arrays(np.float64, 2**j + 1, elements=finite))


def test_linear_signal_has_no_details():
    c, d = dwt_step_1d([0, 1, 2, 3, 4])
    assert c.tolist() == [0, 2, 4]
    assert d.tolist() == [0, 0]


def test_unit_impulse_first_column():
    c, d = dwt_step_1d(np.eye(9)[0])
    assert interleave(c, d).tolist() == [1, -0.5, -0.25, 0, 0, 0, 0, 0, 0]


def test_inverse_of_linear_example():
    assert idwt_step_1d([0, 2, 4], [0, 0]).tolist() == [0, 1, 2, 3, 4]


def test_inverse_of_impulse_column():
    v = np.array([1, -0.5, -0.25, 0, 0, 0, 0, 0, 0])
    assert idwt_step_1d(v[0::2], v[1::2]).tolist() == np.eye(9)[0].tolist()


def test_random_17_matches_dense_matrix():
    u = np.random.default_rng(1).normal(size=17)
    assert np.allclose(interleave(*dwt_step_1d(u)), analysis_matrix(4) @ u, atol=1e-14, rtol=0)


def test_random_9_inverse_matches_printed_inverse():
    v = np.random.default_rng(2).normal(size=9)
    assert np.max(np.abs(idwt_step_1d(v[0::2], v[1::2]) - A9_INV @ v)) <= 1e-14


def test_analysis_matrix_j3_exact():
    assert np.array_equal(analysis_matrix(3), A9)


def test_synthesis_matrix_j3_equals_printed_inverse():
    assert np.max(np.abs(synthesis_matrix(3) - A9_INV)) <= 1e-15


def test_analysis_matrix_j1():
    expected = np.array([[1, 0, 0], [-0.5, 1, -0.5], [0, 0, 1]])
    assert np.array_equal(analysis_matrix(1), expected)


@pytest.mark.parametrize("j", range(1, 8))
def test_matrix_matches_scalar_oracle(j):
    n = 2**j + 1
    ref = np.empty((n, n))
    for r in range(n):
        c, d = scalar_step(list(np.eye(n)[r]))
        ref[:, r] = interleave(np.array(c), np.array(d))
    assert np.max(np.abs(analysis_matrix(j) - ref)) <= 1e-13


@pytest.mark.parametrize("j", [0, 11])
def test_analysis_matrix_range(j):
    with pytest.raises(InvalidLengthError):
        analysis_matrix(j)


@pytest.mark.parametrize("n", [0, 1, 2, 4, 6, 10])
def test_invalid_lengths(n):
    with pytest.raises(InvalidLengthError):
        dwt_step_1d(np.zeros(n))


def test_inverse_length_mismatch():
    with pytest.raises(InvalidLengthError):
        idwt_step_1d(np.zeros(3), np.zeros(3))


def test_three_point_step_loses_mass():
    # only the two end points survive, so the interior value's mass is gone
    c, _ = dwt_step_1d([0.0, 1.0, 0.0])
    assert trapezoid_mass(c) == 0.0
    assert trapezoid_mass([0.0, 1.0, 0.0]) / 2 == 0.5


def test_trapezoid_examples():
    assert trapezoid_mass([0, 1, 2, 3, 4]) == 8
    assert trapezoid_mass([0, 2, 4]) == 4


def test_matrix_csv(tmp_path):
    write_matrix_csv(tmp_path / "a.csv", analysis_matrix(3))
    back = np.loadtxt(tmp_path / "a.csv", delimiter=",")
    assert np.array_equal(back, A9)


@settings(max_examples=300, deadline=None)
@given(signal(j_min=2))
def test_mass_halving(s):
    c, _ = dwt_step_1d(s)
    m = trapezoid_mass(s)
    scale = np.abs(s).sum() + 1e-300
    assert abs(trapezoid_mass(c) - m / 2) <= 1e-12 * scale


@settings(max_examples=300, deadline=None)
@given(signal())
def test_roundtrip_1d_close(s):
    c, d = dwt_step_1d(s)
    assert np.allclose(idwt_step_1d(c, d), s, rtol=0, atol=1e-9 * (np.abs(s).max() + 1))


def test_plan_validation():
    assert WaveletPlan((9, 17), 3).sample_dims == (2, 3)
    with pytest.raises(PlanError):
        WaveletPlan((9,), 4)
    with pytest.raises(PlanError):
        WaveletPlan((10,), 1)
    with pytest.raises(PlanError):
        dwt_nd(np.zeros((9, 9)), WaveletPlan((17, 17), 1))


def test_constant_field():
    f = np.full((17, 9), 7.0)
    cs = dwt_nd(f, WaveletPlan(f.shape, 3))
    assert np.all(cs.values[cs.detail_mask()] == 0)
    assert np.all(cs.values[cs.sample_mask()] == 7.0)


def test_bilinear_field_has_no_details():
    x = np.arange(9) / 8
    f = 2 * x[:, None] + 3 * x[None, :]
    cs = dwt_nd(f, WaveletPlan(f.shape, 2))
    assert np.max(np.abs(cs.values[cs.detail_mask()])) <= 1e-12 * np.abs(f).max()


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.integers(1, 4), min_size=1, max_size=3),
    st.lists(finite, min_size=4, max_size=4),
)
def test_affine_annihilation(scales, coef):
    dims = tuple(2**k + 1 for k in scales)
    grids = np.meshgrid(*[np.linspace(0, 1, d) for d in dims], indexing="ij")
    f = coef[0] + sum(c * g for c, g in zip(coef[1:], grids))
    cs = dwt_nd(f, WaveletPlan(dims, min(scales)))
    mag = np.abs(f).max() + 1
    assert np.max(np.abs(cs.values[cs.detail_mask()]), initial=0) <= 1e-12 * mag


def test_sample_and_detail_counts():
    cs = dwt_nd(np.zeros((33, 17, 9)), WaveletPlan((33, 17, 9), 2))
    assert cs.sample_mask().sum() == 9 * 5 * 3
    assert cs.detail_mask().sum() == 33 * 17 * 9 - 9 * 5 * 3


def test_band_map():
    cs = CoefficientSet(WaveletPlan((17, 17), 2), np.zeros((17, 17)))
    assert cs.band((0, 4)) == ((0, 0), ("sample", "sample"))
    assert cs.band((5, 1)) == ((0, 0), ("detail", "sample"))
    assert cs.band((9, 16)) == ((1, 1), ("detail", "detail"))
    assert cs.band((6, 12)) == ((0, 1), ("detail", "detail"))


def test_nd_matches_scalar_oracle():
    f = np.random.default_rng(3).normal(size=(33, 17))
    ref = np.array(scalar_dwt_2d(f.tolist(), 3))
    cs = dwt_nd(f, WaveletPlan(f.shape, 3))
    assert np.max(np.abs(cs.values - ref)) <= 1e-12


@pytest.mark.parametrize("shape,levels", [((65, 65), 4), ((17, 17, 17), 3), ((129,), 7)])
def test_nd_roundtrip(shape, levels):
    f = np.random.default_rng(4).normal(size=shape)
    back = idwt_nd(dwt_nd(f, WaveletPlan(shape, levels)))
    assert np.max(np.abs(back - f)) <= 1e-13


def test_zero_levels_identity():
    f = np.random.default_rng(5).normal(size=(9, 9))
    cs = dwt_nd(f, WaveletPlan(f.shape, 0))
    assert np.array_equal(cs.values, f)
    assert np.array_equal(idwt_nd(cs), f)


@pytest.mark.parametrize("shape,levels", [((33, 33), 3), ((17, 9, 17), 2)])
def test_zero_details_give_interpolation(shape, levels):
    x = [np.linspace(0, 1, n) for n in shape]
    grids = np.meshgrid(*x, indexing="ij")
    f = np.sin(3 * grids[0]) * np.cos(2 * grids[-1]) + grids[0] ** 2
    cs = dwt_nd(f, WaveletPlan(shape, levels))
    cs.values[cs.detail_mask()] = 0.0
    coarse = cs.values[tuple(slice(0, d) for d in cs.plan.sample_dims)]
    assert np.allclose(idwt_nd(cs), interp_refine(coarse, levels), rtol=0, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(2, 5), min_size=1, max_size=3),
    st.integers(0, 2**32 - 1),
    st.floats(0, 1),
)
def test_detail_masslessness(scales, seed, frac):
    # the last step must act on at least 5 samples
    dims = tuple(2**k + 1 for k in scales)
    rng = np.random.default_rng(seed)
    f = rng.normal(size=dims)
    cs = dwt_nd(f, WaveletPlan(dims, min(scales) - 1))
    kill = cs.detail_mask() & (rng.random(dims) < frac)
    cs.values[kill] = 0.0
    m0 = trapezoid_mass(f)
    assert abs(trapezoid_mass(idwt_nd(cs)) - m0) <= 1e-12 * (np.abs(f).sum())


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(2, 5), min_size=1, max_size=3), st.integers(0, 2**32 - 1))
def test_nd_level_mass_scaling(scales, seed):
    dims = tuple(2**k + 1 for k in scales)
    f = np.random.default_rng(seed).normal(size=dims)
    cs = dwt_nd(f, WaveletPlan(dims, 1))
    coarse = cs.values[tuple(slice(0, (d - 1) // 2 + 1) for d in dims)]
    expected = trapezoid_mass(f) / 2 ** len(dims)
    assert abs(trapezoid_mass(coarse) - expected) <= 1e-12 * np.abs(f).sum()


def test_plan_mismatch_in_coefficients():
    with pytest.raises(PlanError):
        CoefficientSet(WaveletPlan((9, 9), 1), np.zeros((9, 17)))
