"""Schur, hybrid and inverse-Wishart estimator tests."""
import numpy as np
import pytest

from covloc import (
    GridGeometry,
    HybridSpec,
    InverseWishartSpec,
    KernelFamily,
    KernelSpec,
    LocalizationLayout,
    LocalizationMatrix,
    build_localization,
    build_single_scale,
    custom_model,
    elementwise_bias_variance,
    hybrid_estimate,
    iw_map_estimate,
    schur_estimate,
)


def _random_psd(rng, d, rank=None):
    z = rng.standard_normal((d, rank or d + 2))
    return z @ z.T / z.shape[1]


# ---------------------------------------------------------------------------
# localization matrices


def test_taper_unit_diagonal_everywhere():
    geometry = GridGeometry(d=30, periodic=True)
    for family in KernelFamily:
        taper = build_localization(KernelSpec(family, 7.0), geometry)
        assert np.array_equal(np.diag(taper.matrix), np.ones(30))


def test_taper_laplacian_direct_value():
    geometry = GridGeometry(d=40, periodic=False)
    taper = build_localization(KernelSpec(KernelFamily.LAPLACIAN, 10.0), geometry)
    assert taper.matrix[0, 10] == pytest.approx(np.exp(-1.0), abs=1e-15)


def test_taper_wide_limit_is_all_ones():
    # Largest ring distance is 12, so exp(-12 / 1e12) sits within 2e-11
    # of 1 at every entry.
    geometry = GridGeometry(d=25, periodic=True)
    taper = build_localization(KernelSpec(KernelFamily.LAPLACIAN, 1e12), geometry)
    assert np.abs(taper.matrix - 1.0).max() <= 1e-10


def test_taper_records_kernel_metadata():
    geometry = GridGeometry(d=10, periodic=True)
    spec = KernelSpec(KernelFamily.GAUSSIAN, 3.0)
    taper = build_localization(spec, geometry)
    assert taper.kernel == spec
    assert taper.layout is LocalizationLayout.SCALAR


def test_block_layout_tiles_base_taper():
    geometry = GridGeometry(d=12, periodic=True)
    spec = KernelSpec(KernelFamily.LAPLACIAN, 4.0)
    scalar = build_localization(spec, geometry)
    block = build_localization(
        spec, geometry, LocalizationLayout.PRESSURE_WIND_BLOCK
    )
    assert block.matrix.shape == (24, 24)
    assert np.array_equal(block.matrix, np.tile(scalar.matrix, (2, 2)))


def test_localization_matrix_validation():
    ok = np.array([[1.0, 0.5], [0.5, 1.0]])
    LocalizationMatrix(ok)
    with pytest.raises(ValueError):
        LocalizationMatrix(np.array([[1.0, 0.5], [0.5000001, 1.0]]))
    with pytest.raises(ValueError):
        LocalizationMatrix(np.array([[0.9, 0.5], [0.5, 1.0]]))
    with pytest.raises(ValueError):
        LocalizationMatrix(np.array([[1.0, 1.2], [1.2, 1.0]]))
    with pytest.raises(ValueError):
        LocalizationMatrix(np.array([[1.0, -0.1], [-0.1, 1.0]]))


# ---------------------------------------------------------------------------
# schur estimator


def test_schur_all_ones_is_identity_map():
    rng = np.random.default_rng(0)
    s = _random_psd(rng, 6)
    taper = LocalizationMatrix(np.ones((6, 6)))
    assert np.array_equal(schur_estimate(s, taper), s)


def test_schur_identity_support_keeps_diagonal():
    rng = np.random.default_rng(1)
    s = _random_psd(rng, 5)
    taper = LocalizationMatrix(np.eye(5))
    assert np.array_equal(schur_estimate(s, taper), np.diag(np.diag(s)))


def test_schur_entrywise_arithmetic():
    s = np.array([[2.0, 1.0], [1.0, 2.0]])
    taper = LocalizationMatrix(np.array([[1.0, 0.5], [0.5, 1.0]]))
    assert np.array_equal(schur_estimate(s, taper), [[2.0, 0.5], [0.5, 2.0]])


def test_schur_preserves_diagonal_exactly():
    rng = np.random.default_rng(2)
    s = _random_psd(rng, 20)
    geometry = GridGeometry(d=20, periodic=True)
    taper = build_localization(KernelSpec(KernelFamily.GAUSSIAN, 2.0), geometry)
    assert np.array_equal(np.diag(schur_estimate(s, taper)), np.diag(s))


@pytest.mark.parametrize("seed", range(6))
def test_schur_output_psd(seed):
    # Entrywise product of two positive semidefinite matrices stays
    # positive semidefinite; checked over random low-rank S and a
    # positive definite taper.
    rng = np.random.default_rng(seed)
    d = int(rng.integers(3, 21))
    s = _random_psd(rng, d, rank=int(rng.integers(1, d + 3)))
    geometry = GridGeometry(d=d, periodic=False)
    l = float(rng.uniform(0.5, 15.0))
    family = list(KernelFamily)[int(rng.integers(len(KernelFamily)))]
    taper = build_localization(KernelSpec(family, l), geometry)
    eigs = np.linalg.eigvalsh(schur_estimate(s, taper))
    assert eigs[0] >= -1e-12 * max(eigs[-1], 1.0)


# ---------------------------------------------------------------------------
# hybrid estimator


def _prior_and_sample(rng, d):
    prior = custom_model(_random_psd(rng, d) + 0.5 * np.eye(d))
    s = _random_psd(rng, d)
    return prior, s


def test_hybrid_alpha_zero_is_sample():
    rng = np.random.default_rng(3)
    prior, s = _prior_and_sample(rng, 7)
    assert np.array_equal(hybrid_estimate(s, HybridSpec(prior, 0.0)), s)


def test_hybrid_alpha_one_is_prior():
    rng = np.random.default_rng(4)
    prior, s = _prior_and_sample(rng, 7)
    assert np.array_equal(hybrid_estimate(s, HybridSpec(prior, 1.0)), prior.matrix)


def test_hybrid_scalar_average():
    prior = custom_model(3.0 * np.eye(4))
    out = hybrid_estimate(np.eye(4), HybridSpec(prior, 0.5))
    assert np.array_equal(out, 2.0 * np.eye(4))


def test_hybrid_affine_in_alpha():
    rng = np.random.default_rng(5)
    prior, s = _prior_and_sample(rng, 9)
    at0 = hybrid_estimate(s, HybridSpec(prior, 0.0))
    at1 = hybrid_estimate(s, HybridSpec(prior, 1.0))
    for alpha in (0.125, 0.25, 0.5, 0.8125):
        direct = hybrid_estimate(s, HybridSpec(prior, alpha))
        assert np.allclose(direct, at0 + alpha * (at1 - at0), rtol=0, atol=1e-15)


def test_hybrid_spec_validation():
    prior = custom_model(np.eye(3))
    with pytest.raises(ValueError):
        HybridSpec(prior, -0.1)
    with pytest.raises(ValueError):
        HybridSpec(prior, 1.1)
    with pytest.raises(ValueError):
        HybridSpec(np.eye(3), 0.5)


def test_hybrid_shape_mismatch():
    prior = custom_model(np.eye(3))
    with pytest.raises(ValueError):
        hybrid_estimate(np.eye(4), HybridSpec(prior, 0.5))


# ---------------------------------------------------------------------------
# inverse-Wishart map


def test_iw_equal_weights_at_m_equals_n():
    rng = np.random.default_rng(6)
    prior, s = _prior_and_sample(rng, 5)
    out = iw_map_estimate(s, InverseWishartSpec(prior, m=8.0), n=8)
    assert np.allclose(out, 0.5 * prior.matrix + 0.5 * s, rtol=0, atol=1e-16)


def test_iw_scalar_arithmetic():
    prior = custom_model(5.0 * np.eye(3))
    out = iw_map_estimate(np.eye(3), InverseWishartSpec(prior, m=2.0), n=8)
    assert np.allclose(out, 1.8 * np.eye(3), rtol=1e-15)


def test_iw_adjustment_vanishes_for_large_n():
    rng = np.random.default_rng(7)
    prior, s = _prior_and_sample(rng, 6)
    m = 3.0
    for n in (10, 100, 1000):
        out = iw_map_estimate(s, InverseWishartSpec(prior, m=m), n=n)
        bound = m / (m + n) * (
            np.linalg.norm(prior.matrix) + np.linalg.norm(s)
        )
        assert np.linalg.norm(out - s) <= bound + 1e-12


@pytest.mark.parametrize("m", [0.5, 1.0, 7.0, 64.0])
@pytest.mark.parametrize("n", [1, 5, 30])
def test_iw_is_bitwise_hybrid(m, n):
    rng = np.random.default_rng(int(m * 10) + n)
    prior, s = _prior_and_sample(rng, 8)
    left = iw_map_estimate(s, InverseWishartSpec(prior, m=m), n=n)
    right = hybrid_estimate(s, HybridSpec(prior, alpha=m / (m + n)))
    assert np.array_equal(left, right)


def test_iw_spec_validation():
    prior = custom_model(np.eye(3))
    with pytest.raises(ValueError):
        InverseWishartSpec(prior, m=0.0)
    with pytest.raises(ValueError):
        InverseWishartSpec(prior, m=-2.0)


# ---------------------------------------------------------------------------
# elementwise bias and variance


def test_bias_variance_all_ones_taper_is_noop():
    geometry = GridGeometry(d=4, periodic=True)
    model = build_single_scale(KernelSpec(KernelFamily.LAPLACIAN, 2.0), geometry)
    taper = LocalizationMatrix(np.ones((4, 4)))
    report = elementwise_bias_variance(model, taper, n=12, trials=400, seed=10)
    # With an all-ones taper the estimator IS the sample covariance, so
    # the paired ratio is exact and the bias equals the sampling noise.
    assert np.allclose(report.variance_ratio, 1.0, rtol=0, atol=1e-12)
    assert np.array_equal(report.bias, report.samp_bias)
    se = np.sqrt(report.est_variance / report.trials)
    assert np.abs(report.bias / se).max() <= 4.0


def test_bias_variance_hybrid_ratio_is_quarter():
    geometry = GridGeometry(d=5, periodic=True)
    model = build_single_scale(KernelSpec(KernelFamily.LAPLACIAN, 2.0), geometry)
    prior = custom_model(1.5 * model.matrix, geometry)
    spec = HybridSpec(prior, alpha=0.5)
    report = elementwise_bias_variance(model, spec, n=20, trials=500, seed=11)
    # Common random numbers make the measured ratio exact, not merely
    # within Monte Carlo tolerance.
    assert np.abs(report.variance_ratio - 0.25).max() <= 1e-10


def test_bias_variance_schur_identities_small():
    geometry = GridGeometry(d=5, periodic=False)
    model = build_single_scale(KernelSpec(KernelFamily.LAPLACIAN, 2.0), geometry)
    taper = build_localization(KernelSpec(KernelFamily.LAPLACIAN, 2.0), geometry)
    report = elementwise_bias_variance(model, taper, n=20, trials=4000, seed=12)
    se = np.sqrt(report.est_variance / report.trials)
    predicted = (taper.matrix - 1.0) * model.matrix
    assert np.abs((report.bias - predicted) / se).max() <= 3.0
    assert np.abs(report.variance_ratio - taper.matrix ** 2).max() <= 1e-10


def test_bias_variance_masks_zero_truth_entries():
    # Where the truth entry is exactly zero the reference variance has
    # no signal, so the ratio reports NaN instead of rounding noise.
    block = np.array([[1.0, 0.5], [0.5, 1.0]])
    truth = np.zeros((4, 4))
    truth[:2, :2] = block
    truth[2:, 2:] = block
    model = custom_model(truth)
    mask = truth == 0.0
    taper = LocalizationMatrix(np.ones((4, 4)))
    report = elementwise_bias_variance(model, taper, n=8, trials=60, seed=13)
    assert np.isnan(report.variance_ratio[mask]).all()
    assert np.isfinite(report.variance_ratio[~mask]).all()


def test_bias_variance_rejects_unknown_config():
    geometry = GridGeometry(d=4, periodic=True)
    model = build_single_scale(KernelSpec(KernelFamily.LAPLACIAN, 2.0), geometry)
    with pytest.raises(TypeError):
        elementwise_bias_variance(model, object(), n=5, trials=10, seed=0)
    with pytest.raises(ValueError):
        taper = LocalizationMatrix(np.ones((4, 4)))
        elementwise_bias_variance(model, taper, n=5, trials=1, seed=0)


def test_bias_variance_deterministic_in_seed():
    geometry = GridGeometry(d=4, periodic=True)
    model = build_single_scale(KernelSpec(KernelFamily.LAPLACIAN, 2.0), geometry)
    taper = build_localization(KernelSpec(KernelFamily.LAPLACIAN, 3.0), geometry)
    first = elementwise_bias_variance(model, taper, n=6, trials=50, seed=21)
    second = elementwise_bias_variance(model, taper, n=6, trials=50, seed=21)
    assert np.array_equal(first.bias, second.bias)
    assert np.array_equal(first.variance_ratio, second.variance_ratio)
