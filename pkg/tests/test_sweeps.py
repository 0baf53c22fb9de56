"""Sweep machinery, scaling fits and canned experiment suites."""
import numpy as np
import pytest

from covloc import (
    GridGeometry,
    KernelFamily,
    KernelSpec,
    ModelLabel,
    benchmark_models,
    build_single_scale,
    custom_model,
    draw_ensemble,
    factorize,
    fit_scaling,
    hybrid_prior,
    load_matrix,
    refine_length_sweep,
    relative_frobenius_error,
    run_sweep,
    sample_covariance,
    experiment_suite,
)
from covloc.sweeps import (
    EstimatorFamily,
    ExponentForm,
    FIT_HEADER,
    RefinedCurve,
    SWEEP_HEADER,
    SuiteName,
    SweepConfig,
    _weight_grid,
)


RING_10 = GridGeometry(d=10, periodic=True)

BENCHMARK_LABELS = (
    ModelLabel.SINGLE_SCALE_LAPLACIAN,
    ModelLabel.SINGLE_SCALE_GAUSSIAN,
    ModelLabel.MULTISCALE,
    ModelLabel.NONSTATIONARY,
    ModelLabel.PRESSURE_WIND,
)


def _model(d=10, l=3.0):
    geometry = GridGeometry(d=d, periodic=True)
    return build_single_scale(KernelSpec(KernelFamily.LAPLACIAN, l), geometry)


def _hybrid_config(model, prior=None, **kw):
    kw.setdefault("parameter_grid", tuple(np.linspace(0.0, 1.0, 21)))
    kw.setdefault("ensemble_sizes", (8,))
    kw.setdefault("trials", 3)
    kw.setdefault("seed", 77)
    return SweepConfig(
        model=model,
        family=EstimatorFamily.HYBRID,
        prior=prior if prior is not None else custom_model(1.5 * model.matrix),
        **kw,
    )


# ---------------------------------------------------------------------------
# error metric


def test_relative_error_examples():
    truth = np.eye(3)
    assert relative_frobenius_error(truth, truth) == 0.0
    est = 2.0 * np.eye(3)
    assert relative_frobenius_error(est, truth) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(ValueError):
        relative_frobenius_error(np.eye(2), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        relative_frobenius_error(np.eye(2), np.eye(3))


# ---------------------------------------------------------------------------
# config validation


def test_sweep_config_validation():
    model = _model()
    prior = custom_model(1.5 * model.matrix)
    with pytest.raises(ValueError):
        _hybrid_config(model, parameter_grid=())
    with pytest.raises(ValueError):
        _hybrid_config(model, parameter_grid=(0.2, 0.2, 0.5))
    with pytest.raises(ValueError):
        _hybrid_config(model, parameter_grid=(0.0, 1.5))
    with pytest.raises(ValueError):
        _hybrid_config(model, trials=0)
    with pytest.raises(ValueError):
        _hybrid_config(model, ensemble_sizes=(0,))
    with pytest.raises(ValueError):
        SweepConfig(
            model=model,
            family=EstimatorFamily.HYBRID,
            parameter_grid=(0.0, 0.5),
            ensemble_sizes=(8,),
            trials=2,
        )
    with pytest.raises(ValueError):
        _hybrid_config(model, prior=custom_model(np.eye(4)))
    with pytest.raises(ValueError):
        SweepConfig(
            model=model,
            family=EstimatorFamily.SCHUR,
            parameter_grid=(2.0, 4.0),
            ensemble_sizes=(8,),
            trials=2,
        )
    with pytest.raises(ValueError):
        SweepConfig(
            model=model,
            family=EstimatorFamily.SCHUR,
            parameter_grid=(0.0, 4.0),
            ensemble_sizes=(8,),
            trials=2,
            kernel_family=KernelFamily.LAPLACIAN,
        )


# ---------------------------------------------------------------------------
# run_sweep


def test_sweep_reruns_bitwise_identical():
    config = _hybrid_config(_model(), trials=2)
    first = run_sweep(config)
    second = run_sweep(config)
    assert np.array_equal(first.mean_error, second.mean_error)
    assert np.array_equal(first.optimal_parameter, second.optimal_parameter)


def test_sweep_threading_does_not_change_results():
    config = _hybrid_config(_model(), trials=4)
    serial = run_sweep(config, threads=1)
    parallel = run_sweep(config, threads=3)
    assert np.array_equal(serial.mean_error, parallel.mean_error)


def test_sweep_single_point_grid():
    config = _hybrid_config(_model(), parameter_grid=(0.0,), trials=2)
    result = run_sweep(config)
    assert result.mean_error.shape == (1, 1)
    assert result.optimal_parameter[0] == 0.0


def test_sweep_matches_direct_recomputation():
    # One trial, one size: every grid cell must equal the error of the
    # estimator applied to the regenerated ensemble for that stream.
    model = _model()
    prior = custom_model(1.5 * model.matrix)
    config = _hybrid_config(model, prior=prior, trials=1, ensemble_sizes=(12,))
    result = run_sweep(config)
    ens = draw_ensemble(factorize(model), 12, seed=config.seed, stream=0)
    s = sample_covariance(ens)
    for col, alpha in enumerate(config.parameter_grid):
        est = alpha * prior.matrix + (1.0 - alpha) * s
        direct = relative_frobenius_error(est, model.matrix)
        assert result.mean_error[0, col] == pytest.approx(direct, rel=1e-12)


def test_sweep_schur_matches_direct_recomputation():
    model = _model()
    config = SweepConfig(
        model=model,
        family=EstimatorFamily.SCHUR,
        parameter_grid=(1.0, 3.0, 9.0),
        ensemble_sizes=(12,),
        trials=1,
        seed=5,
        kernel_family=KernelFamily.GAUSSIAN,
    )
    result = run_sweep(config)
    ens = draw_ensemble(factorize(model), 12, seed=5, stream=0)
    s = sample_covariance(ens)
    from covloc import build_localization, schur_estimate

    for col, l in enumerate(config.parameter_grid):
        taper = build_localization(KernelSpec(KernelFamily.GAUSSIAN, l), RING_10)
        direct = relative_frobenius_error(schur_estimate(s, taper), model.matrix)
        assert result.mean_error[0, col] == pytest.approx(direct, rel=1e-12)


def test_sweep_optimum_matches_quadratic_argmin():
    # Single trial: the error along the weight grid is an exact
    # quadratic in the weight, so the grid argmin must land within one
    # step of the closed-form minimizer.
    model = _model()
    prior = custom_model(1.5 * model.matrix)
    grid = tuple(np.linspace(0.0, 1.0, 51))
    config = _hybrid_config(
        model, prior=prior, parameter_grid=grid, trials=1, ensemble_sizes=(10,)
    )
    result = run_sweep(config)
    ens = draw_ensemble(factorize(model), 10, seed=config.seed, stream=0)
    s = sample_covariance(ens)
    dev = s - model.matrix
    shift = prior.matrix - s
    b = float(np.sum(dev * shift))
    c = float(np.sum(shift * shift))
    closed = min(max(-b / c, 0.0), 1.0)
    step = grid[1] - grid[0]
    assert abs(result.optimal_parameter[0] - closed) <= step


def test_sweep_tie_resolves_to_smaller_parameter():
    # A prior equal to the realized sample covariance makes the error
    # curve exactly flat, so every weight ties and the reported optimum
    # must be the first grid point.
    model = _model(d=5)
    ens = draw_ensemble(factorize(model), 10, seed=13, stream=0)
    s0 = sample_covariance(ens)
    config = SweepConfig(
        model=model,
        family=EstimatorFamily.HYBRID,
        parameter_grid=tuple(np.linspace(0.0, 1.0, 11)),
        ensemble_sizes=(10,),
        trials=1,
        seed=13,
        prior=custom_model(s0),
    )
    result = run_sweep(config)
    assert np.ptp(result.mean_error) == 0.0
    assert result.optimal_parameter[0] == 0.0


def test_sweep_standard_error_fields():
    config = _hybrid_config(_model(), trials=1)
    result = run_sweep(config)
    assert (result.mean_error_se == 0.0).all()
    config = _hybrid_config(_model(), trials=5)
    result = run_sweep(config)
    assert (result.mean_error_se > 0.0).all()


# ---------------------------------------------------------------------------
# scaling fits


def test_fit_recovers_exact_inverse_law():
    points = [(n, 3.0 / n) for n in (5, 10, 20, 40)]
    fit = fit_scaling(points, ExponentForm.INVERSE_N)
    assert fit.coefficient == pytest.approx(3.0, rel=1e-12)
    assert fit.r_squared >= 1.0 - 1e-10


def test_fit_sqrt_law_two_points():
    fit = fit_scaling([(10, 5.0), (40, 10.0)], ExponentForm.SQRT_N)
    assert fit.coefficient == pytest.approx(1.5811388300841898, rel=1e-14)
    assert fit.exponent_form is ExponentForm.SQRT_N


def test_fit_linear_law():
    points = [(n, 0.25 * n) for n in (4, 8, 16)]
    fit = fit_scaling(points, ExponentForm.LINEAR_N)
    assert fit.coefficient == pytest.approx(0.25, rel=1e-12)
    assert fit.r_squared >= 1.0 - 1e-10


def test_fit_constant_parameter_has_no_variance_to_explain():
    fit = fit_scaling([(10, 2.0), (40, 2.0)], ExponentForm.INVERSE_N)
    assert fit.r_squared == float("-inf")


def test_fit_needs_two_distinct_sizes():
    with pytest.raises(ValueError):
        fit_scaling([(10, 1.0)], ExponentForm.INVERSE_N)
    with pytest.raises(ValueError):
        fit_scaling([(10, 1.0), (10, 2.0)], ExponentForm.LINEAR_N)


# ---------------------------------------------------------------------------
# refinement


def test_refine_merges_and_sorts_curves():
    model = _model(d=12)
    config = SweepConfig(
        model=model,
        family=EstimatorFamily.SCHUR,
        parameter_grid=(1.0, 2.0, 4.0, 8.0, 16.0),
        ensemble_sizes=(6, 12),
        trials=2,
        seed=3,
        kernel_family=KernelFamily.LAPLACIAN,
    )
    coarse, curves = refine_length_sweep(config)
    assert len(curves) == 2
    for row, curve in enumerate(curves):
        assert isinstance(curve, RefinedCurve)
        params = np.array(curve.parameters)
        assert (np.diff(params) > 0).all()
        assert len(params) > len(config.parameter_grid)
        # Every coarse point survives the merge with its exact value.
        for col, p in enumerate(config.parameter_grid):
            where = int(np.argmin(np.abs(params - p)))
            assert params[where] == p
            assert curve.mean_error[where] == coarse.mean_error[row, col]
        best = int(np.argmin(curve.mean_error))
        assert curve.optimal_parameter == curve.parameters[best]
        assert min(curve.mean_error) <= coarse.mean_error[row].min()


# ---------------------------------------------------------------------------
# benchmark set


def test_benchmark_models_reference_size():
    models = benchmark_models(200)
    assert set(models) == set(BENCHMARK_LABELS)
    assert models[ModelLabel.MULTISCALE].params["l2"] == 20.0
    assert models[ModelLabel.NONSTATIONARY].geometry.periodic is False
    assert models[ModelLabel.PRESSURE_WIND].matrix.shape == (400, 400)


def test_benchmark_models_small_grid_caps_long_scales():
    models = benchmark_models(50)
    assert models[ModelLabel.MULTISCALE].params["l2"] == 5.0
    for model in models.values():
        assert np.isfinite(model.matrix).all()


def test_hybrid_priors_pair_with_models():
    reference = benchmark_models(200)
    expected = {
        ModelLabel.SINGLE_SCALE_LAPLACIAN: 1.0,
        ModelLabel.SINGLE_SCALE_GAUSSIAN: 16.0,
        ModelLabel.MULTISCALE: 4.0,
        ModelLabel.NONSTATIONARY: 8.0,
    }
    for label, scale in expected.items():
        prior = hybrid_prior(reference[label])
        assert prior.params["family"] == "gaussian"
        assert prior.params["length_scale"] == scale

    # Below the reference grid size the scalar priors switch to a broad
    # Laplacian kernel as wide as the grid; a Gaussian kernel that wide
    # would be indefinite, and a narrow one would sit on the truth.
    small = benchmark_models(50)
    for label in expected:
        prior = hybrid_prior(small[label])
        assert prior.params["family"] == "laplacian"
        assert prior.params["length_scale"] == 50.0
        assert prior.geometry.periodic == small[label].geometry.periodic

    for d, models in ((200, reference), (50, small)):
        pw = hybrid_prior(models[ModelLabel.PRESSURE_WIND])
        assert pw.matrix.shape == (2 * d, 2 * d)
        assert pw.params["length_scale"] == 5.0


def test_weight_grid_spans_unit_interval():
    grid = _weight_grid()
    assert len(grid) == 21
    assert grid[0] == 0.0
    assert grid[-1] == 1.0
    assert (np.diff(grid) > 0).all()


# ---------------------------------------------------------------------------
# canned suites


def _read_lines(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_hybrid_suite_files_and_headers(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    kw = dict(scale="ci", d=50, trials=2, ensemble_sizes=(5, 10), seed=21)
    bundle = experiment_suite("hybrid-scaling", out_dir=out_a, **kw)
    experiment_suite(SuiteName.HYBRID_SCALING, out_dir=out_b, **kw)
    assert bundle.name is SuiteName.HYBRID_SCALING
    assert set(bundle.sweeps) == set(BENCHMARK_LABELS)
    names = sorted(p.name for p in out_a.iterdir())
    expected = sorted(
        [f"sweep_hybrid_{label.value}.csv" for label in BENCHMARK_LABELS]
        + ["fits_hybrid.csv"]
    )
    assert names == expected
    header = (out_a / "fits_hybrid.csv").read_text().splitlines()[0]
    assert header == ",".join(FIT_HEADER)
    sweep_file = out_a / f"sweep_hybrid_{ModelLabel.MULTISCALE.value}.csv"
    lines = sweep_file.read_text().splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert len(lines) == 1 + 2 * 21
    for name in names:
        assert _read_lines(out_a / name) == _read_lines(out_b / name)


def test_schur_suite_files_and_fit_forms(tmp_path):
    bundle = experiment_suite(
        "schur-scaling",
        out_dir=tmp_path,
        d=50,
        trials=2,
        ensemble_sizes=(5, 10),
        seed=22,
        kernels=(KernelFamily.LAPLACIAN,),
    )
    names = sorted(p.name for p in tmp_path.iterdir())
    expected = sorted(
        [f"sweep_schur_{label.value}_laplacian.csv" for label in BENCHMARK_LABELS]
        + ["fits_schur.csv"]
    )
    assert names == expected
    for key, fit in bundle.fits.items():
        assert fit.exponent_form is ExponentForm.LINEAR_N
        assert key[1] is KernelFamily.LAPLACIAN
    fit_lines = (tmp_path / "fits_schur.csv").read_text().splitlines()
    assert fit_lines[0] == ",".join(FIT_HEADER)
    assert len(fit_lines) == 1 + len(BENCHMARK_LABELS)


def test_illustration_suite_artifacts(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    kw = dict(d=50, trials=2, seed=23)
    bundle = experiment_suite("illustration", out_dir=out_a, **kw)
    experiment_suite("illustration", out_dir=out_b, **kw)
    names = sorted(p.name for p in out_a.iterdir())
    assert names == sorted(
        [
            "illustration_truth.bin",
            "illustration_sample.bin",
            "illustration_hybrid.bin",
            "illustration_schur.bin",
            "illustration_errors.csv",
        ]
    )
    for name in names:
        assert _read_lines(out_a / name) == _read_lines(out_b / name)
    truth = load_matrix(out_a / "illustration_truth.bin")
    ring = GridGeometry(d=50, periodic=True)
    rebuilt = build_single_scale(KernelSpec(KernelFamily.GAUSSIAN, 5.0), ring)
    assert np.array_equal(truth, rebuilt.matrix)
    rows = bundle.artifacts["errors"]
    assert [est for est, _, _ in rows] == ["sample", "hybrid", "schur"]
    errors = {est: err for est, _, err in rows}
    assert errors["hybrid"] <= errors["sample"]
    assert errors["schur"] <= errors["sample"]


def test_suite_rejects_unknown_names():
    with pytest.raises(ValueError):
        experiment_suite("bogus-suite")
    with pytest.raises(ValueError):
        experiment_suite("hybrid-scaling", scale="huge")
