"""Command line interface for model building, estimation and sweeps.

One binary with four subcommands keeps reproduction scripts short:

``build-cov``
    Construct a benchmark covariance model and write it as a binary
    matrix with a plain-text metadata sidecar.
``estimate``
    Form an estimate (sample, Schur, hybrid, inverse-Wishart MAP or
    quadratic-penalty MAP) from an ensemble that is either read from a
    file or drawn freshly from a named model.
``sweep``
    Run one of the canned experiment suites and write its CSV tables.
``verify``
    Run fast invariant suites and print one PASS/FAIL line with a
    measured value per suite.

Options can also come from a plain-text configuration file of
``key = value`` lines with optional ``[section]`` headers; keys mirror
the long option names, unknown keys are rejected, flags override file
values and defaults fill the rest.  The fully resolved configuration is
echoed before the command runs, which is enough to reproduce any run.

Exit codes: 0 success, 1 verification failure, 2 argument or
configuration error, 3 model validity error, 4 solver non-convergence.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path

import numpy as np

from covloc.covmodels import (
    GridGeometry,
    KernelFamily,
    KernelSpec,
    ModelLabel,
    build_multiscale,
    build_nonstationary,
    build_pressure_wind,
    build_single_scale,
    custom_model,
    laplacian_grid_precision,
)
from covloc.ensembles import (
    EnsembleData,
    draw_ensemble,
    factorize,
    sample_covariance,
)
from covloc.errors import ConfigError, ModelValidityError, NonConvergenceError
from covloc.estimators import (
    HybridSpec,
    InverseWishartSpec,
    LocalizationLayout,
    build_localization,
    elementwise_bias_variance,
    hybrid_estimate,
    iw_map_estimate,
    schur_estimate,
)
from covloc.matrixio import load_matrix, save_matrix
from covloc.qc import (
    PenaltyMatrix,
    QcSolveOptions,
    asymptotic_schur_localization,
    qc_map_estimate,
)
from covloc.sweeps import (
    DEFAULT_SEED,
    SuiteName,
    benchmark_models,
    experiment_suite,
)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_ARGS = 2
EXIT_MODEL = 3
EXIT_SOLVER = 4

_MODEL_NAMES = (
    "laplacian", "gaussian", "multiscale", "nonstationary", "pressure-wind",
)
_ESTIMATOR_NAMES = ("sample", "schur", "hybrid", "iw", "qc")
_SWEEP_FAMILIES = ("hybrid", "schur", "illustration")

_MODEL_LABELS = {
    "laplacian": ModelLabel.SINGLE_SCALE_LAPLACIAN,
    "gaussian": ModelLabel.SINGLE_SCALE_GAUSSIAN,
    "multiscale": ModelLabel.MULTISCALE,
    "nonstationary": ModelLabel.NONSTATIONARY,
    "pressure-wind": ModelLabel.PRESSURE_WIND,
}

_SUITE_NAMES = {
    "hybrid": SuiteName.HYBRID_SCALING,
    "schur": SuiteName.SCHUR_SCALING,
    "illustration": SuiteName.ILLUSTRATION,
}


def _parse_bool(text: str) -> bool:
    states = configparser.ConfigParser.BOOLEAN_STATES
    try:
        return states[str(text).strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}")


# Configuration file keys mirror the long option names.  Anything else
# is rejected so a typo cannot silently fall back to a default.
_CONFIG_KEYS = {
    "d": int,
    "n": int,
    "trials": int,
    "seed": int,
    "max_iter": int,
    "threads": int,
    "l": float,
    "l1": float,
    "l2": float,
    "alpha": float,
    "m": float,
    "theta_uniform": float,
    "tol": float,
    "scale": str,
    "kernel": str,
    "out": str,
    "model": str,
    "ensemble": str,
    "prior": str,
    "periodic": _parse_bool,
}


def load_run_config(path) -> dict:
    """Parse a ``key = value`` configuration file into typed values.

    Section headers are organizational only; keys from later sections
    override earlier ones.  Keys are matched case-insensitively with
    hyphens treated as underscores.  Unknown keys and unparsable values
    raise :class:`ConfigError`.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh, source=str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file: {exc}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration file: {exc}")
    staged = dict(parser.defaults())
    for section in parser.sections():
        staged.update(parser.items(section))
    values = {}
    for key, raw in staged.items():
        name = key.strip().lower().replace("-", "_")
        if name not in _CONFIG_KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            values[name] = _CONFIG_KEYS[name](raw)
        except ValueError:
            raise ConfigError(f"bad value for configuration key {key!r}: {raw!r}")
    return values


def _resolve(args, config: dict, **defaults) -> dict:
    # Precedence: explicit flag, then config file, then default.
    merged = {}
    for key, fallback in defaults.items():
        value = getattr(args, key, None)
        if value is None:
            value = config.get(key, fallback)
        merged[key] = value
    return merged


def _echo(command: str, resolved: dict) -> None:
    print("[resolved]")
    print(f"command = {command}")
    for key in sorted(resolved):
        if resolved[key] is not None:
            print(f"{key} = {resolved[key]}")


def _write_meta(path, entries: dict) -> None:
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {value}\n")


# ---------------------------------------------------------------------------
# build-cov


def _flag_conflicts(args, allowed: tuple, model_name: str) -> None:
    # Only explicitly passed flags are checked; a shared configuration
    # file may carry keys that some model does not use.
    labels = {"l": "--l", "l1": "--l1", "l2": "--l2", "kernel": "--kernel"}
    for key, flag in labels.items():
        if getattr(args, key, None) is not None and key not in allowed:
            raise ConfigError(f"{flag} does not apply to the {model_name} model")


def _build_model(name: str, merged: dict, args):
    d = int(merged["d"])
    periodic = merged["periodic"]
    if name == "nonstationary":
        if periodic:
            raise ConfigError("the nonstationary model requires a non-periodic grid")
        periodic = False
    elif periodic is None:
        periodic = True
    geometry = GridGeometry(d=d, periodic=periodic)
    if name in ("laplacian", "gaussian"):
        _flag_conflicts(args, ("l",), name)
        l = float(merged["l"] if merged["l"] is not None else 5.0)
        family = KernelFamily.LAPLACIAN if name == "laplacian" else KernelFamily.GAUSSIAN
        model = build_single_scale(KernelSpec(family, l), geometry)
    elif name == "multiscale":
        _flag_conflicts(args, ("l1", "l2", "kernel"), name)
        l1 = float(merged["l1"] if merged["l1"] is not None else 2.0)
        l2 = float(merged["l2"] if merged["l2"] is not None else 20.0)
        family = KernelFamily(merged["kernel"]) if merged["kernel"] else KernelFamily.GAUSSIAN
        model = build_multiscale(l1, l2, geometry, family=family)
    elif name == "nonstationary":
        _flag_conflicts(args, ("l1", "l2"), name)
        l1 = float(merged["l1"] if merged["l1"] is not None else 2.1)
        l2 = float(merged["l2"] if merged["l2"] is not None else 22.0)
        model = build_nonstationary(l1, l2, geometry)
    else:
        _flag_conflicts(args, ("l",), name)
        l = float(merged["l"] if merged["l"] is not None else 5.0)
        model = build_pressure_wind(l, geometry)
    return model


def cmd_build_cov(args, config: dict) -> int:
    """Construct one covariance model and write matrix plus metadata."""
    merged = _resolve(
        args, config,
        d=200, l=None, l1=None, l2=None, kernel=None, periodic=None, out=None,
    )
    model = _build_model(args.model_name, merged, args)
    out = Path(merged["out"] or f"cov_{args.model_name}.bin")
    merged.update(
        d=model.geometry.d, periodic=model.geometry.periodic, out=str(out),
    )
    _echo(f"build-cov {args.model_name}", merged)
    save_matrix(out, model.matrix)
    meta = {
        "model": args.model_name,
        "d": model.geometry.d,
        "dim": model.dim,
        "periodic": model.geometry.periodic,
        "mesh": model.geometry.mesh,
    }
    meta.update(model.params)
    _write_meta(Path(str(out) + ".meta.txt"), meta)
    print(f"wrote {out} ({model.dim} x {model.dim})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# estimate


def _load_or_draw(args, merged):
    """Return (ensemble, model) from --ensemble or --model input."""
    have_file = merged["ensemble"] is not None
    have_model = merged["model"] is not None
    if have_file == have_model:
        raise ConfigError("provide exactly one of --ensemble or --model")
    seed = int(merged["seed"])
    if have_file:
        for key, flag in (("n", "--n"), ("d", "--d")):
            if getattr(args, key, None) is not None:
                raise ConfigError(f"{flag} applies only when drawing from --model")
        data = load_matrix(merged["ensemble"])
        label = ModelLabel.CUSTOM
        return EnsembleData(data=data, model_label=label, seed=seed, stream=0), None
    name = merged["model"]
    if name not in _MODEL_NAMES:
        raise ConfigError(f"unknown model {name!r}, expected one of {_MODEL_NAMES}")
    if merged["n"] is None:
        raise ConfigError("--n is required when drawing from --model")
    model_merged = dict(merged)
    if model_merged["d"] is None:
        model_merged["d"] = 200
    model = _build_model(name, model_merged, _NO_FLAGS)
    ensemble = draw_ensemble(factorize(model), int(merged["n"]), seed=seed, stream=0)
    return ensemble, model


class _NoFlags:
    # Stand-in argument namespace: model parameters reached here through
    # the estimate command's own flags, so conflict checks are skipped.
    def __getattr__(self, name):
        return None


_NO_FLAGS = _NoFlags()


def _load_prior(merged, dim: int, *, required_by: str):
    path = merged["prior"]
    if path is None:
        raise ConfigError(f"--prior is required for the {required_by} estimator")
    prior = load_matrix(path)
    if prior.shape != (dim, dim):
        raise ConfigError(
            f"prior shape {prior.shape} does not match estimate dimension {dim}"
        )
    # Validates symmetry and positive semidefiniteness; a file that is
    # not a covariance is a model-validity error, not an estimate.
    return custom_model(prior)


def _write_qc_trace(path, residuals, objectives) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("iteration", "residual", "objective"))
        for index, resid in enumerate(residuals):
            objective = "" if objectives is None else repr(float(objectives[index]))
            writer.writerow((index + 1, repr(float(resid)), objective))


def cmd_estimate(args, config: dict) -> int:
    """Estimate a covariance from an ensemble and write it out."""
    merged = _resolve(
        args, config,
        ensemble=None, model=None, d=None, l=None, l1=None, l2=None,
        kernel=None, periodic=None, n=None, seed=DEFAULT_SEED, alpha=None,
        m=None, prior=None, theta_uniform=None, tol=1e-10, max_iter=500,
        out=None,
    )
    estimator = args.estimator
    ensemble, model = _load_or_draw(args, merged)
    s = sample_covariance(ensemble)
    dim = s.shape[0]
    out = Path(merged["out"] or f"estimate_{estimator}.bin")
    meta = {
        "estimator": estimator,
        "dim": dim,
        "n": ensemble.n,
        "source": merged["ensemble"] or merged["model"],
        "seed": int(merged["seed"]),
        "stream": 0,
    }

    if estimator == "sample":
        estimate = s
    elif estimator == "schur":
        family = KernelFamily(merged["kernel"] or KernelFamily.LAPLACIAN.value)
        l = float(merged["l"] if merged["l"] is not None else 5.0)
        if model is not None:
            geometry = model.geometry
            block = model.label is ModelLabel.PRESSURE_WIND
        else:
            periodic = True if merged["periodic"] is None else merged["periodic"]
            geometry = GridGeometry(d=dim, periodic=periodic)
            block = False
        layout = (
            LocalizationLayout.PRESSURE_WIND_BLOCK if block
            else LocalizationLayout.SCALAR
        )
        taper = build_localization(KernelSpec(family, l), geometry, layout)
        estimate = schur_estimate(s, taper)
        meta.update(kernel=family.value, l=l, layout=layout.value)
    elif estimator == "hybrid":
        if merged["alpha"] is None:
            raise ConfigError("--alpha is required for the hybrid estimator")
        alpha = float(merged["alpha"])
        if merged["prior"] is None and alpha == 0.0:
            # Weight zero never touches the prior, so none is needed and
            # the output is bitwise equal to the sample estimate.
            estimate = s
        else:
            prior = _load_prior(merged, dim, required_by="hybrid")
            estimate = hybrid_estimate(s, HybridSpec(prior=prior, alpha=alpha))
        meta.update(alpha=alpha, prior=merged["prior"] or "none")
    elif estimator == "iw":
        if merged["m"] is None:
            raise ConfigError("--m is required for the inverse-Wishart estimator")
        prior = _load_prior(merged, dim, required_by="inverse-Wishart")
        spec = InverseWishartSpec(prior=prior, m=float(merged["m"]))
        estimate = iw_map_estimate(s, spec, ensemble.n)
        meta.update(m=float(merged["m"]), prior=merged["prior"])
    else:
        if merged["theta_uniform"] is None:
            raise ConfigError("--theta-uniform is required for the qc estimator")
        strength = float(merged["theta_uniform"])
        penalty = PenaltyMatrix.uniform(dim, strength)
        options = QcSolveOptions(
            tol=float(merged["tol"]), max_iter=int(merged["max_iter"])
        )
        trace_path = Path(str(out) + ".trace.csv")
        meta.update(
            theta_uniform=strength, tol=options.tol, max_iter=options.max_iter
        )
        _echo(f"estimate {estimator}", merged)
        try:
            report = qc_map_estimate(s, penalty, ensemble.n, options)
        except NonConvergenceError as exc:
            # The residual trace is still written so a failed solve can
            # be diagnosed from its artifacts alone.
            _write_qc_trace(trace_path, exc.residual_trace, None)
            print(f"wrote {trace_path}")
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        estimate = report.estimate
        meta.update(
            iterations=report.iterations,
            final_residual=repr(report.final_residual),
            final_gradient_norm=repr(report.final_gradient_norm),
            objective=repr(report.objective),
            algorithm=report.algorithm.value,
        )
        _write_qc_trace(trace_path, report.residual_trace, report.objective_trace)
        save_matrix(out, estimate)
        _write_meta(Path(str(out) + ".meta.txt"), meta)
        print(f"wrote {out} ({dim} x {dim})")
        return EXIT_OK

    _echo(f"estimate {estimator}", merged)
    save_matrix(out, estimate)
    _write_meta(Path(str(out) + ".meta.txt"), meta)
    print(f"wrote {out} ({dim} x {dim})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _print_hybrid_tables(bundle) -> None:
    for label, result in bundle.sweeps.items():
        if not hasattr(label, "value"):
            continue
        print(f"model {label.value} (hybrid):")
        for row, n in enumerate(result.ensemble_sizes):
            best = result.optimal_parameter[row]
            err = result.mean_error[row].min()
            print(f"  n = {n:>4d}  optimal alpha = {best:.3f}  mean error = {err:.4f}")
        fit = bundle.fits[label]
        print(
            f"  fit {fit.exponent_form.value}: c = {fit.coefficient:.4g}, "
            f"r^2 = {fit.r_squared:.4f}"
        )


def _print_schur_tables(bundle) -> None:
    for key, curves in bundle.curves.items():
        if not isinstance(key, tuple):
            continue
        label, family = key
        print(f"model {label.value} (schur, {family.value} taper):")
        for curve in curves:
            print(
                f"  n = {curve.ensemble_size:>4d}  optimal length = "
                f"{curve.optimal_parameter:.4g}  mean error = "
                f"{min(curve.mean_error):.4f}"
            )
        fit = bundle.fits[key]
        print(
            f"  fit {fit.exponent_form.value}: c = {fit.coefficient:.4g}, "
            f"r^2 = {fit.r_squared:.4f}"
        )


def _print_illustration(bundle) -> None:
    print("tuned estimates at the showcase regime:")
    for estimator, parameter, error in bundle.artifacts["errors"]:
        print(
            f"  {estimator:<7s} parameter = {parameter:.4g}  "
            f"mean error = {error:.4f}"
        )


def cmd_sweep(args, config: dict) -> int:
    """Run one experiment suite, write its files, print a summary."""
    merged = _resolve(
        args, config,
        scale="ci", d=None, trials=None, seed=DEFAULT_SEED, threads=1,
        kernel=None, out=".",
    )
    suite = _SUITE_NAMES[args.family]
    kernels = (KernelFamily(merged["kernel"]),) if merged["kernel"] else None
    _echo(f"sweep {args.family}", merged)
    bundle = experiment_suite(
        suite,
        scale=merged["scale"],
        out_dir=merged["out"],
        d=None if merged["d"] is None else int(merged["d"]),
        trials=None if merged["trials"] is None else int(merged["trials"]),
        seed=int(merged["seed"]),
        kernels=kernels,
        threads=int(merged["threads"]),
    )
    if suite is SuiteName.HYBRID_SCALING:
        _print_hybrid_tables(bundle)
    elif suite is SuiteName.SCHUR_SCALING:
        _print_schur_tables(bundle)
    else:
        _print_illustration(bundle)
    for path in bundle.files:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _verify_psd_closure(seed: int, trials: int):
    models = benchmark_models(50)
    worst_recon = 0.0
    for model in models.values():
        factor = factorize(model)
        recon = factor.lower @ factor.lower.T
        rel = np.linalg.norm(recon - model.matrix) / np.linalg.norm(model.matrix)
        worst_recon = max(worst_recon, rel)
    model = models[ModelLabel.SINGLE_SCALE_LAPLACIAN]
    s = sample_covariance(draw_ensemble(factorize(model), 10, seed=seed))
    geometry = model.geometry
    worst_eig = np.inf
    for family in (KernelFamily.LAPLACIAN, KernelFamily.GAUSSIAN):
        taper = build_localization(KernelSpec(family, 3.0), geometry)
        worst_eig = min(worst_eig, np.linalg.eigvalsh(schur_estimate(s, taper))[0])
    hybrid = hybrid_estimate(s, HybridSpec(prior=model, alpha=0.5))
    worst_eig = min(worst_eig, np.linalg.eigvalsh(hybrid)[0])
    floor = -1e-10 * float(np.abs(s).max())
    ok = worst_recon <= 1e-10 and worst_eig >= floor
    return ok, (
        f"max factor reconstruction error {worst_recon:.3e} (tol 1e-10); "
        f"min estimate eigenvalue {worst_eig:.3e} (floor {floor:.1e})"
    )


def _verify_iw_hybrid(seed: int, trials: int):
    geometry = GridGeometry(d=20, periodic=True)
    model = build_single_scale(KernelSpec(KernelFamily.LAPLACIAN, 3.0), geometry)
    prior = custom_model(1.25 * model.matrix, geometry)
    factor = factorize(model)
    pairs = 0
    exact = True
    for n in (5, 30):
        s = sample_covariance(draw_ensemble(factor, n, seed=seed, stream=n))
        for m in (1.0, 7.0, 20.0):
            left = iw_map_estimate(s, InverseWishartSpec(prior=prior, m=m), n)
            right = hybrid_estimate(s, HybridSpec(prior=prior, alpha=m / (m + n)))
            exact = exact and np.array_equal(left, right)
            pairs += 1
    return exact, f"bitwise equality over {pairs} (m, n) pairs: {exact}"


def _verify_qc_fixed_point(seed: int, trials: int):
    worst_resid = 0.0
    worst_gap = 0.0
    spd = True
    count = 0
    for d in (5, 12):
        geometry = GridGeometry(d=d, periodic=True)
        model = build_single_scale(KernelSpec(KernelFamily.LAPLACIAN, 3.0), geometry)
        factor = factorize(model)
        for n in (5, 50):
            for strength in (1.0, 100.0):
                s = sample_covariance(
                    draw_ensemble(factor, n, seed=seed + count, stream=0)
                )
                count += 1
                penalty = PenaltyMatrix.uniform(d, strength)
                first = qc_map_estimate(s, penalty, n)
                second = qc_map_estimate(
                    s, penalty, n, initial=2.0 * np.diag(np.diag(s))
                )
                worst_resid = max(
                    worst_resid, first.final_residual, second.final_residual
                )
                worst_gap = max(
                    worst_gap, np.linalg.norm(first.estimate - second.estimate)
                )
                spd = spd and np.linalg.eigvalsh(first.estimate)[0] > 0
    ok = worst_resid <= 1e-10 and worst_gap <= 1e-8 and spd
    return ok, (
        f"{count} instances, two starts each: max residual {worst_resid:.3e} "
        f"(tol 1e-10), max start-to-start gap {worst_gap:.3e} (tol 1e-8), "
        f"all SPD: {spd}"
    )


def _verify_qc_limit(seed: int, trials: int):
    d, n = 10, 20
    geometry = GridGeometry(d=d, periodic=True)
    model = build_single_scale(KernelSpec(KernelFamily.LAPLACIAN, 3.0), geometry)
    s = sample_covariance(draw_ensemble(factorize(model), n, seed=seed))

    def discrepancy(strength: float) -> float:
        penalty = PenaltyMatrix.uniform(d, strength)
        report = qc_map_estimate(s, penalty, n, QcSolveOptions(tol=1e-12))
        taper = asymptotic_schur_localization(s, penalty, n)
        return float(np.abs(report.estimate - schur_estimate(s, taper)).max())

    strength = 1.0
    while discrepancy(strength) >= 1e-3 * float(np.abs(s).max()):
        strength *= 2.0
        if strength > 2.0 ** 40:
            return False, "no penalty strength reached the asymptotic regime"
    base = discrepancy(strength)
    tenfold = discrepancy(10.0 * strength)
    ratio = tenfold / base
    ok = ratio <= 1.0 / 30.0
    return ok, (
        f"disc(s) = {base:.3e} at s = {strength:g}, disc(10 s) = {tenfold:.3e}, "
        f"ratio = {ratio:.4f} (tol {1.0 / 30.0:.4f})"
    )


def _verify_screening(seed: int, trials: int):
    worst_identity = 0.0
    worst_band = 0.0
    for d in (5, 10, 50):
        for step in (0.2, 0.5, 1.0):
            geometry = GridGeometry(d=d, periodic=False)
            l = 1.0 / step
            model = build_single_scale(KernelSpec(KernelFamily.LAPLACIAN, l), geometry)
            precision = laplacian_grid_precision(l, geometry)
            identity = np.abs(precision @ model.matrix - np.eye(d)).max()
            worst_identity = max(worst_identity, float(identity))
            gaps = np.abs(np.subtract.outer(np.arange(d), np.arange(d)))
            worst_band = max(worst_band, float(np.abs(precision)[gaps >= 2].max()))
    ok = worst_identity <= 1e-10 and worst_band < 1e-10
    return ok, (
        f"max |precision @ covariance - identity| = {worst_identity:.3e} "
        f"(tol 1e-10); max magnitude beyond the tridiagonal band = {worst_band:.3e}"
    )


def _verify_bias_variance(seed: int, trials: int):
    d, n = 5, 20
    geometry = GridGeometry(d=d, periodic=False)
    model = build_single_scale(KernelSpec(KernelFamily.LAPLACIAN, 2.0), geometry)
    taper = build_localization(KernelSpec(KernelFamily.LAPLACIAN, 2.0), geometry)
    alpha = 0.3
    prior = custom_model(1.3 * model.matrix, geometry)
    # Tolerance for the variance ratio loosens as the square root of
    # the trial deficit relative to the reference hundred-thousand.
    ratio_tol = 0.05 * max(1.0, (100_000 / trials)) ** 0.5
    worst_z = 0.0
    worst_ratio = 0.0
    cases = (
        (taper, (taper.matrix - 1.0) * model.matrix, taper.matrix ** 2),
        (
            HybridSpec(prior=prior, alpha=alpha),
            alpha * (prior.matrix - model.matrix),
            np.full((d, d), (1.0 - alpha) ** 2),
        ),
    )
    for config, bias_pred, ratio_pred in cases:
        report = elementwise_bias_variance(model, config, n, trials, seed=seed)
        se = np.sqrt(report.est_variance / trials)
        worst_z = max(worst_z, float(np.abs((report.bias - bias_pred) / se).max()))
        deviation = np.abs(report.variance_ratio / ratio_pred - 1.0)
        worst_ratio = max(worst_ratio, float(deviation.max()))
    ok = worst_z <= 3.0 and worst_ratio <= ratio_tol
    return ok, (
        f"{trials} trials: worst bias deviation {worst_z:.2f} standard errors "
        f"(tol 3); worst variance-ratio deviation {worst_ratio:.2e} "
        f"(tol {ratio_tol:.2e})"
    )


_VERIFY_SUITES = {
    "psd-closure": _verify_psd_closure,
    "iw-hybrid": _verify_iw_hybrid,
    "qc-fixed-point": _verify_qc_fixed_point,
    "qc-limit": _verify_qc_limit,
    "screening": _verify_screening,
    "bias-variance": _verify_bias_variance,
}


def cmd_verify(args, config: dict) -> int:
    """Run invariant suites; exit 0 only when every line passes."""
    merged = _resolve(args, config, seed=DEFAULT_SEED, trials=40_000)
    _echo(f"verify {args.suite}", merged)
    names = list(_VERIFY_SUITES) if args.suite == "all" else [args.suite]
    failed = 0
    for name in names:
        ok, detail = _VERIFY_SUITES[name](int(merged["seed"]), int(merged["trials"]))
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += 0 if ok else 1
    return EXIT_OK if failed == 0 else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser and entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covloc",
        description="Covariance localization laboratory.",
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    def common(sub, *, seed: bool = True):
        sub.add_argument(
            "--config", default=None, metavar="PATH",
            help="key = value configuration file; flags override it",
        )
        if seed:
            sub.add_argument("--seed", type=int, default=None, help="master seed")

    def model_flags(sub):
        sub.add_argument("--d", type=int, default=None, help="grid size")
        sub.add_argument("--l", type=float, default=None, help="kernel length scale")
        sub.add_argument("--l1", type=float, default=None, help="first length scale")
        sub.add_argument("--l2", type=float, default=None, help="second length scale")
        sub.add_argument(
            "--kernel", choices=[k.value for k in KernelFamily], default=None,
        )
        sub.add_argument(
            "--periodic", action=argparse.BooleanOptionalAction, default=None,
            help="wrap the grid into a ring",
        )

    build = commands.add_parser(
        "build-cov", help="construct a covariance model and write it",
    )
    build.add_argument("model_name", choices=_MODEL_NAMES, metavar="model")
    model_flags(build)
    build.add_argument("--out", default=None, help="output matrix path")
    common(build, seed=False)

    estimate = commands.add_parser(
        "estimate", help="estimate a covariance from an ensemble",
    )
    estimate.add_argument("estimator", choices=_ESTIMATOR_NAMES, metavar="estimator")
    estimate.add_argument(
        "--ensemble", default=None, metavar="PATH", help="binary member matrix",
    )
    estimate.add_argument(
        "--model", default=None, choices=_MODEL_NAMES,
        help="draw a fresh ensemble from this model instead",
    )
    model_flags(estimate)
    estimate.add_argument("--n", type=int, default=None, help="ensemble size")
    estimate.add_argument("--alpha", type=float, default=None, help="hybrid weight")
    estimate.add_argument("--m", type=float, default=None, help="prior weight")
    estimate.add_argument(
        "--prior", default=None, metavar="PATH", help="binary prior matrix",
    )
    estimate.add_argument(
        "--theta-uniform", dest="theta_uniform", type=float, default=None,
        metavar="S", help="uniform off-diagonal penalty strength",
    )
    estimate.add_argument("--tol", type=float, default=None, help="solver tolerance")
    estimate.add_argument(
        "--max-iter", dest="max_iter", type=int, default=None,
        help="solver iteration budget",
    )
    estimate.add_argument("--out", default=None, help="output matrix path")
    common(estimate)

    sweep = commands.add_parser("sweep", help="run a canned experiment suite")
    sweep.add_argument("family", choices=_SWEEP_FAMILIES, metavar="family")
    sweep.add_argument("--scale", choices=("ci", "paper"), default=None)
    sweep.add_argument("--d", type=int, default=None, help="grid size override")
    sweep.add_argument("--trials", type=int, default=None, help="trial count override")
    sweep.add_argument(
        "--kernel", choices=[k.value for k in KernelFamily], default=None,
        help="restrict the Schur suite to one taper kernel",
    )
    sweep.add_argument("--threads", type=int, default=None, help="worker threads")
    sweep.add_argument("--out", default=None, help="output directory")
    common(sweep)

    verify = commands.add_parser("verify", help="run invariant suites")
    verify.add_argument(
        "suite", choices=(*_VERIFY_SUITES, "all"), metavar="suite",
    )
    verify.add_argument(
        "--trials", type=int, default=None, help="Monte Carlo trials",
    )
    common(verify)

    return parser


_HANDLERS = {
    "build-cov": cmd_build_cov,
    "estimate": cmd_estimate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_run_config(args.config) if args.config else {}
        return _HANDLERS[args.command](args, config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (ValueError, OSError) as exc:
        # OSError covers unreadable or missing input files named on the
        # command line, which is a usage problem like any bad argument.
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except ModelValidityError as exc:
        # Covers factorization failures as well; both mean the requested
        # matrix is not a usable covariance.
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
