"""The four figure renderers.

Two heatmap grids (a gallery of covariance models and the one-model
illustration of localized estimates) and two scaling plots (tuned
hybrid weight against ensemble size, tuned taper length against
ensemble size).  Conventions the result files leave open are fixed
here and stated in each figure caption: heatmap panels in the same row
share one symmetric color scale, scaling plots use log-log axes, and
fitted power laws are drawn dashed with their coefficient and fit
quality in the legend.

Output is deterministic: rendering depends only on the parsed inputs,
the SVG id salt is pinned, fonts are referenced by name instead of
embedded, and no timestamp is written, so rerunning on identical
inputs reproduces the file byte for byte.
"""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .inputs import FitRow, InputError, SweepRow

_RC = {
    "figure.dpi": 110,
    "font.size": 9,
    "axes.titlesize": 9.5,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "svg.hashsalt": "figgen",
    "svg.fonttype": "none",
}

_GRID_COLUMNS = 2
_CAPTION_STYLE = {"fontsize": 7.5, "color": "0.35"}

# Taper kernels are fitted against a fixed exponent each: the heavy
# tailed kernel against c*n, the smooth one against c*sqrt(n).
_KERNEL_FORMS = {"laplacian": "linear_n", "gaussian": "sqrt_n"}
_FORM_EXPONENTS = {"inverse_n": -1.0, "linear_n": 1.0, "sqrt_n": 0.5}


def _save(fig, out_path, image_format: str) -> None:
    """Write the figure and release it."""
    try:
        if image_format == "svg":
            fig.savefig(out_path, format="svg", metadata={"Date": None})
        elif image_format == "png":
            fig.savefig(out_path, format="png", dpi=150)
        else:
            raise ValueError(f"unsupported image format {image_format!r}")
    finally:
        plt.close(fig)


def fit_label(name: str, fit: FitRow) -> str:
    """Legend entry for one fitted curve.

    The coefficient and the coefficient of determination are shown to
    three decimals exactly as read from the fit file.
    """
    return f"{name}: c={fit.coefficient:.3f}, R²={fit.r_squared:.3f}"


def _heatmap_grid(panels, caption: str, out_path, image_format: str) -> None:
    """Render titled matrices as a grid, two panels per row.

    Every row shares one color scale, symmetric about zero and wide
    enough for the largest entry in that row, so panels side by side
    are directly comparable.
    """
    if not panels:
        raise InputError("no matrices to draw")
    nrows = math.ceil(len(panels) / _GRID_COLUMNS)
    with matplotlib.rc_context(_RC):
        fig, axes = plt.subplots(
            nrows, _GRID_COLUMNS,
            figsize=(6.4, 2.9 * nrows + 0.4),
            layout="constrained", squeeze=False,
        )
        for start in range(0, len(panels), _GRID_COLUMNS):
            row = start // _GRID_COLUMNS
            chunk = panels[start:start + _GRID_COLUMNS]
            vmax = max(float(np.abs(mat).max()) for _, mat in chunk)
            if vmax == 0.0:
                vmax = 1.0
            image = None
            for offset, (title, mat) in enumerate(chunk):
                ax = axes[row][offset]
                image = ax.imshow(
                    mat, cmap="RdBu_r", vmin=-vmax, vmax=vmax,
                    interpolation="nearest",
                )
                ax.set_title(title)
                ax.tick_params(labelsize=7)
            for offset in range(len(chunk), _GRID_COLUMNS):
                axes[row][offset].set_visible(False)
            fig.colorbar(
                image, ax=list(axes[row][:len(chunk)]),
                shrink=0.85, pad=0.02,
            )
        fig.supxlabel(caption, **_CAPTION_STYLE)
        _save(fig, out_path, image_format)


def render_cov_gallery(panels, out_path, *, image_format: str = "svg") -> None:
    """Draw a gallery of covariance matrices.

    Parameters
    ----------
    panels : sequence of (str, ndarray)
        Title and matrix per panel, drawn in the given order.
    out_path : path-like
        Destination image file.
    image_format : {"svg", "png"}
    """
    _heatmap_grid(
        list(panels),
        "Color scale: symmetric about zero, shared within each row.",
        out_path, image_format,
    )


def render_loc_illustration(
    panels, out_path, *, image_format: str = "svg", errors=None
) -> None:
    """Draw a truth matrix next to its estimates.

    Parameters
    ----------
    panels : sequence of (str, ndarray)
        Title and matrix per panel.  When `errors` holds an entry for a
        panel title, the tuned parameter and the relative error are
        appended to that title.
    out_path : path-like
        Destination image file.
    image_format : {"svg", "png"}
    errors : dict, optional
        Estimator name to (parameter, relative error), as read from the
        errors file of the illustration run.
    """
    errors = dict(errors or {})
    titled = []
    for name, mat in panels:
        if name in errors:
            parameter, err = errors[name]
            detail = f"error {err:.3f}"
            if name == "hybrid":
                detail = f"weight {parameter:.2f}, {detail}"
            elif name == "schur":
                detail = f"length {parameter:.3g}, {detail}"
            titled.append((f"{name}  ({detail})", mat))
        else:
            titled.append((name, mat))
    caption = (
        "Color scale: symmetric about zero, shared within each row; "
        "errors are Frobenius-norm distances to the truth, relative to "
        "its norm."
    )
    _heatmap_grid(titled, caption, out_path, image_format)


def _optimal_curve(rows):
    """Tuned parameter per ensemble size from raw sweep rows.

    Ties in the mean error break toward the smaller parameter, matching
    the argmin convention of the sweep tool.
    """
    by_n: dict[int, list[SweepRow]] = {}
    for row in rows:
        by_n.setdefault(row.n, []).append(row)
    sizes = sorted(by_n)
    optima = []
    for n in sizes:
        best = min(by_n[n], key=lambda r: (r.mean_error, r.parameter))
        optima.append(best.parameter)
    return sizes, optima


def _find_fit(fits, *, model: str, estimator: str, exponent_form: str) -> FitRow:
    for fit in fits:
        if (fit.model == model and fit.estimator == estimator
                and fit.exponent_form == exponent_form):
            return fit
    raise InputError(
        f"no {exponent_form} fit row for model {model!r}, "
        f"estimator {estimator!r}"
    )


def _scaling_plot(
    series, ylabel: str, caption: str, out_path, image_format: str
) -> None:
    """Shared machinery of the two scaling figures.

    `series` holds (label, sizes, optima, fit) per curve.  Measured
    optima are drawn as markers and the fitted power law as a dashed
    line in the same color.  Log axes cannot show a tuned parameter of
    zero; such points are dropped and counted in the caption.
    """
    dropped = 0
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.0, 4.2), layout="constrained")
        colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        for index, (label, sizes, optima, fit) in enumerate(series):
            color = colors[index % len(colors)]
            kept = [(n, p) for n, p in zip(sizes, optima) if p > 0]
            dropped += len(sizes) - len(kept)
            if kept:
                ax.plot(
                    [n for n, _ in kept], [p for _, p in kept],
                    linestyle="none", marker="o", markersize=4.5,
                    color=color, label=fit_label(label, fit),
                )
            exponent = _FORM_EXPONENTS[fit.exponent_form]
            if fit.coefficient > 0:
                dense = np.geomspace(min(sizes), max(sizes), 200)
                ax.plot(
                    dense, fit.coefficient * dense ** exponent,
                    linestyle="--", linewidth=1.0, color=color,
                )
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("ensemble size n")
        ax.set_ylabel(ylabel)
        ax.legend(loc="best")
        if dropped:
            caption = (
                f"{caption} {dropped} tuned value(s) of zero omitted by "
                "the log scale."
            )
        fig.supxlabel(caption, **_CAPTION_STYLE)
        _save(fig, out_path, image_format)


def render_hybrid_scaling(
    sweep_rows, fits, out_path, *, image_format: str = "svg"
) -> None:
    """Plot the tuned shrinkage weight against ensemble size per model.

    Parameters
    ----------
    sweep_rows : sequence of SweepRow
        Raw sweep rows; the tuned weight per ensemble size is the error
        argmin over the parameter grid.  All rows must come from the
        hybrid estimator.
    fits : sequence of FitRow
        Fit rows; each model needs an `inverse_n` entry, drawn as the
        dashed curve coefficient/n.
    out_path : path-like
        Destination image file.
    image_format : {"svg", "png"}
    """
    by_model: dict[str, list[SweepRow]] = {}
    for row in sweep_rows:
        if row.estimator != "hybrid":
            raise InputError(
                f"hybrid scaling figure got sweep rows for estimator "
                f"{row.estimator!r}"
            )
        by_model.setdefault(row.model, []).append(row)
    if not by_model:
        raise InputError("no sweep rows to plot")
    series = []
    for model in sorted(by_model):
        sizes, optima = _optimal_curve(by_model[model])
        fit = _find_fit(
            fits, model=model, estimator="hybrid", exponent_form="inverse_n"
        )
        series.append((model, sizes, optima, fit))
    caption = (
        "Log-log axes.  Markers: tuned weights; dashed: fitted c/n with "
        "c and R² from the fit file."
    )
    _scaling_plot(
        series, "optimal weight", caption, out_path, image_format
    )


def render_schur_scaling(
    sweep_rows, fits, out_path, *, image_format: str = "svg"
) -> None:
    """Plot the tuned taper length against ensemble size per curve.

    One curve per (model, taper kernel) pair.  The fitted form follows
    the kernel: `linear_n` for laplacian tapers, `sqrt_n` for gaussian
    ones, mirroring how the sweep tool pairs them.

    Parameters
    ----------
    sweep_rows : sequence of SweepRow
        Raw sweep rows from the taper estimator, with a nonempty kernel
        column.
    fits : sequence of FitRow
        Fit rows; each model needs entries for the forms its kernels
        call for.
    out_path : path-like
        Destination image file.
    image_format : {"svg", "png"}
    """
    by_curve: dict[tuple[str, str], list[SweepRow]] = {}
    for row in sweep_rows:
        if row.estimator != "schur":
            raise InputError(
                f"taper scaling figure got sweep rows for estimator "
                f"{row.estimator!r}"
            )
        if row.kernel not in _KERNEL_FORMS:
            raise InputError(
                f"no fitted exponent is associated with taper kernel "
                f"{row.kernel!r}"
            )
        by_curve.setdefault((row.model, row.kernel), []).append(row)
    if not by_curve:
        raise InputError("no sweep rows to plot")
    series = []
    for model, kernel in sorted(by_curve):
        sizes, optima = _optimal_curve(by_curve[(model, kernel)])
        fit = _find_fit(
            fits, model=model, estimator="schur",
            exponent_form=_KERNEL_FORMS[kernel],
        )
        series.append((f"{model}, {kernel} taper", sizes, optima, fit))
    caption = (
        "Log-log axes.  Markers: tuned lengths; dashed: fitted c·n "
        "(laplacian tapers) and c·√n (gaussian tapers) with c "
        "and R² from the fit file."
    )
    _scaling_plot(
        series, "optimal length scale", caption, out_path, image_format
    )
