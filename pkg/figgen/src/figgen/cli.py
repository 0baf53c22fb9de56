"""Command line interface: one figure per invocation.

``figgen <figure> --in <paths> --out <path>`` reads result files from
the experiment tool and writes one image.  The four figures:

``cov-gallery``
    Heatmap grid of covariance matrices, one binary matrix file per
    panel.
``loc-illustration``
    Heatmap grid of a truth matrix and its estimates, from the matrix
    files of an illustration run plus, optionally, its errors CSV for
    panel annotations.
``hybrid-scaling``
    Tuned shrinkage weight against ensemble size, from one sweep CSV
    per model and the fit CSV; the fitted coefficient/n curves are
    overlaid.
``schur-scaling``
    Tuned taper length against ensemble size, from one sweep CSV per
    model and kernel plus the fit CSV.

The image format follows the ``--out`` suffix (``.svg`` or ``.png``)
unless ``--format`` overrides it.  CSV inputs of the two scaling
figures are told apart by their header line, so the order of paths
after ``--in`` never matters.

Exit codes: 0 figure written, 1 output could not be written, 2
argument error, 3 unusable input file.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from figgen.figures import (
    render_cov_gallery,
    render_hybrid_scaling,
    render_loc_illustration,
    render_schur_scaling,
)
from figgen.inputs import (
    InputError,
    classify_csv,
    read_fits,
    read_matrix,
    read_sweep,
)

EXIT_OK = 0
EXIT_OUTPUT = 1
EXIT_USAGE = 2
EXIT_INPUT = 3

_FIGURES = ("cov-gallery", "loc-illustration", "hybrid-scaling",
            "schur-scaling")

# The illustration panels in their conventional reading order.
_ILLUSTRATION_ROLES = ("truth", "sample", "hybrid", "schur")


def _normalize_figure(name: str) -> str:
    return name.replace("-", "").replace("_", "").lower()


def _is_csv(path: Path) -> bool:
    return path.suffix.lower() == ".csv"


def _gallery(inputs, out, image_format) -> None:
    panels = []
    for path in inputs:
        if _is_csv(path):
            raise InputError(
                f"{path}: the gallery takes binary matrix files, not CSV"
            )
        panels.append((path.stem, read_matrix(path)))
    render_cov_gallery(panels, out, image_format=image_format)


def _illustration(inputs, out, image_format) -> None:
    matrices = []
    errors_path = None
    for path in inputs:
        if _is_csv(path):
            if errors_path is not None:
                raise InputError(
                    f"{path}: more than one errors CSV among the inputs"
                )
            errors_path = path
        else:
            matrices.append(path)
    if not matrices:
        raise InputError("no matrix files among the inputs")

    # Panels fall into reading order (truth, then estimates) when every
    # file name pins down a distinct role; otherwise the given order
    # stands, with file stems as titles.
    roles = {}
    for path in matrices:
        found = [role for role in _ILLUSTRATION_ROLES if role in path.stem]
        if len(found) == 1 and found[0] not in roles:
            roles[found[0]] = path
        else:
            roles = {}
            break
    if len(roles) == len(matrices):
        panels = [
            (role, read_matrix(roles[role]))
            for role in _ILLUSTRATION_ROLES if role in roles
        ]
    else:
        panels = [(path.stem, read_matrix(path)) for path in matrices]

    errors = None
    if errors_path is not None:
        errors = {
            row.estimator: (row.parameter, row.mean_error)
            for row in read_sweep(errors_path)
        }
    render_loc_illustration(
        panels, out, image_format=image_format, errors=errors
    )


def _scaling_inputs(inputs):
    """Split CSV inputs into merged sweep rows and the one fit table."""
    sweep_rows = []
    fit_rows = None
    for path in inputs:
        if not _is_csv(path):
            raise InputError(
                f"{path}: scaling figures take CSV files, not binary input"
            )
        kind = classify_csv(path)
        if kind == "fit":
            if fit_rows is not None:
                raise InputError(
                    f"{path}: more than one fit CSV among the inputs"
                )
            fit_rows = read_fits(path)
        else:
            sweep_rows.extend(read_sweep(path))
    if fit_rows is None:
        raise InputError(
            "the inputs include no fit CSV; pass the fit table written "
            "by the sweep alongside the sweep files"
        )
    if not sweep_rows:
        raise InputError("the inputs include no sweep CSV")
    return sweep_rows, fit_rows


def _hybrid_scaling(inputs, out, image_format) -> None:
    sweep_rows, fit_rows = _scaling_inputs(inputs)
    render_hybrid_scaling(sweep_rows, fit_rows, out,
                          image_format=image_format)


def _schur_scaling(inputs, out, image_format) -> None:
    sweep_rows, fit_rows = _scaling_inputs(inputs)
    render_schur_scaling(sweep_rows, fit_rows, out,
                         image_format=image_format)


_DISPATCH = {
    "covgallery": _gallery,
    "locillustration": _illustration,
    "hybridscaling": _hybrid_scaling,
    "schurscaling": _schur_scaling,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figgen",
        description="Render experiment result files into one figure.",
        epilog=(
            "figures: " + ", ".join(_FIGURES) + ".  Exit codes: 0 figure "
            "written, 1 output not writable, 2 argument error, 3 unusable "
            "input file."
        ),
    )
    parser.add_argument(
        "figure",
        help="figure to render; hyphens and case are ignored",
    )
    parser.add_argument(
        "--in", dest="inputs", nargs="+", required=True, metavar="PATH",
        type=Path, help="input files (CSV tables and binary matrices)",
    )
    parser.add_argument(
        "--out", required=True, type=Path, metavar="PATH",
        help="output image path",
    )
    parser.add_argument(
        "--format", choices=("svg", "png"),
        help="image format; default follows the --out suffix",
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    figure = _normalize_figure(args.figure)
    if figure not in _DISPATCH:
        parser.error(
            f"unknown figure {args.figure!r} (choose from "
            f"{', '.join(_FIGURES)})"
        )
    image_format = args.format
    if image_format is None:
        suffix = args.out.suffix.lower().lstrip(".")
        if suffix not in ("svg", "png"):
            parser.error(
                f"cannot infer the image format from {args.out.name!r}; "
                "use an .svg or .png suffix or pass --format"
            )
        image_format = suffix

    try:
        _DISPATCH[figure](list(args.inputs), args.out, image_format)
    except InputError as exc:
        print(f"figgen: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"figgen: cannot write {args.out}: {exc.strerror or exc}",
              file=sys.stderr)
        return EXIT_OUTPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
