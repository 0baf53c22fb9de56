"""Figures for covariance sweep and illustration results.

The package turns the files written by the experiment tool (sweep and
fit CSV tables, binary matrix dumps) into publication figures: a
covariance gallery, the localized-estimate illustration and the two
scaling plots.  Everything is driven by the documented file layouts;
nothing here imports the tool that produced them.
"""
from figgen.figures import (
    fit_label,
    render_cov_gallery,
    render_hybrid_scaling,
    render_loc_illustration,
    render_schur_scaling,
)
from figgen.inputs import (
    FIT_COLUMNS,
    SWEEP_COLUMNS,
    EmptyInputError,
    FitRow,
    InputError,
    SchemaError,
    SweepRow,
    classify_csv,
    read_fits,
    read_matrix,
    read_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "FIT_COLUMNS",
    "SWEEP_COLUMNS",
    "EmptyInputError",
    "FitRow",
    "InputError",
    "SchemaError",
    "SweepRow",
    "classify_csv",
    "fit_label",
    "read_fits",
    "read_matrix",
    "read_sweep",
    "render_cov_gallery",
    "render_hybrid_scaling",
    "render_loc_illustration",
    "render_schur_scaling",
    "__version__",
]
