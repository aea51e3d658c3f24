"""Figure renderer for mbmlink CSV datasets."""

__version__ = "0.1.0"

from .csvdata import EmptyCsvError, MissingColumnError, read_rows
from .jobs import JobError, PlotJob, load_job
from .plot import PlotResult, plot

__all__ = ["__version__", "EmptyCsvError", "MissingColumnError", "read_rows",
           "JobError", "PlotJob", "load_job", "PlotResult", "plot"]
