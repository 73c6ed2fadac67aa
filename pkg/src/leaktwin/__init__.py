"""Digital twin of a battery-free, water-powered LTE-M leak detector."""

from ._backend import DEFAULT_BACKEND as BACKEND
from .simkernel import RunResult, RunSummary, Scenario, SimParams, run, summary_stats, sweep

__version__ = "0.1.0"
