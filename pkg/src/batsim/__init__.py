"""Monte Carlo operating characteristics of Bayesian adaptive trial designs."""

__version__ = "0.1.0"

from .calibrate import CalibrationSpec, calibrate_cutoff
from .conjugate import (
    BetaPrior,
    BinaryData,
    NixPrior,
    NormalData,
    NormalKnownVarPrior,
    PosteriorSummary,
)
from .engine import Scenario, TrialRecord, run_scenario, run_trial
from .mcmc import McmcConfig, SurvData, SurvPrior
from .metrics import MetricsReport, compute_metrics, fdr_inflation_check
from .specfun import Interval, RngStream
