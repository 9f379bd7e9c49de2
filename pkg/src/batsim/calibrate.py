"""Probability-cutoff calibration against a pFDR target.

The cutoff is tuned on the fixed design (no interims): one simulation pass
stores each replicate's final-analysis superiority probability, then a
descending threshold sweep re-evaluates the rejection set per candidate
cutoff.  That makes the cost independent of grid resolution and makes the
rejection sets exactly nested across candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .engine import Scenario, run_scenario

__all__ = ["CalibrationSpec", "CalibrationResult", "calibrate_cutoff", "threshold_sweep"]


class CalibrationError(RuntimeError):
    """The target pFDR cannot be met at any cutoff."""


@dataclass(frozen=True)
class CalibrationSpec:
    """Inputs to the sweep.

    The scenario should pair the user prior with the data-generating prior
    (treatment arm); interims are dropped internally.  Grid defaults to
    0.001 for closed-form endpoints and 0.002 for the survival endpoint,
    whose probabilities carry sampler noise.
    """

    scenario: Scenario
    target_pfdr: float = 0.05
    grid_step: Optional[float] = None
    replicates: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.target_pfdr < 1.0:
            raise ValueError("target pFDR must lie in (0, 1)")
        if self.grid_step is not None and not 0.0 < self.grid_step < 0.5:
            raise ValueError("grid step out of range")

    @property
    def step(self) -> float:
        if self.grid_step is not None:
            return self.grid_step
        return 0.002 if self.scenario.endpoint == "survival" else 0.001


@dataclass(frozen=True)
class CalibrationResult:
    cutoff: float
    achieved_pfdr: float
    mc_se: float
    n_reject: int
    n_replicates: int
    grid_step: float
    band_lower: float  # grid cutoffs whose pFDR is within 3 MC SE of target
    band_upper: float


def threshold_sweep(probs, h0, step: float, target: float) -> CalibrationResult:
    """Sweep grid cutoffs over stored final-analysis probabilities.

    pFDR is recomputed at every grid cutoff rather than assumed monotone;
    among cutoffs whose pFDR does not exceed the target, the one closest to
    the target wins, ties resolving to the smallest cutoff.
    """
    probs = np.asarray(probs, float)
    h0 = np.asarray(h0, bool)
    grid = np.round(np.arange(step, 1.0, step), 10)
    order = np.argsort(probs)
    sorted_probs = probs[order]
    h0_sorted = h0[order].astype(float)
    # suffix sums give per-cutoff rejection tallies in O(R + G)
    suffix_h0 = np.concatenate([np.cumsum(h0_sorted[::-1])[::-1], [0.0]])
    idx = np.searchsorted(sorted_probs, grid, side="right")
    n_reject = probs.shape[0] - idx
    false_rej = suffix_h0[idx]
    with np.errstate(invalid="ignore", divide="ignore"):
        pfdr = np.where(n_reject > 0, false_rej / np.maximum(n_reject, 1), np.nan)

    eligible = (n_reject > 0) & (pfdr <= target)
    if not eligible.any():
        raise CalibrationError(
            f"pFDR exceeds {target} at every cutoff with rejections")
    best_pfdr = pfdr[eligible].max()
    candidates = eligible & (pfdr == best_pfdr)
    pick = int(np.flatnonzero(candidates)[0])
    se = float(np.sqrt(best_pfdr * (1.0 - best_pfdr) / n_reject[pick])) if n_reject[pick] else float("nan")

    near = (n_reject > 0) & (np.abs(pfdr - target) <= 3.0 * max(se, 1e-12))
    if near.any():
        band_lo = float(grid[near].min())
        band_hi = float(grid[near].max())
    else:
        band_lo = band_hi = float(grid[pick])
    return CalibrationResult(
        cutoff=float(grid[pick]),
        achieved_pfdr=float(best_pfdr),
        mc_se=se,
        n_reject=int(n_reject[pick]),
        n_replicates=probs.shape[0],
        grid_step=step,
        band_lower=band_lo,
        band_upper=band_hi,
    )


def calibrate_cutoff(spec: CalibrationSpec, *, threads=None, progress=None) -> CalibrationResult:
    """Find the cutoff whose fixed-design pFDR is closest to the target
    without exceeding it.

    One simulation pass stores every replicate's final-analysis probability;
    the sweep then costs nothing per extra grid point and keeps rejection
    sets nested across candidate cutoffs.
    """
    scenario = spec.scenario.fixed()
    if spec.replicates is not None:
        scenario = replace(scenario, n_replicates=int(spec.replicates))
    batch = run_scenario(scenario, designs=("fixed",), threads=threads,
                         progress=progress)["fixed"]
    return threshold_sweep(batch.prob_final, batch.h0_true, spec.step, spec.target_pfdr)
