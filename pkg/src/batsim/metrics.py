"""Aggregation of trial records into operating characteristics.

The nine quantities reported for every design: pFDR, FDR, Type I error
rates A and B, power, bias, MSE, coverage of the one-sided and symmetric
credible intervals, and mean sample size.  Every proportion carries its
binomial Monte Carlo standard error so tolerance checks can be expressed
in those units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .engine import RecordBatch, TrialRecord

__all__ = ["MetricsReport", "InflationVerdict", "compute_metrics", "fdr_inflation_check"]


@dataclass(frozen=True)
class MetricsReport:
    """Operating characteristics of one design under one scenario.

    pfdr is None when no replicate rejected (the quantity conditions on at
    least one rejection); fdr is 0 in that case.  type1_a and type1_b
    condition on the null being true, power on it being false.
    """

    pfdr: Optional[float]
    fdr: float
    type1_a: Optional[float]
    type1_b: Optional[float]
    power: Optional[float]
    bias: float
    mse: float
    coverage_one_sided: float
    coverage_symmetric: float
    mean_sample_size: float
    n_reject: int
    n_h0: int
    n_h1: int
    n_replicates: int
    mc_se: dict

    def as_dict(self) -> dict:
        out = {
            "pfdr": self.pfdr,
            "fdr": self.fdr,
            "type1_a": self.type1_a,
            "type1_b": self.type1_b,
            "power": self.power,
            "bias": self.bias,
            "mse": self.mse,
            "coverage_one_sided": self.coverage_one_sided,
            "coverage_symmetric": self.coverage_symmetric,
            "mean_sample_size": self.mean_sample_size,
        }
        return out


def _proportion_se(p, n) -> float:
    if p is None or n <= 0:
        return float("nan")
    return math.sqrt(p * (1.0 - p) / n)


def _columns(records: Union[RecordBatch, Sequence[TrialRecord]]):
    if isinstance(records, RecordBatch):
        return (records.h0_true.astype(bool), records.rejected.astype(bool),
                records.estimand_truth, records.post_mean,
                records.ci_one_lower, records.ci_one_upper,
                records.ci_sym_lower, records.ci_sym_upper,
                records.final_n.astype(float))
    rs = list(records)
    return (np.array([r.h0_true for r in rs]),
            np.array([r.rejected for r in rs]),
            np.array([r.estimand_truth for r in rs]),
            np.array([r.summary.post_mean for r in rs]),
            np.array([r.summary.ci_one_sided.lower for r in rs]),
            np.array([r.summary.ci_one_sided.upper for r in rs]),
            np.array([r.summary.ci_symmetric.lower for r in rs]),
            np.array([r.summary.ci_symmetric.upper for r in rs]),
            np.array([r.final_n for r in rs], dtype=float))


def compute_metrics(records: Union[RecordBatch, Sequence[TrialRecord]],
                    scenario=None) -> MetricsReport:
    """Aggregate one design's records.

    Coverage is computed over all replicates regardless of stopping stage;
    Type I error B is one minus the one-sided coverage among the replicates
    where the null is true.
    """
    h0, rej, truth, pm, o_lo, o_hi, s_lo, s_hi = _columns(records)[:8]
    final_n = _columns(records)[8]
    n = h0.shape[0]
    if n == 0:
        raise ValueError("need at least one record")
    n_h0 = int(h0.sum())
    n_h1 = n - n_h0
    n_reject = int(rej.sum())

    false_rej = int((rej & h0).sum())
    pfdr = false_rej / n_reject if n_reject > 0 else None
    fdr = (pfdr * n_reject / n) if pfdr is not None else 0.0
    type1_a = float(rej[h0].mean()) if n_h0 else None
    power = float(rej[~h0].mean()) if n_h1 else None

    cover_one = (o_lo <= truth) & (truth <= o_hi)
    cover_sym = (s_lo <= truth) & (truth <= s_hi)
    coverage_one = float(cover_one.mean())
    coverage_sym = float(cover_sym.mean())
    type1_b = float(1.0 - cover_one[h0].mean()) if n_h0 else None

    err = pm - truth
    bias = float(err.mean())
    mse = float((err * err).mean())
    mc_se = {
        "pfdr": _proportion_se(pfdr, n_reject),
        "type1_a": _proportion_se(type1_a, n_h0),
        "type1_b": _proportion_se(type1_b, n_h0),
        "power": _proportion_se(power, n_h1),
        "coverage_one_sided": _proportion_se(coverage_one, n),
        "coverage_symmetric": _proportion_se(coverage_sym, n),
        "bias": float(err.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan"),
        "mse": float((err * err).std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan"),
        "mean_sample_size": float(final_n.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan"),
    }
    return MetricsReport(
        pfdr=pfdr, fdr=fdr, type1_a=type1_a, type1_b=type1_b, power=power,
        bias=bias, mse=mse,
        coverage_one_sided=coverage_one, coverage_symmetric=coverage_sym,
        mean_sample_size=float(final_n.mean()),
        n_reject=n_reject, n_h0=n_h0, n_h1=n_h1, n_replicates=n, mc_se=mc_se,
    )


@dataclass(frozen=True)
class InflationVerdict:
    """Comparison of paired fixed/adaptive reports.

    inflated flags are strict (equal reports are not inflation); the
    within_noise flags grant three pooled standard errors of slack, for use
    where Monte Carlo noise could mask a small true inflation.
    """

    type1_a_fixed: float
    type1_a_adaptive: float
    pfdr_fixed: Optional[float]
    pfdr_adaptive: Optional[float]
    type1_a_inflated: bool
    pfdr_inflated: bool
    type1_a_within_noise: bool
    pfdr_within_noise: bool

    @property
    def inflated(self) -> bool:
        return self.type1_a_inflated and self.pfdr_inflated


def _pooled_se(a, b):
    a = 0.0 if a is None or math.isnan(a) else a
    b = 0.0 if b is None or math.isnan(b) else b
    return math.sqrt(a * a + b * b)


def fdr_inflation_check(report_fixed: MetricsReport,
                        report_adaptive: MetricsReport) -> InflationVerdict:
    """Check that interim looks inflated Type I error A and pFDR.

    Both reports should come from paired runs differing only in the interim
    schedule.
    """
    t1_f, t1_a = report_fixed.type1_a, report_adaptive.type1_a
    pf_f, pf_a = report_fixed.pfdr, report_adaptive.pfdr
    se_t1 = _pooled_se(report_fixed.mc_se["type1_a"], report_adaptive.mc_se["type1_a"])
    se_pf = _pooled_se(report_fixed.mc_se["pfdr"], report_adaptive.mc_se["pfdr"])
    return InflationVerdict(
        type1_a_fixed=t1_f,
        type1_a_adaptive=t1_a,
        pfdr_fixed=pf_f,
        pfdr_adaptive=pf_a,
        type1_a_inflated=(t1_a is not None and t1_f is not None and t1_a > t1_f),
        pfdr_inflated=(pf_a is not None and pf_f is not None and pf_a > pf_f),
        type1_a_within_noise=(t1_a is not None and t1_f is not None
                              and t1_a >= t1_f - 3.0 * se_t1),
        pfdr_within_noise=(pf_a is not None and pf_f is not None
                           and pf_a >= pf_f - 3.0 * se_pf),
    )
