"""Executable property suites for the theoretical claims.

Each suite turns one theoretical statement into a measured check over
matched-prior scenarios (user prior equal to the data-generating prior on
the arm that defines the estimand):

* martingale      posterior-mean bias is zero, with and without interims;
* coverage        credible intervals hit 95% coverage, with and without
                  interims;
* fdr-inflation   interim looks inflate Type I error A and pFDR;
* mse-inflation   interim looks inflate the posterior mean's MSE;
* mcmc-geweke     one-sweep prior invariance of the survival sampler.

Closed-form endpoints run at full Monte Carlo scale; the survival scenarios
run at a reduced scale with correspondingly widened tolerances, since each
replicate costs thousands of sampler iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import stats

from .engine import run_scenario
from .mcmc import geweke_sweeps
from .metrics import compute_metrics, fdr_inflation_check
from .presets import load_preset
from .specfun import RngStream

__all__ = ["PropertyCheck", "SuiteResult", "SUITES", "run_suite"]

SUITES = ("martingale", "coverage", "fdr-inflation", "mse-inflation", "mcmc-geweke")

# matched-prior rows of the shipped presets
_MATCHED = {
    "binary": ("table2", "Beta(3, 3)"),
    "normal_known": ("table3", "N(0, 1)"),
    "normal_unknown": ("table4", "NIX(0.0, 5.0, 5.0, 40.0)"),
    "survival": ("table5", "Gamma(12, 2) x Gamma(8, 2)"),
    "binary_rct": ("table_s3", "Beta(3, 3)"),
    "normal_known_rct": ("table_s4", "N(0, 1)"),
    "normal_unknown_rct": ("table_s5", "NIX(0.0, 5.0, 5.0, 40.0)"),
    "survival_rct": ("table_s6", "Gamma(12, 2) x Gamma(8, 2), HR N(0, 1)"),
}

_MARTINGALE_REPS = {
    "binary": 200_000, "normal_known": 200_000, "normal_unknown": 200_000,
    "survival": 2_000,
    "binary_rct": 20_000, "normal_known_rct": 50_000, "normal_unknown_rct": 20_000,
    "survival_rct": 1_000,
}
# coverage / inflation suites share one run per scenario via the report cache
_SHARED_REPS = {**_MARTINGALE_REPS, "binary": 50_000, "normal_known": 50_000,
                "normal_unknown": 50_000}
_SMOKE_REPS = {k: (200 if k.startswith("survival") else 4_000) for k in _MARTINGALE_REPS}


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    passed: bool
    observed: float
    bound: str
    detail: str = ""


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    passed: bool
    checks: tuple

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [vars(c) for c in self.checks],
        }


def _matched_scenario(key: str, n_reps: int, seed_offset: int = 0):
    preset, label = _MATCHED[key]
    spec = load_preset(preset)
    scen = spec.scenario_for(spec.variant(label))
    return replace(scen, n_replicates=n_reps, seed=scen.seed + seed_offset)


@lru_cache(maxsize=64)
def _cached_reports(key: str, n_reps: int, seed_offset: int = 0):
    """Fixed and adaptive metric reports of one matched-prior run.

    Suites overlap heavily in the runs they need; caching the (small)
    reports lets coverage and both inflation suites reuse one simulation.
    Thread count is excluded from the key because it cannot change results.
    """
    scen = _matched_scenario(key, n_reps, seed_offset)
    out = run_scenario(scen)
    return compute_metrics(out["fixed"]), compute_metrics(out["adaptive"])


def _run_matched(key, n_reps, threads, progress, seed_offset=0):
    if threads:
        import numba

        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    if progress:
        progress(f"scenario {key}", 0, 1)
    fixed, adaptive = _cached_reports(key, n_reps, seed_offset)
    return fixed, adaptive, None


def run_suite(suite: str, scale: str = "full", threads: Optional[int] = None,
              progress=None) -> SuiteResult:
    """Execute one named suite and report per-check pass/fail."""
    if suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {SUITES}")
    if scale not in ("full", "smoke"):
        raise ValueError("scale must be 'full' or 'smoke'")
    checks = []
    if suite == "martingale":
        reps = _MARTINGALE_REPS if scale == "full" else _SMOKE_REPS
        for key in _MATCHED:
            fixed, adaptive, _ = _run_matched(key, reps[key], threads, progress)
            for design, rep in (("fixed", fixed), ("adaptive", adaptive)):
                bound = 3.0 * rep.mc_se["bias"]
                checks.append(PropertyCheck(
                    name=f"martingale/{key}/{design}",
                    passed=abs(rep.bias) <= bound,
                    observed=rep.bias,
                    bound=f"|bias| <= {bound:.2e}",
                    detail=f"{rep.n_replicates} replicates",
                ))
    elif suite == "coverage":
        reps = _SHARED_REPS if scale == "full" else _SMOKE_REPS
        for key in _MATCHED:
            tol = 0.02 if key.startswith("survival") or scale == "smoke" else 0.005
            fixed, adaptive, _ = _run_matched(key, reps[key], threads, progress)
            for design, rep in (("fixed", fixed), ("adaptive", adaptive)):
                for kind in ("one_sided", "symmetric"):
                    cov = getattr(rep, f"coverage_{kind}")
                    checks.append(PropertyCheck(
                        name=f"coverage/{key}/{design}/{kind}",
                        passed=abs(cov - 0.95) <= tol,
                        observed=cov,
                        bound=f"0.95 +/- {tol}",
                        detail=f"{rep.n_replicates} replicates",
                    ))
    elif suite in ("fdr-inflation", "mse-inflation"):
        reps = _SHARED_REPS if scale == "full" else _SMOKE_REPS
        for key in _MATCHED:
            fixed, adaptive, _ = _run_matched(key, reps[key], threads, progress)
            if suite == "fdr-inflation":
                verdict = fdr_inflation_check(fixed, adaptive)
                checks.append(PropertyCheck(
                    name=f"fdr-inflation/{key}/type1_a",
                    passed=verdict.type1_a_inflated,
                    observed=verdict.type1_a_adaptive - verdict.type1_a_fixed,
                    bound="adaptive > fixed",
                    detail=f"{verdict.type1_a_fixed:.4f} -> {verdict.type1_a_adaptive:.4f}",
                ))
                checks.append(PropertyCheck(
                    name=f"fdr-inflation/{key}/pfdr",
                    passed=verdict.pfdr_inflated,
                    observed=(verdict.pfdr_adaptive or 0.0) - (verdict.pfdr_fixed or 0.0),
                    bound="adaptive > fixed",
                    detail=f"{verdict.pfdr_fixed:.4f} -> {verdict.pfdr_adaptive:.4f}",
                ))
            else:
                checks.append(PropertyCheck(
                    name=f"mse-inflation/{key}",
                    passed=adaptive.mse >= fixed.mse,
                    observed=adaptive.mse - fixed.mse,
                    bound="mse_adaptive >= mse_fixed",
                    detail=f"{fixed.mse:.4g} -> {adaptive.mse:.4g}",
                ))
    else:  # mcmc-geweke
        n_sweeps = 50_000 if scale == "full" else 10
        scen = _matched_scenario("survival", 1)
        prior = scen.treatment_user
        exposures = np.array([2.0, 4.0, 6.0, 8.0, 10.0])
        theta, kappa = geweke_sweeps(prior, exposures, n_sweeps,
                                     RngStream(scen.seed, 0))
        for name, draws, (shape, rate) in (
            ("theta", theta, (prior.theta_shape, prior.theta_rate)),
            ("kappa", kappa, (prior.kappa_shape, prior.kappa_rate)),
        ):
            ks = stats.kstest(draws, stats.gamma(shape, scale=1.0 / rate).cdf)
            checks.append(PropertyCheck(
                name=f"mcmc-geweke/{name}",
                passed=ks.pvalue > 0.001,
                observed=float(ks.pvalue),
                bound="KS p-value > 0.001",
                detail=f"{n_sweeps} sweeps, D={ks.statistic:.4f}",
            ))
    return SuiteResult(suite=suite, passed=all(c.passed for c in checks),
                       checks=tuple(checks))
