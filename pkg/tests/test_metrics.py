"""Metric aggregation on hand-built records and structural invariants."""

import math

import numpy as np
import pytest

from batsim.conjugate import PosteriorSummary
from batsim.engine import TrialRecord
from batsim.metrics import MetricsReport, compute_metrics, fdr_inflation_check
from batsim.specfun import Interval


def make_record(h0, rejected, truth=0.5, post_mean=0.5,
                one=(0.1, math.inf), sym=(0.1, 0.9), final_n=100):
    return TrialRecord(
        truth={"theta": truth},
        estimand_truth=truth,
        h0_true=h0,
        rejected=rejected,
        stop_analysis_index=0,
        final_n=final_n,
        summary=PosteriorSummary(
            prob_superior=0.7, post_mean=post_mean,
            ci_one_sided=Interval(*one), ci_symmetric=Interval(*sym)),
    )


class TestCounting:
    def test_four_record_example(self):
        records = [
            make_record(True, True),
            make_record(True, False),
            make_record(False, True),
            make_record(False, True),
        ]
        m = compute_metrics(records)
        assert m.pfdr == pytest.approx(1.0 / 3.0)
        assert m.fdr == pytest.approx(1.0 / 4.0)
        assert m.type1_a == pytest.approx(1.0 / 2.0)
        assert m.power == pytest.approx(1.0)
        assert m.fdr == pytest.approx(m.pfdr * m.n_reject / m.n_replicates)

    def test_full_coverage_means_zero_type1b(self):
        records = [make_record(True, False), make_record(False, False)]
        m = compute_metrics(records)
        assert m.coverage_one_sided == 1.0
        assert m.coverage_symmetric == 1.0
        assert m.type1_b == 0.0

    def test_no_rejections_reports_absent_pfdr(self):
        m = compute_metrics([make_record(True, False), make_record(False, False)])
        assert m.pfdr is None
        assert m.fdr == 0.0

    def test_all_rejected_makes_pfdr_equal_fdr(self):
        records = [make_record(True, True), make_record(False, True)]
        m = compute_metrics(records)
        assert m.pfdr == m.fdr

    def test_fdr_never_exceeds_pfdr(self):
        rng = np.random.default_rng(0)
        records = [make_record(bool(rng.integers(2)), bool(rng.integers(2)))
                   for _ in range(200)]
        m = compute_metrics(records)
        assert m.fdr <= m.pfdr

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        records = [make_record(bool(rng.integers(2)), bool(rng.integers(2)),
                               truth=rng.random(), post_mean=rng.random(),
                               final_n=int(rng.integers(40, 101)))
                   for _ in range(100)]
        a = compute_metrics(records)
        shuffled = list(records)
        rng.shuffle(shuffled)
        b = compute_metrics(shuffled)
        for key, value in a.as_dict().items():
            assert getattr(b, key) == pytest.approx(value, rel=1e-12), key
        assert (a.n_reject, a.n_h0, a.n_h1) == (b.n_reject, b.n_h0, b.n_h1)

    def test_bias_and_mse(self):
        records = [make_record(False, True, truth=0.4, post_mean=0.5),
                   make_record(False, True, truth=0.6, post_mean=0.5)]
        m = compute_metrics(records)
        assert m.bias == pytest.approx(0.0)
        assert m.mse == pytest.approx(0.01)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compute_metrics([])

    def test_mc_se_formula(self):
        records = [make_record(True, True)] * 3 + [make_record(False, True)] * 7
        m = compute_metrics(records)
        assert m.mc_se["pfdr"] == pytest.approx(math.sqrt(0.3 * 0.7 / 10))


def report_with(pfdr, type1_a, n=50_000):
    """A minimal paired-report stand-in with plausible standard errors."""
    n_h0, n_rej = int(0.6 * n), int(0.3 * n)
    return MetricsReport(
        pfdr=pfdr, fdr=pfdr * 0.3, type1_a=type1_a, type1_b=0.06, power=0.8,
        bias=0.0, mse=0.002, coverage_one_sided=0.95, coverage_symmetric=0.95,
        mean_sample_size=90.0, n_reject=n_rej, n_h0=n_h0, n_h1=n - n_h0,
        n_replicates=n,
        mc_se={"pfdr": math.sqrt(pfdr * (1 - pfdr) / n_rej),
               "type1_a": math.sqrt(type1_a * (1 - type1_a) / n_h0)},
    )


class TestInflationVerdict:
    def test_published_binary_pairing_is_inflated(self):
        v = fdr_inflation_check(report_with(0.046, 0.018), report_with(0.095, 0.041))
        assert v.inflated
        assert v.type1_a_within_noise and v.pfdr_within_noise

    def test_published_normal_pairing_is_inflated(self):
        v = fdr_inflation_check(report_with(0.050, 0.034), report_with(0.095, 0.069))
        assert v.inflated

    def test_identical_reports_are_not_inflated(self):
        r = report_with(0.05, 0.02)
        v = fdr_inflation_check(r, r)
        assert not v.inflated
        assert v.type1_a_within_noise and v.pfdr_within_noise
