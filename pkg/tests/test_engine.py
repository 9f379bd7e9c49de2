"""Trial engine: data generation laws, decision logic, pairing invariants,
and replicate-level reproducibility."""

import numpy as np
import pytest
from scipy import stats
from scipy.special import ndtr

from batsim.conjugate import BetaPrior, NixPrior, NormalKnownVarPrior
from batsim.engine import (
    Scenario,
    administrative_censor,
    build_accrual,
    draw_truth,
    run_scenario,
    run_trial,
    survival_dataset,
    _survival_latents,
)
from batsim.mcmc import McmcConfig, SurvPrior
from batsim.specfun import LN2, reg_inc_beta


def binary_scenario(**kw):
    base = dict(endpoint="binary", design="single_arm", n_max=100,
                interim_schedule=(40, 70), theta0=0.6, cutoff=0.689,
                n_replicates=2000, seed=11,
                treatment_gen=BetaPrior(3, 3), treatment_user=BetaPrior(3, 3))
    base.update(kw)
    return Scenario(**base)


def survival_scenario(**kw):
    base = dict(endpoint="survival", design="single_arm", n_max=100,
                interim_schedule=(40, 70), theta0=8.0, cutoff=0.61,
                n_replicates=100, seed=11,
                treatment_gen=SurvPrior(12, 2, 8, 2),
                treatment_user=SurvPrior(12, 2, 8, 2),
                mcmc=McmcConfig(n_iter=3100, burn_in=1000, thin=2))
    base.update(kw)
    return Scenario(**base)


class TestScenarioValidation:
    def test_schedule_must_increase_inside_range(self):
        with pytest.raises(ValueError):
            binary_scenario(interim_schedule=(70, 40))
        with pytest.raises(ValueError):
            binary_scenario(interim_schedule=(40, 100))

    def test_cutoff_domain(self):
        with pytest.raises(ValueError):
            binary_scenario(cutoff=1.0)
        with pytest.raises(ValueError):
            binary_scenario(cutoff=0.0)

    def test_prior_families_checked(self):
        with pytest.raises(ValueError):
            binary_scenario(treatment_user=NormalKnownVarPrior(0, 1))
        with pytest.raises(ValueError):
            Scenario(endpoint="binary", design="rct", n_max=50, cutoff=0.82,
                     n_replicates=10, seed=0,
                     treatment_gen=BetaPrior(3, 3), treatment_user=BetaPrior(3, 3))

    def test_unknown_endpoint(self):
        with pytest.raises(ValueError):
            binary_scenario(endpoint="poisson")


class TestDrawTruth:
    def test_binary_prior_mean(self):
        vals = [draw_truth(binary_scenario(), np.random.default_rng(i))["theta"]
                for i in range(20000)]
        assert np.mean(vals) == pytest.approx(0.5, abs=0.01)

    def test_survival_prior_means(self):
        s = survival_scenario()
        draws = [draw_truth(s, np.random.default_rng(i)) for i in range(20000)]
        assert np.mean([d["theta"] for d in draws]) == pytest.approx(6.0, rel=0.01)
        assert np.mean([d["kappa"] for d in draws]) == pytest.approx(4.0, rel=0.01)

    def test_degenerate_prior_concentrates(self):
        s = survival_scenario(treatment_gen=SurvPrior(4e9, 1e9, 3e9, 1e9))
        d = draw_truth(s, np.random.default_rng(0))
        assert d["theta"] == pytest.approx(4.0, abs=1e-3)
        assert d["kappa"] == pytest.approx(3.0, abs=1e-3)


class TestAccrual:
    def test_mean_interarrival_gap(self):
        s = survival_scenario()
        gaps = []
        for i in range(10000):
            plan = build_accrual(s, np.random.default_rng(i))
            gaps.append(np.diff(np.concatenate([[0.0], plan.arrival_times])))
        assert np.mean(np.concatenate(gaps)) == pytest.approx(1.0 / 6.0, rel=0.01)

    def test_interim_time_is_scheduled_patients_arrival(self):
        s = survival_scenario()
        plan = build_accrual(s, np.random.default_rng(3))
        assert plan.analysis_times[0] == plan.arrival_times[39]
        assert plan.analysis_times[1] == plan.arrival_times[69]
        assert plan.analysis_times[2] == plan.arrival_times[99] + 12.0

    def test_expected_40th_arrival(self):
        s = survival_scenario()
        t40 = [build_accrual(s, np.random.default_rng(i)).analysis_times[0]
               for i in range(4000)]
        assert np.mean(t40) == pytest.approx(40.0 / 6.0, rel=0.02)

    def test_rejects_non_survival(self):
        with pytest.raises(ValueError):
            build_accrual(binary_scenario(), np.random.default_rng(0))


class TestAdministrativeCensor:
    def test_censoring_arithmetic(self):
        # enrolled at month 5, event at 10 months on study, analysis at 12
        t, event = administrative_censor(np.array([10.0]), np.array([5.0]), 12.0)
        assert t[0] == 7.0
        assert event[0] == 0

    def test_event_before_cut_is_observed(self):
        t, event = administrative_censor(np.array([4.0]), np.array([5.0]), 12.0)
        assert t[0] == 4.0
        assert event[0] == 1

    def test_not_yet_enrolled_gets_zero_exposure(self):
        t, event = administrative_censor(np.array([4.0]), np.array([15.0]), 12.0)
        assert t[0] == 0.0
        assert event[0] == 0


class TestDecisionLogic:
    def test_cutoff_near_one_never_stops_early(self):
        s = binary_scenario(n_max=10, interim_schedule=(4, 7),
                            cutoff=float(np.nextafter(1.0, 0.0)), n_replicates=500)
        batch = run_scenario(s, designs=("adaptive",))["adaptive"]
        assert not batch.rejected.any()
        assert (batch.final_n == 10).all()

    def test_tiny_cutoff_stops_at_first_interim(self):
        s = binary_scenario(n_max=10, interim_schedule=(4, 7), cutoff=1e-300,
                            n_replicates=500)
        batch = run_scenario(s, designs=("adaptive",))["adaptive"]
        assert batch.rejected.all()
        assert (batch.final_n == 4).all()

    def test_extreme_interim_posterior_crosses_published_cutoff(self):
        # 40 successes in 40 under a vague prior: the tail mass above 0.6
        # must clear 0.689, so such a trial stops and rejects at look one
        prob = 1.0 - reg_inc_beta(0.6, 40.05, 0.05)
        assert prob > 0.689

    def test_rejected_implies_prob_above_cutoff(self):
        s = binary_scenario(n_replicates=4000)
        batch = run_scenario(s, designs=("adaptive",))["adaptive"]
        assert (batch.prob_at_stop[batch.rejected] > s.cutoff).all()
        stopped_early = batch.stop_index < 2
        assert (batch.final_n[stopped_early] < 100).all()
        assert (batch.final_n[~stopped_early] == 100).all()


class TestPairing:
    @pytest.mark.parametrize("endpoint,user,gen", [
        ("binary", BetaPrior(3, 3), BetaPrior(3, 3)),
        ("normal_known", NormalKnownVarPrior(0, 1), NormalKnownVarPrior(0, 1)),
        ("normal_unknown", NixPrior(0, 5, 5, 40), NixPrior(0, 5, 5, 40)),
    ])
    def test_adaptive_rejections_contain_fixed_rejections(self, endpoint, user, gen):
        s = Scenario(endpoint=endpoint, design="single_arm", n_max=100,
                     interim_schedule=(40, 70), theta0=0.25 if endpoint != "binary" else 0.6,
                     cutoff=0.5, n_replicates=5000, seed=3,
                     treatment_gen=gen, treatment_user=user)
        out = run_scenario(s)
        assert (out["adaptive"].rejected >= out["fixed"].rejected).all()
        assert np.array_equal(out["adaptive"].prob_final, out["fixed"].prob_final)

    def test_survival_pairing(self):
        out = run_scenario(survival_scenario(n_replicates=150))
        assert (out["adaptive"].rejected >= out["fixed"].rejected).all()
        assert (out["fixed"].final_n == 100).all()


class TestDeterminism:
    def test_same_seed_reproduces_batches(self):
        s = binary_scenario(n_replicates=3000)
        a = run_scenario(s)["adaptive"]
        b = run_scenario(s)["adaptive"]
        for field in ("estimand_truth", "rejected", "stop_index", "final_n",
                      "prob_at_stop", "post_mean", "ci_sym_lower", "ci_sym_upper"):
            assert np.array_equal(getattr(a, field), getattr(b, field)), field

    def test_zero_replicates(self):
        batch = run_scenario(binary_scenario(n_replicates=0))["adaptive"]
        assert len(batch) == 0
        assert batch.records() == []

    @pytest.mark.parametrize("maker", [binary_scenario, survival_scenario])
    def test_run_trial_equals_batch_row(self, maker):
        s = maker()
        batch = run_scenario(s, designs=("adaptive",))["adaptive"]
        for idx in (0, 7, 63):
            assert run_trial(s, idx) == batch.record(idx)


class TestSurvivalData:
    def test_observed_times_respect_exposure_and_latents(self):
        s = survival_scenario()
        truth, arrivals, event_times, analysis_times, _ = _survival_latents(
            s, np.arange(5, dtype=np.int64))
        for rep in range(5):
            for j, n_pat in enumerate((40, 70, 100)):
                data, at = survival_dataset(s, rep, j)
                assert at == pytest.approx(analysis_times[rep, j])
                exposure = np.maximum(at - arrivals[rep, :n_pat], 0.0)
                assert (data.time <= exposure + 1e-12).all()
                ev = data.event == 1
                assert np.allclose(data.time[ev], event_times[rep, :n_pat][ev])

    def test_treatment_arm_median_scaling(self):
        """Under the proportional-hazards generator, treatment-arm event
        times are Weibull with median scaled by exp(-beta/kappa)."""
        s = Scenario(endpoint="survival", design="rct", n_max=50,
                     interim_schedule=(20, 35), rho=1.0, cutoff=0.552,
                     n_replicates=300, seed=5,
                     treatment_gen=SurvPrior(6e9, 1e9, 4e9, 1e9,
                                             beta_mean=-0.5, beta_var=1e-18),
                     treatment_user=SurvPrior(12, 2, 8, 2, 0.0, 1.0),
                     mcmc=McmcConfig(n_iter=3100, burn_in=1000, thin=2))
        _, _, event_times, _, arm = _survival_latents(s, np.arange(300, dtype=np.int64))
        treat = event_times[:, arm == 1].ravel()
        control = event_times[:, arm == 0].ravel()
        med = 6.0 * np.exp(0.5 / 4.0)
        ks_t = stats.kstest(treat, stats.weibull_min(4.0, scale=med / LN2 ** 0.25).cdf)
        ks_c = stats.kstest(control, stats.weibull_min(4.0, scale=6.0 / LN2 ** 0.25).cdf)
        assert ks_t.pvalue > 0.001
        assert ks_c.pvalue > 0.001


class TestExactEnumeration:
    """The whole binary pipeline against an exact oracle.

    With success-count boundaries fixed by the cutoff, every operating
    characteristic of the matched-prior binary trial is computable exactly:
    enumerate the trinomial stopping paths per effect size and integrate
    over the generating prior piecewise around the null boundary.
    """

    @staticmethod
    def exact_values(theta0=0.6, b=(27, 45, 64)):
        from scipy.special import betaln

        nodes, weights = np.polynomial.legendre.leggauss(400)
        out = {}
        for lo, hi, tag in ((0.0, theta0, "h0"), (theta0, 1.0, "h1")):
            th = 0.5 * (hi - lo) * (nodes + 1.0) + lo
            w = 0.5 * (hi - lo) * weights * np.exp(
                2 * np.log(th) + 2 * np.log1p(-th) - betaln(3, 3))
            fixed = np.empty_like(th)
            adaptive = np.empty_like(th)
            mean_n = np.empty_like(th)
            for i, t in enumerate(th):
                p40 = stats.binom.pmf(np.arange(41), 40, t)
                p30 = stats.binom.pmf(np.arange(31), 30, t)
                stop1 = p40[b[0]:].sum()
                p70 = np.convolve(p40[:b[0]], p30)
                stop2 = p70[b[1]:].sum()
                p100 = np.convolve(p70[:b[1]], p30)
                adaptive[i] = stop1 + stop2 + p100[b[2]:].sum()
                fixed[i] = 1.0 - stats.binom.cdf(b[2] - 1, 100, t)
                mean_n[i] = 40 * stop1 + 70 * stop2 + 100 * (1 - stop1 - stop2)
            out[tag] = (w.sum(), w @ fixed, w @ adaptive, w @ mean_n)
        w0, f0, a0, n0 = out["h0"]
        w1, f1, a1, n1 = out["h1"]
        return {
            "fixed": {"pfdr": f0 / (f0 + f1), "type1_a": f0 / w0, "power": f1 / w1},
            "adaptive": {"pfdr": a0 / (a0 + a1), "type1_a": a0 / w0, "power": a1 / w1,
                         "mean_sample_size": n0 + n1},
        }

    def test_matched_binary_row_matches_enumeration(self):
        from batsim.metrics import compute_metrics

        exact = self.exact_values()
        s = binary_scenario(n_replicates=100_000, seed=77)
        out = run_scenario(s)
        for design in ("fixed", "adaptive"):
            report = compute_metrics(out[design])
            for key, expected in exact[design].items():
                observed = getattr(report, key)
                se = max(report.mc_se.get(key, 0.0), 1e-12)
                assert abs(observed - expected) < 4 * se, (
                    f"{design} {key}: {observed:.5f} vs exact {expected:.5f}")


class TestNullMass:
    def test_binary_h0_mass_matches_prior(self):
        s = binary_scenario(n_replicates=50000)
        batch = run_scenario(s, designs=("fixed",))["fixed"]
        expected = float(reg_inc_beta(0.6, 3, 3))
        se = np.sqrt(expected * (1 - expected) / 50000)
        assert abs(batch.h0_true.mean() - expected) < 3 * se

    def test_normal_h0_mass_matches_prior(self):
        s = Scenario(endpoint="normal_known", design="single_arm", n_max=100,
                     interim_schedule=(40, 70), theta0=0.25, cutoff=0.4,
                     n_replicates=50000, seed=1,
                     treatment_gen=NormalKnownVarPrior(0, 1),
                     treatment_user=NormalKnownVarPrior(0, 1))
        batch = run_scenario(s, designs=("fixed",))["fixed"]
        expected = float(ndtr(0.25))
        se = np.sqrt(expected * (1 - expected) / 50000)
        assert abs(batch.h0_true.mean() - expected) < 3 * se
