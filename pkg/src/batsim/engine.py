"""Trial simulation engine.

One replicate = one complete trial: draw the true parameters from the
data-generating prior, generate patient outcomes, apply the posterior
superiority stopping rule at each scheduled analysis, and record the
outcome together with the posterior summary at the stopping analysis.

Replicate k draws everything it needs from the counter-based stream
(seed, k), in a fixed documented order (truth first, then patient outcomes
in enrollment order, then accrual for survival endpoints), so a single
replicate can be regenerated in isolation and batch results never depend
on execution order or thread count.  The adaptive and fixed designs are
evaluated on the same simulated data, so their difference isolates the
effect of the interim analyses alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from . import _mwg
from .conjugate import (
    BetaPrior,
    BinaryData,
    NixPrior,
    NormalData,
    NormalKnownVarPrior,
    NormalPosterior,
    PosteriorSummary,
    TPosterior,
    beta_posterior,
    nix_posterior,
    normal_known_posterior,
    prob_superior_rct,
    prob_superior_single,
)
from .mcmc import McmcConfig, SurvPrior
from .specfun import (
    Interval,
    RngStream,
    normal_quantile,
    reg_inc_beta_inv,
    student_t_quantile,
)

__all__ = [
    "Scenario",
    "TrialRecord",
    "RecordBatch",
    "AccrualPlan",
    "ReplicateFailure",
    "draw_truth",
    "build_accrual",
    "run_trial",
    "run_scenario",
]

ENDPOINTS = ("binary", "normal_known", "normal_unknown", "survival")
DESIGNS = ("single_arm", "rct")

PriorLike = Union[BetaPrior, NormalKnownVarPrior, NixPrior, SurvPrior]

_MCMC_CHUNK = 2048  # chains per kernel batch, bounds draw-matrix memory


@dataclass(frozen=True)
class Scenario:
    """Complete description of one simulation experiment.

    Sample sizes are per arm; a two-arm trial enrolls 2*n_max patients with
    1:1 alternating allocation and holds its analyses when the cumulative
    per-arm count reaches each schedule entry.  Reported sample sizes count
    all enrolled patients across arms.
    """

    endpoint: str
    design: str
    n_max: int
    interim_schedule: tuple = ()
    theta0: float = 0.0
    delta: float = 0.0
    rho: float = 1.0
    cutoff: float = 0.5
    n_replicates: int = 1000
    seed: int = 0
    treatment_gen: PriorLike = None
    treatment_user: PriorLike = None
    control_gen: Optional[PriorLike] = None
    control_user: Optional[PriorLike] = None
    accrual_rate: float = 6.0
    followup_months: float = 12.0
    mcmc: Optional[McmcConfig] = None

    def __post_init__(self):
        if self.endpoint not in ENDPOINTS:
            raise ValueError(f"unknown endpoint {self.endpoint!r}")
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}")
        if self.n_max < 1:
            raise ValueError("n_max must be positive")
        sched = tuple(int(n) for n in self.interim_schedule)
        if any(n <= 0 or n >= self.n_max for n in sched):
            raise ValueError("interim analyses must fall strictly inside (0, n_max)")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("interim schedule must be strictly increasing")
        object.__setattr__(self, "interim_schedule", sched)
        if not 0.0 < self.cutoff < 1.0:
            raise ValueError("cutoff must lie in (0, 1)")
        if self.n_replicates < 0:
            raise ValueError("n_replicates must be nonnegative")
        if self.accrual_rate <= 0:
            raise ValueError("accrual_rate must be positive")
        self._check_priors()
        if self.endpoint == "survival" and self.mcmc is None:
            object.__setattr__(self, "mcmc", McmcConfig())

    def _check_priors(self):
        expect = {
            "binary": BetaPrior,
            "normal_known": NormalKnownVarPrior,
            "normal_unknown": NixPrior,
            "survival": SurvPrior,
        }[self.endpoint]
        if not isinstance(self.treatment_user, expect):
            raise ValueError(f"{self.endpoint} endpoint needs a {expect.__name__} user prior")
        gen_ok = isinstance(self.treatment_gen, expect) or (
            self.endpoint == "normal_unknown"
            and isinstance(self.treatment_gen, NormalKnownVarPrior)
        )
        if not gen_ok:
            raise ValueError(f"{self.endpoint} endpoint needs a {expect.__name__} generating prior")
        if self.design == "rct" and self.endpoint != "survival":
            if self.control_gen is None or self.control_user is None:
                raise ValueError("two-arm designs need control-arm priors")
            if not isinstance(self.control_user, expect):
                raise ValueError(f"control user prior must be a {expect.__name__}")
            ctrl_ok = isinstance(self.control_gen, (expect, NormalKnownVarPrior))
            if not ctrl_ok:
                raise ValueError("control generating prior has the wrong family")

    @property
    def analyses(self) -> tuple:
        """Per-arm cumulative sample size at each analysis, final included."""
        return (*self.interim_schedule, self.n_max)

    @property
    def arms(self) -> int:
        return 2 if self.design == "rct" else 1

    def fixed(self) -> "Scenario":
        """The paired design with no interim analyses."""
        return replace(self, interim_schedule=())


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one simulated trial."""

    truth: dict
    estimand_truth: float
    h0_true: bool
    rejected: bool
    stop_analysis_index: int
    final_n: int
    summary: PosteriorSummary


class ReplicateFailure(RuntimeError):
    """Raised when more than 0.1% of replicates fail (e.g. MCMC breakdown)."""


@dataclass
class RecordBatch:
    """Column-wise trial records for one design over all replicates."""

    scenario: Scenario
    replicate_ids: np.ndarray
    estimand_truth: np.ndarray
    h0_true: np.ndarray
    rejected: np.ndarray
    stop_index: np.ndarray
    final_n: np.ndarray
    prob_at_stop: np.ndarray
    prob_final: np.ndarray
    post_mean: np.ndarray
    ci_one_lower: np.ndarray
    ci_one_upper: np.ndarray
    ci_sym_lower: np.ndarray
    ci_sym_upper: np.ndarray
    truth_columns: dict = field(default_factory=dict)

    def __len__(self):
        return self.replicate_ids.shape[0]

    def record(self, i: int) -> TrialRecord:
        return TrialRecord(
            truth={k: float(v[i]) for k, v in self.truth_columns.items()},
            estimand_truth=float(self.estimand_truth[i]),
            h0_true=bool(self.h0_true[i]),
            rejected=bool(self.rejected[i]),
            stop_analysis_index=int(self.stop_index[i]),
            final_n=int(self.final_n[i]),
            summary=PosteriorSummary(
                prob_superior=float(self.prob_at_stop[i]),
                post_mean=float(self.post_mean[i]),
                ci_one_sided=Interval(float(self.ci_one_lower[i]), float(self.ci_one_upper[i])),
                ci_symmetric=Interval(float(self.ci_sym_lower[i]), float(self.ci_sym_upper[i])),
            ),
        )

    def records(self):
        return [self.record(i) for i in range(len(self))]


@dataclass(frozen=True)
class AccrualPlan:
    """Arrival times (months) and the calendar time of each analysis."""

    arrival_times: np.ndarray
    analysis_times: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.arrival_times) < 0):
            raise ValueError("arrival times must be nondecreasing")


# ---------------------------------------------------------------------------
# truth and data generation
# ---------------------------------------------------------------------------

def _stream(scenario: Scenario, replicate: int) -> np.random.Generator:
    return RngStream(scenario.seed, replicate).generator()


def draw_truth(scenario: Scenario, rng: np.random.Generator) -> dict:
    """Draw the true parameters of one trial from the generating priors."""
    ep, gen = scenario.endpoint, scenario.treatment_gen
    out = {}
    if ep == "binary":
        out["theta"] = rng.beta(gen.alpha, gen.beta)
        if scenario.design == "rct":
            cg = scenario.control_gen
            out["theta0"] = rng.beta(cg.alpha, cg.beta)
    elif ep == "normal_known":
        out["theta"] = rng.normal(gen.mu, np.sqrt(gen.sigma0_sq))
        if scenario.design == "rct":
            cg = scenario.control_gen
            out["theta0"] = rng.normal(cg.mu, np.sqrt(cg.sigma0_sq))
    elif ep == "normal_unknown":
        out["sigma_sq"], out["theta"] = _normal_unknown_truth(gen, rng)
        if scenario.design == "rct":
            out["sigma0_sq_c"], out["theta0"] = _normal_unknown_truth(scenario.control_gen, rng)
    else:
        out["theta"] = rng.gamma(gen.theta_shape, 1.0 / gen.theta_rate)
        out["kappa"] = rng.gamma(gen.kappa_shape, 1.0 / gen.kappa_rate)
        if scenario.design == "rct":
            out["beta"] = rng.normal(gen.beta_mean, np.sqrt(gen.beta_var))
    return out


def _normal_unknown_truth(gen, rng):
    """Either a full NIX draw or a normal mean with a fixed data variance."""
    if isinstance(gen, NixPrior):
        sigma_sq = gen.nu * gen.sigma0_sq / rng.chisquare(gen.nu)
        theta = rng.normal(gen.mu, np.sqrt(sigma_sq / gen.kappa))
    else:  # NormalKnownVarPrior: mean ~ N(mu, sigma0_sq), data variance fixed
        theta = rng.normal(gen.mu, np.sqrt(gen.sigma0_sq))
        sigma_sq = gen.sigma_sq
    return sigma_sq, theta


def administrative_censor(event_times, enroll_times, analysis_time):
    """Observed (time, event) pairs at a calendar data cut.

    A patient enrolled at e with latent event time x contributes
    (min(x, analysis_time - e), x <= analysis_time - e); exposure never goes
    negative, and zero times are left to SurvData's perturbation rule.
    """
    exposure = np.maximum(np.asarray(analysis_time, float) - np.asarray(enroll_times, float), 0.0)
    x = np.asarray(event_times, float)
    t = np.minimum(x, exposure)
    event = (x <= exposure).astype(np.int8)
    return t, event


def build_accrual(scenario: Scenario, rng: np.random.Generator) -> AccrualPlan:
    """Poisson-process arrivals and analysis calendar times.

    Interim k happens at the arrival of its scheduled patient; the final
    analysis happens one follow-up period after the last arrival.
    """
    if scenario.endpoint != "survival":
        raise ValueError("accrual applies to survival endpoints only")
    total = scenario.n_max * scenario.arms
    gaps = rng.exponential(1.0 / scenario.accrual_rate, size=total)
    arrivals = np.cumsum(gaps)
    counts = [n * scenario.arms for n in scenario.analyses]
    times = [arrivals[c - 1] for c in counts]
    times[-1] = arrivals[-1] + scenario.followup_months
    return AccrualPlan(arrivals, np.asarray(times))


# ---------------------------------------------------------------------------
# batched simulation
# ---------------------------------------------------------------------------

def run_scenario(scenario: Scenario, *, designs=("adaptive", "fixed"),
                 replicate_indices=None, threads: Optional[int] = None,
                 progress: Optional[Callable] = None) -> dict:
    """Simulate all replicates; return {design_name: RecordBatch}.

    The fixed design reuses the adaptive design's data (identical streams),
    differing only in ignoring the interim schedule.
    """
    if threads:
        import numba

        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    reps = (np.arange(scenario.n_replicates, dtype=np.int64)
            if replicate_indices is None else np.asarray(replicate_indices, dtype=np.int64))
    if scenario.endpoint == "survival":
        sim = _simulate_survival(scenario, reps, progress)
    else:
        sim = _simulate_conjugate(scenario, reps, progress)
    out = {}
    if "adaptive" in designs:
        out["adaptive"] = _decide(scenario, reps, sim, adaptive=True)
    if "fixed" in designs:
        out["fixed"] = _decide(scenario, reps, sim, adaptive=False)
    return out


def run_trial(scenario: Scenario, replicate_index: int) -> TrialRecord:
    """Simulate a single replicate; equals the same row of a full batch."""
    batch = run_scenario(scenario, designs=("adaptive",),
                         replicate_indices=[replicate_index])["adaptive"]
    return batch.record(0)


def _empty_sim(n_analyses) -> "_Sim":
    sim = _Sim(0, n_analyses)
    sim.estimand_truth = np.empty(0)
    sim.h0_true = np.empty(0, dtype=bool)
    return sim


class _Sim:
    """Per-analysis inferential quantities for every replicate."""

    def __init__(self, n_reps, n_analyses):
        shape = (n_reps, n_analyses)
        # -inf/nan fill marks analyses a stopped replicate never reached
        self.prob = np.full(shape, -np.inf)
        self.post_mean = np.full(shape, np.nan)
        self.q_one = np.full(shape, np.nan)   # one-sided bound (lower for theta, upper for HR)
        self.q_lo = np.full(shape, np.nan)
        self.q_hi = np.full(shape, np.nan)
        self.one_sided_is_upper = False   # True when the target is a hazard ratio
        self.truth = {}
        self.estimand_truth = None
        self.h0_true = None
        self.failed = None


def _decide(scenario: Scenario, reps, sim: _Sim, adaptive: bool) -> RecordBatch:
    analyses = scenario.analyses
    n_a = len(analyses)
    prob = sim.prob
    if adaptive and n_a > 1:
        exceed = prob > scenario.cutoff
        any_exceed = exceed.any(axis=1)
        stop = np.where(any_exceed, exceed.argmax(axis=1), n_a - 1)
        rejected = any_exceed
    else:
        stop = np.full(len(reps), n_a - 1)
        rejected = prob[:, -1] > scenario.cutoff
    rows = np.arange(len(reps))
    enrolled = np.asarray([n * scenario.arms for n in analyses])
    if sim.one_sided_is_upper:
        ci_one_lo, ci_one_hi = np.zeros(len(reps)), sim.q_one[rows, stop]
    else:
        ci_one_lo, ci_one_hi = sim.q_one[rows, stop], np.full(len(reps), np.inf)
    return RecordBatch(
        scenario=scenario,
        replicate_ids=reps.copy(),
        estimand_truth=sim.estimand_truth,
        h0_true=sim.h0_true,
        rejected=rejected,
        stop_index=stop,
        final_n=enrolled[stop],
        prob_at_stop=prob[rows, stop],
        prob_final=prob[:, -1],
        post_mean=sim.post_mean[rows, stop],
        ci_one_lower=ci_one_lo,
        ci_one_upper=ci_one_hi,
        ci_sym_lower=sim.q_lo[rows, stop],
        ci_sym_upper=sim.q_hi[rows, stop],
        truth_columns=sim.truth,
    )


# -- conjugate endpoints ----------------------------------------------------

def _simulate_conjugate(scenario: Scenario, reps, progress) -> _Sim:
    analyses = np.asarray(scenario.analyses)
    n_a = len(analyses)
    R = len(reps)
    if R == 0:
        return _empty_sim(n_a)
    sim = _Sim(R, n_a)
    ep, rct = scenario.endpoint, scenario.design == "rct"

    succ_t = np.zeros((R, n_a))
    succ_c = np.zeros((R, n_a)) if rct else None
    sum_t = np.zeros((R, n_a))
    ssq_t = np.zeros((R, n_a))
    sum_c = np.zeros((R, n_a)) if rct else None
    ssq_c = np.zeros((R, n_a)) if rct else None
    truth = {}

    for row, rep in enumerate(reps):
        rng = _stream(scenario, int(rep))
        tr = draw_truth(scenario, rng)
        for k, v in tr.items():
            truth.setdefault(k, np.empty(R))[row] = v
        if ep == "binary":
            x = rng.binomial(1, tr["theta"], scenario.n_max)
            succ_t[row] = np.cumsum(x)[analyses - 1]
            if rct:
                xc = rng.binomial(1, tr["theta0"], scenario.n_max)
                succ_c[row] = np.cumsum(xc)[analyses - 1]
        else:
            sigma_sq = tr["sigma_sq"] if "sigma_sq" in tr else _data_var(scenario.treatment_gen)
            x = rng.normal(tr["theta"], np.sqrt(sigma_sq), scenario.n_max)
            sum_t[row] = np.cumsum(x)[analyses - 1]
            ssq_t[row] = np.cumsum(x * x)[analyses - 1]
            if rct:
                sig_c = tr["sigma0_sq_c"] if "sigma0_sq_c" in tr else _data_var(scenario.control_gen)
                xc = rng.normal(tr["theta0"], np.sqrt(sig_c), scenario.n_max)
                sum_c[row] = np.cumsum(xc)[analyses - 1]
                ssq_c[row] = np.cumsum(xc * xc)[analyses - 1]
        if progress and (row + 1) % 10000 == 0:
            progress("simulate", row + 1, R)

    sim.truth = truth
    sim.estimand_truth = truth["theta"].copy()
    if rct:
        sim.h0_true = truth["theta"] - truth["theta0"] <= scenario.delta
    else:
        sim.h0_true = truth["theta"] - scenario.theta0 <= scenario.delta

    for j, n in enumerate(analyses):
        post_t = _conjugate_posterior(scenario.treatment_user, ep, n, succ_t[:, j],
                                      sum_t[:, j], ssq_t[:, j])
        if rct:
            post_c = _conjugate_posterior(scenario.control_user, ep, n, succ_c[:, j],
                                          sum_c[:, j], ssq_c[:, j])
            sim.prob[:, j] = prob_superior_rct(post_t, post_c, scenario.delta)
        else:
            sim.prob[:, j] = prob_superior_single(post_t, scenario.theta0, scenario.delta)
        sim.post_mean[:, j] = _posterior_mean(post_t)
        sim.q_one[:, j] = _posterior_quantile(post_t, 0.05)
        sim.q_lo[:, j] = _posterior_quantile(post_t, 0.025)
        sim.q_hi[:, j] = _posterior_quantile(post_t, 0.975)
        if progress:
            progress("analyze", j + 1, n_a)
    return sim


def _data_var(gen) -> float:
    if isinstance(gen, (NormalKnownVarPrior,)):
        return gen.sigma_sq
    raise ValueError("generating prior does not define a data variance")


def _conjugate_posterior(user, ep, n, succ, sums, ssqs):
    if ep == "binary":
        return beta_posterior(user, BinaryData(np.full_like(succ, n, dtype=int), succ))
    data = NormalData(np.full(sums.shape, n, dtype=int), sums, ssqs)
    if ep == "normal_known":
        return normal_known_posterior(user, data)
    return nix_posterior(user, data)


def _posterior_mean(post):
    if isinstance(post, BetaPrior):
        return post.alpha / (post.alpha + post.beta)
    if isinstance(post, NormalPosterior):
        return post.mean
    return post.loc


def _posterior_quantile(post, p):
    if isinstance(post, BetaPrior):
        return reg_inc_beta_inv(p, post.alpha, post.beta)
    if isinstance(post, NormalPosterior):
        return post.mean + np.sqrt(post.var) * normal_quantile(p)
    return post.loc + np.sqrt(post.tau) * student_t_quantile(p, post.dof)


# -- survival endpoints -----------------------------------------------------

def _survival_latents(scenario: Scenario, reps):
    """Truth draws, arrivals, latent event times, analysis calendar times."""
    R = len(reps)
    total = scenario.n_max * scenario.arms
    rct = scenario.design == "rct"
    arm = (np.arange(total) % scenario.arms).astype(np.int8)  # 1:1 alternating
    truth = {}
    arrivals = np.empty((R, total))
    event_times = np.empty((R, total))
    for row, rep in enumerate(reps):
        rng = _stream(scenario, int(rep))
        tr = draw_truth(scenario, rng)
        for k, v in tr.items():
            truth.setdefault(k, np.empty(R))[row] = v
        plan = build_accrual(scenario, rng)
        arrivals[row] = plan.arrival_times
        # proportional hazards scale the treatment arm's median by exp(-beta/kappa)
        med = np.full(total, tr["theta"])
        if rct:
            med[arm == 1] *= np.exp(-tr["beta"] / tr["kappa"])
        u = rng.random(total)
        event_times[row] = med * (-np.log1p(-u) / _mwg.LN2) ** (1.0 / tr["kappa"])
    counts = [n * scenario.arms for n in scenario.analyses]
    analysis_times = np.stack(
        [arrivals[:, c - 1] for c in counts[:-1]] + [arrivals[:, -1] + scenario.followup_months],
        axis=1,
    )
    return truth, arrivals, event_times, analysis_times, arm


def survival_dataset(scenario: Scenario, replicate_index: int, analysis_index: int):
    """The censored dataset one analysis would see for one replicate."""
    from .mcmc import SurvData

    reps = np.asarray([replicate_index], dtype=np.int64)
    _, arrivals, event_times, analysis_times, arm = _survival_latents(scenario, reps)
    nn = scenario.analyses[analysis_index] * scenario.arms
    t, event = administrative_censor(event_times[0, :nn], arrivals[0, :nn],
                                     analysis_times[0, analysis_index])
    return SurvData(t, event, arm[:nn]), float(analysis_times[0, analysis_index])


def _simulate_survival(scenario: Scenario, reps, progress) -> _Sim:
    analyses = scenario.analyses
    n_a = len(analyses)
    R = len(reps)
    if R == 0:
        return _empty_sim(n_a)
    rct = scenario.design == "rct"
    cfg = scenario.mcmc
    sim = _Sim(R, n_a)
    sim.one_sided_is_upper = rct

    truth, arrivals, event_times, analysis_times, arm = _survival_latents(scenario, reps)
    seed_words = np.empty((R, 4), dtype=np.uint64)
    for row, rep in enumerate(reps):
        seed_words[row] = RngStream(scenario.seed, int(rep)).seed_words(0x3C3C)

    sim.truth = truth
    if rct:
        sim.estimand_truth = np.exp(truth["beta"])
        sim.h0_true = sim.estimand_truth >= scenario.rho
    else:
        sim.estimand_truth = truth["theta"].copy()
        sim.h0_true = truth["theta"] - scenario.theta0 <= scenario.delta

    counts = [n * scenario.arms for n in analyses]
    active = np.ones(R, dtype=bool)  # still running when analysis j opens
    failed = np.zeros(R, dtype=bool)
    prior = scenario.treatment_user
    for j in range(n_a):
        idx = np.flatnonzero(active) if j < n_a - 1 else np.arange(R)
        nn = counts[j]
        for lo in range(0, idx.size, _MCMC_CHUNK):
            sel = idx[lo:lo + _MCMC_CHUNK]
            tt, zz = administrative_censor(event_times[sel, :nn], arrivals[sel, :nn],
                                           analysis_times[sel, j, None])
            tt = np.where(tt <= 0.0, np.finfo(float).tiny, tt)
            words = seed_words[sel].copy()
            words[:, 2] ^= np.uint64(j + 1)
            n_obs = np.full(sel.size, nn, dtype=np.int64)
            if rct:
                theta_d, kappa_d, beta_d, rates, ok = _mwg.run_chains_cox(
                    np.ascontiguousarray(tt), np.ascontiguousarray(zz),
                    np.ascontiguousarray(np.broadcast_to(arm[:nn], tt.shape)),
                    n_obs, prior.theta_shape, prior.theta_rate,
                    prior.kappa_shape, prior.kappa_rate,
                    prior.beta_mean, prior.beta_var,
                    cfg.n_iter, cfg.burn_in, cfg.thin,
                    cfg.scale_theta, cfg.scale_kappa, cfg.scale_beta,
                    cfg.adapt_during_burnin, words, cfg.n_keep)
                target = np.exp(beta_d)
                sim.prob[sel, j] = np.mean(target < scenario.rho, axis=1)
                sim.q_one[sel, j] = np.quantile(target, 0.95, axis=1)
            else:
                theta_d, kappa_d, rates, ok = _mwg.run_chains_weibull(
                    np.ascontiguousarray(tt), np.ascontiguousarray(zz), n_obs,
                    prior.theta_shape, prior.theta_rate,
                    prior.kappa_shape, prior.kappa_rate,
                    cfg.n_iter, cfg.burn_in, cfg.thin,
                    cfg.scale_theta, cfg.scale_kappa,
                    cfg.adapt_during_burnin, words, cfg.n_keep)
                target = theta_d
                sim.prob[sel, j] = np.mean(target > scenario.theta0 + scenario.delta, axis=1)
                sim.q_one[sel, j] = np.quantile(target, 0.05, axis=1)
            failed[sel[~ok]] = True
            sim.post_mean[sel, j] = target.mean(axis=1)
            sim.q_lo[sel, j] = np.quantile(target, 0.025, axis=1)
            sim.q_hi[sel, j] = np.quantile(target, 0.975, axis=1)
            if progress:
                progress(f"analysis {j + 1}/{n_a}", lo + sel.size, idx.size)
        if j < n_a - 1:
            # stopped replicates skip later interims; the final pass still
            # runs on every replicate to serve the paired fixed design
            active &= ~(sim.prob[:, j] > scenario.cutoff)

    sim.failed = failed
    n_failed = int(failed.sum())
    if n_failed > 0.001 * R:
        raise ReplicateFailure(f"{n_failed} of {R} replicates failed")
    return sim
