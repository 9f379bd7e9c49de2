"""Closed-form posterior engines for binary and normal endpoints.

Three conjugate families are supported, each usable for a single arm or,
arm-by-arm, for a two-arm comparison:

* Beta prior / Bernoulli data -> Beta posterior;
* normal prior with known data variance -> normal posterior;
* normal-inverse-chi-squared prior with unknown variance -> Student-t
  marginal posterior for the mean.

All functions accept scalars or equal-shaped numpy arrays and evaluate
elementwise, so a whole batch of simulated trials shares one code path with
a single trial.  Two-arm superiority probabilities for the Beta and t
families use deterministic Gauss-Legendre quadrature over the probability
transform of the narrower posterior, which keeps the integrand gently
sloped and the result reproducible to well below 1e-8 absolute error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .specfun import (
    Interval,
    normal_cdf,
    normal_quantile,
    reg_inc_beta,
    reg_inc_beta_inv,
    student_t_cdf,
    student_t_quantile,
)

__all__ = [
    "BetaPrior",
    "NormalKnownVarPrior",
    "NixPrior",
    "BinaryData",
    "NormalData",
    "NormalPosterior",
    "TPosterior",
    "PosteriorSummary",
    "beta_posterior",
    "normal_known_posterior",
    "nix_posterior",
    "prob_superior_single",
    "prob_superior_rct",
    "credible_interval",
    "summarize_single",
    "summarize_rct",
]


def _positive(name, value):
    if np.any(np.asarray(value) <= 0):
        raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class BetaPrior:
    """Beta(alpha, beta) prior; doubles as the Beta posterior."""

    alpha: float
    beta: float

    def __post_init__(self):
        _positive("alpha", self.alpha)
        _positive("beta", self.beta)

    @property
    def mean(self):
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class NormalKnownVarPrior:
    """Normal prior on the mean with a known data variance."""

    mu: float
    sigma0_sq: float
    sigma_sq: float = 1.0

    def __post_init__(self):
        _positive("sigma0_sq", self.sigma0_sq)
        _positive("sigma_sq", self.sigma_sq)


@dataclass(frozen=True)
class NixPrior:
    """Normal-inverse-chi-squared prior: mean N(mu, sigma^2/kappa),
    variance Inv-chi2(nu, sigma0_sq)."""

    mu: float
    kappa: float
    nu: float
    sigma0_sq: float

    def __post_init__(self):
        _positive("kappa", self.kappa)
        _positive("nu", self.nu)
        _positive("sigma0_sq", self.sigma0_sq)


@dataclass(frozen=True)
class BinaryData:
    """Sufficient statistics of Bernoulli observations."""

    n: int
    successes: int

    def __post_init__(self):
        n, s = np.asarray(self.n), np.asarray(self.successes)
        if np.any(n < 0) or np.any(s < 0) or np.any(s > n):
            raise ValueError("need 0 <= successes <= n")


@dataclass(frozen=True)
class NormalData:
    """Sufficient statistics (n, sum, sum of squares) of normal observations."""

    n: int
    sum: float
    sum_sq: float

    def __post_init__(self):
        n = np.asarray(self.n)
        s, ss = np.asarray(self.sum, float), np.asarray(self.sum_sq, float)
        if np.any(n < 0):
            raise ValueError("n must be nonnegative")
        if np.any((n == 0) & ((s != 0) | (ss != 0))):
            raise ValueError("empty data must have zero sums")
        with np.errstate(divide="ignore", invalid="ignore"):
            bad = (n > 0) & (ss - s * s / np.where(n > 0, n, 1) < -1e-9 * np.maximum(ss, 1.0))
        if np.any(bad):
            raise ValueError("sum_sq is inconsistent with sum (negative scatter)")


@dataclass(frozen=True)
class NormalPosterior:
    """Normal posterior for the mean (known-variance family)."""

    mean: float
    var: float

    def __post_init__(self):
        _positive("var", self.var)


@dataclass(frozen=True)
class TPosterior:
    """Location-scale Student-t marginal posterior: (theta-loc)/sqrt(tau) ~ t(dof).

    tau is the squared scale.
    """

    dof: float
    loc: float
    tau: float

    def __post_init__(self):
        _positive("dof", self.dof)
        _positive("tau", self.tau)


Posterior = Union[BetaPrior, NormalPosterior, TPosterior]


@dataclass(frozen=True)
class PosteriorSummary:
    """Inferential output of one analysis: tail probability, point estimate,
    one-sided and symmetric 95% credible intervals."""

    prob_superior: float
    post_mean: float
    ci_one_sided: Interval
    ci_symmetric: Interval
    mean_is_location_only: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.ci_one_sided.lower <= self.ci_symmetric.upper:
            raise ValueError("one-sided bound exceeds symmetric upper bound")


# ---------------------------------------------------------------------------
# posterior updates
# ---------------------------------------------------------------------------

def beta_posterior(prior: BetaPrior, data: BinaryData) -> BetaPrior:
    """Beta(alpha + successes, beta + failures); exact and batch-associative."""
    n = np.asarray(data.n)
    return BetaPrior(prior.alpha + data.successes, prior.beta + (n - data.successes))


def normal_known_posterior(prior: NormalKnownVarPrior, data: NormalData) -> NormalPosterior:
    """Precision-weighted normal update with known data variance."""
    prec = 1.0 / prior.sigma0_sq + np.asarray(data.n) / prior.sigma_sq
    mean = (prior.mu / prior.sigma0_sq + np.asarray(data.sum, float) / prior.sigma_sq) / prec
    return NormalPosterior(mean, 1.0 / prec)


def nix_posterior(prior: NixPrior, data: NormalData) -> TPosterior:
    """Student-t marginal posterior of the mean under the NIX prior.

    dof = nu + n, location (n*xbar + kappa*mu)/(kappa + n), squared scale
    {nu*sigma0_sq + scatter + kappa*n/(kappa+n)*(xbar-mu)^2} / ((nu+n)(kappa+n)).
    """
    n = np.asarray(data.n, float)
    s = np.asarray(data.sum, float)
    ss = np.asarray(data.sum_sq, float)
    safe_n = np.where(n > 0, n, 1.0)
    xbar = np.where(n > 0, s / safe_n, 0.0)
    scatter = np.where(n > 0, np.maximum(ss - s * s / safe_n, 0.0), 0.0)
    loc = (n * xbar + prior.kappa * prior.mu) / (prior.kappa + n)
    tau = (
        prior.nu * prior.sigma0_sq
        + scatter
        + prior.kappa * n / (prior.kappa + n) * (xbar - prior.mu) ** 2
    ) / ((prior.nu + n) * (prior.kappa + n))
    return TPosterior(prior.nu + n, loc, tau)


# ---------------------------------------------------------------------------
# superiority probabilities
# ---------------------------------------------------------------------------

def _cdf(post: Posterior, x):
    if isinstance(post, BetaPrior):
        return reg_inc_beta(np.clip(x, 0.0, 1.0), post.alpha, post.beta)
    if isinstance(post, NormalPosterior):
        return normal_cdf((np.asarray(x, float) - post.mean) / np.sqrt(post.var))
    if isinstance(post, TPosterior):
        return student_t_cdf((np.asarray(x, float) - post.loc) / np.sqrt(post.tau), post.dof)
    raise TypeError(f"unsupported posterior type {type(post).__name__}")


def _quantile(post: Posterior, p):
    if isinstance(post, BetaPrior):
        return reg_inc_beta_inv(p, post.alpha, post.beta)
    if isinstance(post, NormalPosterior):
        return post.mean + np.sqrt(post.var) * normal_quantile(p)
    if isinstance(post, TPosterior):
        return post.loc + np.sqrt(post.tau) * student_t_quantile(p, post.dof)
    raise TypeError(f"unsupported posterior type {type(post).__name__}")


def _variance(post: Posterior):
    """Posterior variance (or a finite proxy for heavy tails), used only to
    choose the quadrature variable."""
    if isinstance(post, BetaPrior):
        a, b = np.asarray(post.alpha, float), np.asarray(post.beta, float)
        return a * b / ((a + b) ** 2 * (a + b + 1.0))
    if isinstance(post, NormalPosterior):
        return np.asarray(post.var, float)
    dof = np.asarray(post.dof, float)
    return np.asarray(post.tau, float) * np.where(dof > 2, dof / (dof - 2.0), 3.0)


def prob_superior_single(post: Posterior, theta0: float, delta: float):
    """Posterior probability that the effect exceeds theta0 + delta.

    For the Beta family a threshold outside (0, 1) clamps the probability to
    1 (below 0) or 0 (above 1).
    """
    thr = np.asarray(theta0, float) + np.asarray(delta, float)
    if isinstance(post, BetaPrior):
        out = np.where(thr <= 0.0, 1.0, np.where(thr >= 1.0, 0.0,
                       1.0 - reg_inc_beta(np.clip(thr, 0.0, 1.0), post.alpha, post.beta)))
        return out[()] if np.ndim(out) == 0 else out
    return 1.0 - _cdf(post, thr)


def _composite_rule():
    """Gauss-Legendre panels on (0, 1), graded toward both endpoints.

    The integrands below are smooth probability transforms, but quantile
    functions steepen algebraically at the endpoints (heavy t tails, Beta
    shapes below one).  Grading the panels geometrically toward 0 and 1
    keeps every panel's integrand near-polynomial, which holds the absolute
    quadrature error well under 1e-8 across the posterior shapes the trials
    produce.
    """
    left = [0.0, 1e-12, 1e-9, 1e-6, 1e-4, 1e-3, 5e-3, 0.02, 0.06, 0.15, 0.3]
    edges = np.array(left + [0.5] + [1.0 - e for e in reversed(left)])
    x, w = np.polynomial.legendre.leggauss(24)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    nodes = (edges[:-1, None] + np.diff(edges)[:, None] * x[None, :]).ravel()
    weights = (np.diff(edges)[:, None] * w[None, :]).ravel()
    return nodes, weights


_GL_NODES, _GL_WEIGHTS = _composite_rule()


def _rct_quadrature(post_t: Posterior, post_c: Posterior, delta):
    """Pr(theta_t - theta_c > delta) by 256-node Gauss-Legendre over the
    probability transform of the narrower posterior."""
    delta = np.asarray(delta, float)
    shape = np.broadcast_shapes(
        np.shape(_variance(post_t)), np.shape(_variance(post_c)), delta.shape
    )
    var_t = np.broadcast_to(_variance(post_t), shape)
    var_c = np.broadcast_to(_variance(post_c), shape)
    out = np.empty(shape, float)
    use_t = var_t <= var_c  # integrate over the sharper side

    def _sel(post, mask, col):
        # column-shaped (m, 1) parameters broadcast against the node axis
        def pick(v):
            return _bcast(v, shape)[mask][:, None] if col else _bcast(v, shape)[mask]

        if isinstance(post, BetaPrior):
            return BetaPrior(pick(post.alpha), pick(post.beta))
        if isinstance(post, NormalPosterior):
            return NormalPosterior(pick(post.mean), pick(post.var))
        return TPosterior(pick(post.dof), pick(post.loc), pick(post.tau))

    d = np.broadcast_to(delta, shape)
    if np.any(use_t):
        q = _quantile_grid(_sel(post_t, use_t, col=False))  # (m, nodes)
        integrand = _cdf(_sel(post_c, use_t, col=True), q - d[use_t][:, None])
        out[use_t] = integrand @ _GL_WEIGHTS
    if np.any(~use_t):
        q = _quantile_grid(_sel(post_c, ~use_t, col=False))
        integrand = 1.0 - _cdf(_sel(post_t, ~use_t, col=True), q + d[~use_t][:, None])
        out[~use_t] = integrand @ _GL_WEIGHTS
    return out


def _bcast(x, shape):
    return np.broadcast_to(np.asarray(x, float), shape)


def _quantile_grid(post: Posterior):
    """Quantiles of a batched posterior at the shared quadrature nodes."""
    u = _GL_NODES[None, :]
    if isinstance(post, BetaPrior):
        return reg_inc_beta_inv(u, post.alpha[:, None], post.beta[:, None])
    if isinstance(post, NormalPosterior):
        return post.mean[:, None] + np.sqrt(post.var[:, None]) * normal_quantile(u)
    return post.loc[:, None] + np.sqrt(post.tau[:, None]) * student_t_quantile(u, post.dof[:, None])


def prob_superior_rct(post_t: Posterior, post_c: Posterior, delta: float):
    """Pr(theta_t - theta_c > delta) under independent arm posteriors.

    Normal pairs are closed form; Beta and t pairs use deterministic
    quadrature so the stop/continue decision is reproducible bit for bit.
    """
    if type(post_t) is not type(post_c):
        raise TypeError("both arms must use the same posterior family")
    if isinstance(post_t, NormalPosterior):
        gap = np.asarray(post_t.mean, float) - np.asarray(post_c.mean, float)
        sd = np.sqrt(np.asarray(post_t.var, float) + np.asarray(post_c.var, float))
        return 1.0 - normal_cdf((np.asarray(delta, float) - gap) / sd)
    scalar = (
        np.ndim(delta) == 0
        and all(np.ndim(v) == 0 for v in vars(post_t).values())
        and all(np.ndim(v) == 0 for v in vars(post_c).values())
    )
    out = _rct_quadrature(_atleast1d(post_t), _atleast1d(post_c), np.atleast_1d(delta))
    return float(out[0]) if scalar else out


def _atleast1d(post: Posterior) -> Posterior:
    cls = type(post)
    return cls(*(np.atleast_1d(np.asarray(v, float)) for v in vars(post).values()))


# ---------------------------------------------------------------------------
# credible intervals and summaries
# ---------------------------------------------------------------------------

def credible_interval(post: Posterior, kind: str) -> Interval:
    """95% credible interval: one_sided (q05, inf) or symmetric (q025, q975)."""
    if kind == "one_sided":
        return Interval(float(_quantile(post, 0.05)), np.inf)
    if kind == "symmetric":
        return Interval(float(_quantile(post, 0.025)), float(_quantile(post, 0.975)))
    raise ValueError(f"unknown interval kind {kind!r}")


def _post_mean(post: Posterior):
    if isinstance(post, BetaPrior):
        return post.alpha / (post.alpha + post.beta)
    if isinstance(post, NormalPosterior):
        return post.mean
    return post.loc  # exact mean when dof > 1; reported as location otherwise


def summarize_single(post: Posterior, theta0: float, delta: float) -> PosteriorSummary:
    """Full single-arm analysis summary at one look."""
    flag = isinstance(post, TPosterior) and np.all(np.asarray(post.dof) <= 1.0)
    return PosteriorSummary(
        prob_superior=float(prob_superior_single(post, theta0, delta)),
        post_mean=float(_post_mean(post)),
        ci_one_sided=credible_interval(post, "one_sided"),
        ci_symmetric=credible_interval(post, "symmetric"),
        mean_is_location_only=bool(flag),
    )


def summarize_rct(post_t: Posterior, post_c: Posterior, delta: float) -> PosteriorSummary:
    """Two-arm analysis summary.

    The decision probability integrates both arms; the point estimate and
    credible intervals describe the treatment-arm effect, which is the
    estimand the operating characteristics track.
    """
    return PosteriorSummary(
        prob_superior=float(prob_superior_rct(post_t, post_c, delta)),
        post_mean=float(_post_mean(post_t)),
        ci_one_sided=credible_interval(post_t, "one_sided"),
        ci_symmetric=credible_interval(post_t, "symmetric"),
    )
