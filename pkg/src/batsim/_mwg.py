"""Compiled Metropolis-within-Gibbs kernels for the Weibull survival models.

Each simulated trial owns one chain, and each chain owns a self-contained
xoshiro256++ generator seeded from four words derived off the trial's
stream, so results do not depend on thread count or batch composition.
Likelihood evaluations reduce to sufficient statistics plus one O(n) pass
per shape-parameter proposal (the only term that cannot be cached).

Proposals are Gaussian random walks, on the log scale for the positive
parameters (with the log-move Jacobian in the acceptance ratio) and on the
linear scale for the regression coefficient.  Scales adapt in blocks toward
0.44 acceptance during burn-in only, then freeze, preserving detailed
balance for the retained draws.
"""

import numpy as np
from numba import njit, prange

LN2 = np.log(2.0)
_U64 = np.uint64
_MASK = _U64(0xFFFFFFFFFFFFFFFF)

ACCEPT_TARGET = 0.44
ADAPT_BLOCK = 50


@njit(cache=True, inline="always")
def _splitmix64(x):
    x = (x + _U64(0x9E3779B97F4A7C15)) & _MASK
    z = x
    z = ((z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)) & _MASK
    return (z ^ (z >> _U64(31))), x


@njit(cache=True)
def _init_state(words):
    s = np.empty(4, dtype=np.uint64)
    x = _U64(0)
    for i in range(words.shape[0]):
        x = ((x * _U64(0x100000001B3)) ^ words[i]) & _MASK
    for i in range(4):
        z, x = _splitmix64(x)
        s[i] = z
    return s


@njit(cache=True, inline="always")
def _rotl(x, k):
    return ((x << _U64(k)) | (x >> _U64(64 - k))) & _MASK


@njit(cache=True, inline="always")
def _next_u64(s):
    out = (_rotl((s[0] + s[3]) & _MASK, 23) + s[0]) & _MASK
    t = (s[1] << _U64(17)) & _MASK
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return out


@njit(cache=True, inline="always")
def _uniform(s):
    # 53-bit mantissa in [0, 1)
    return (_next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def _normal(s):
    u1 = _uniform(s)
    while u1 <= 0.0:
        u1 = _uniform(s)
    u2 = _uniform(s)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@njit(cache=True)
def _gamma_draw(s, shape, rate):
    """Marsaglia-Tsang gamma variate (shape-rate), used for initialization
    retries and degenerate no-data chains."""
    boost = 1.0
    a = shape
    if a < 1.0:
        u = _uniform(s)
        while u <= 0.0:
            u = _uniform(s)
        boost = u ** (1.0 / a)
        a += 1.0
    d = a - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    while True:
        x = _normal(s)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _uniform(s)
        if u <= 0.0:
            continue
        if np.log(u) < 0.5 * x * x + d - d * v + d * np.log(v):
            return boost * d * v / rate


@njit(cache=True, inline="always")
def _tpow_sum(log_t, n, kappa):
    acc = 0.0
    for i in range(n):
        acc += np.exp(kappa * log_t[i])
    return acc


@njit(cache=True, inline="always")
def _tpow_sum_arm(log_t, arm, n, kappa, which):
    acc = 0.0
    for i in range(n):
        if arm[i] == which:
            acc += np.exp(kappa * log_t[i])
    return acc


@njit(cache=True)
def _chain_weibull(t, event, n, phi, eta, lam, gam,
                   n_iter, burn_in, thin, scale_th, scale_ka, adapt,
                   words, theta_out, kappa_out):
    """One single-arm chain; returns (acc_theta, acc_kappa, ok)."""
    s = _init_state(words)
    if n == 0:
        for k in range(theta_out.shape[0]):
            theta_out[k] = _gamma_draw(s, phi, eta)
            kappa_out[k] = _gamma_draw(s, lam, gam)
        return 0.5, 0.5, True

    log_t = np.empty(n)
    n_ev = 0.0
    sum_log_t_ev = 0.0
    for i in range(n):
        log_t[i] = np.log(t[i])
        if event[i] == 1:
            n_ev += 1.0
            sum_log_t_ev += log_t[i]

    theta = phi / eta
    kappa = lam / gam
    tps = _tpow_sum(log_t, n, kappa)
    ll = n_ev * (np.log(LN2) + np.log(kappa) - kappa * np.log(theta)) \
        + (kappa - 1.0) * sum_log_t_ev - LN2 * theta ** (-kappa) * tps
    attempt = 0
    while not np.isfinite(ll):
        attempt += 1
        if attempt > 100:
            return 0.0, 0.0, False
        theta = _gamma_draw(s, phi, eta)
        kappa = _gamma_draw(s, lam, gam)
        tps = _tpow_sum(log_t, n, kappa)
        ll = n_ev * (np.log(LN2) + np.log(kappa) - kappa * np.log(theta)) \
            + (kappa - 1.0) * sum_log_t_ev - LN2 * theta ** (-kappa) * tps

    lp_th = (phi - 1.0) * np.log(theta) - eta * theta
    lp_ka = (lam - 1.0) * np.log(kappa) - gam * kappa
    s_th, s_ka = scale_th, scale_ka
    blk_th = 0.0
    blk_ka = 0.0
    acc_th = 0.0
    acc_ka = 0.0
    kept = 0
    for it in range(n_iter):
        lth = np.log(theta) + s_th * _normal(s)
        th_new = np.exp(lth)
        ll_new = n_ev * (np.log(LN2) + np.log(kappa) - kappa * lth) \
            + (kappa - 1.0) * sum_log_t_ev - LN2 * th_new ** (-kappa) * tps
        lp_new = (phi - 1.0) * lth - eta * th_new
        logr = (ll_new + lp_new + lth) - (ll + lp_th + np.log(theta))
        if np.log(_uniform(s) + 1e-320) < logr:
            theta, ll, lp_th = th_new, ll_new, lp_new
            blk_th += 1.0
            if it >= burn_in:
                acc_th += 1.0

        lka = np.log(kappa) + s_ka * _normal(s)
        ka_new = np.exp(lka)
        tps_new = _tpow_sum(log_t, n, ka_new)
        ll_new = n_ev * (np.log(LN2) + lka - ka_new * np.log(theta)) \
            + (ka_new - 1.0) * sum_log_t_ev - LN2 * theta ** (-ka_new) * tps_new
        lp_new = (lam - 1.0) * lka - gam * ka_new
        logr = (ll_new + lp_new + lka) - (ll + lp_ka + np.log(kappa))
        if np.log(_uniform(s) + 1e-320) < logr:
            kappa, ll, lp_ka, tps = ka_new, ll_new, lp_new, tps_new
            blk_ka += 1.0
            if it >= burn_in:
                acc_ka += 1.0

        if adapt and it < burn_in and (it + 1) % ADAPT_BLOCK == 0:
            s_th *= np.exp(0.5 * (blk_th / ADAPT_BLOCK - ACCEPT_TARGET))
            s_ka *= np.exp(0.5 * (blk_ka / ADAPT_BLOCK - ACCEPT_TARGET))
            blk_th = 0.0
            blk_ka = 0.0
        elif (it + 1) % ADAPT_BLOCK == 0:
            blk_th = 0.0
            blk_ka = 0.0

        if it >= burn_in and (it - burn_in) % thin == 0:
            theta_out[kept] = theta
            kappa_out[kept] = kappa
            kept += 1
    denom = float(n_iter - burn_in)
    return acc_th / denom, acc_ka / denom, True


@njit(cache=True)
def _chain_cox(t, event, arm, n, phi, eta, lam, gam, xi, tau_sq,
               n_iter, burn_in, thin, scale_th, scale_ka, scale_be, adapt,
               words, theta_out, kappa_out, beta_out):
    """One two-arm chain with arm-indicator proportional hazards."""
    s = _init_state(words)
    if n == 0:
        for k in range(theta_out.shape[0]):
            theta_out[k] = _gamma_draw(s, phi, eta)
            kappa_out[k] = _gamma_draw(s, lam, gam)
            beta_out[k] = xi + np.sqrt(tau_sq) * _normal(s)
        return 0.5, 0.5, 0.5, True

    log_t = np.empty(n)
    n_ev = 0.0
    n_ev1 = 0.0
    sum_log_t_ev = 0.0
    for i in range(n):
        log_t[i] = np.log(t[i])
        if event[i] == 1:
            n_ev += 1.0
            sum_log_t_ev += log_t[i]
            if arm[i] == 1:
                n_ev1 += 1.0

    theta = phi / eta
    kappa = lam / gam
    beta = xi
    tps0 = _tpow_sum_arm(log_t, arm, n, kappa, 0)
    tps1 = _tpow_sum_arm(log_t, arm, n, kappa, 1)

    ll = n_ev * (np.log(LN2) + np.log(kappa) - kappa * np.log(theta)) \
        + (kappa - 1.0) * sum_log_t_ev + beta * n_ev1 \
        - LN2 * theta ** (-kappa) * (tps0 + np.exp(beta) * tps1)
    attempt = 0
    while not np.isfinite(ll):
        attempt += 1
        if attempt > 100:
            return 0.0, 0.0, 0.0, False
        theta = _gamma_draw(s, phi, eta)
        kappa = _gamma_draw(s, lam, gam)
        beta = xi + np.sqrt(tau_sq) * _normal(s)
        tps0 = _tpow_sum_arm(log_t, arm, n, kappa, 0)
        tps1 = _tpow_sum_arm(log_t, arm, n, kappa, 1)
        ll = n_ev * (np.log(LN2) + np.log(kappa) - kappa * np.log(theta)) \
            + (kappa - 1.0) * sum_log_t_ev + beta * n_ev1 \
            - LN2 * theta ** (-kappa) * (tps0 + np.exp(beta) * tps1)

    lp_th = (phi - 1.0) * np.log(theta) - eta * theta
    lp_ka = (lam - 1.0) * np.log(kappa) - gam * kappa
    lp_be = -0.5 * (beta - xi) ** 2 / tau_sq
    s_th, s_ka, s_be = scale_th, scale_ka, scale_be
    blk = np.zeros(3)
    acc = np.zeros(3)
    kept = 0
    for it in range(n_iter):
        # median
        lth = np.log(theta) + s_th * _normal(s)
        th_new = np.exp(lth)
        ll_new = n_ev * (np.log(LN2) + np.log(kappa) - kappa * lth) \
            + (kappa - 1.0) * sum_log_t_ev + beta * n_ev1 \
            - LN2 * th_new ** (-kappa) * (tps0 + np.exp(beta) * tps1)
        lp_new = (phi - 1.0) * lth - eta * th_new
        if np.log(_uniform(s) + 1e-320) < (ll_new + lp_new + lth) - (ll + lp_th + np.log(theta)):
            theta, ll, lp_th = th_new, ll_new, lp_new
            blk[0] += 1.0
            if it >= burn_in:
                acc[0] += 1.0
        # shape
        lka = np.log(kappa) + s_ka * _normal(s)
        ka_new = np.exp(lka)
        t0_new = _tpow_sum_arm(log_t, arm, n, ka_new, 0)
        t1_new = _tpow_sum_arm(log_t, arm, n, ka_new, 1)
        ll_new = n_ev * (np.log(LN2) + lka - ka_new * np.log(theta)) \
            + (ka_new - 1.0) * sum_log_t_ev + beta * n_ev1 \
            - LN2 * theta ** (-ka_new) * (t0_new + np.exp(beta) * t1_new)
        lp_new = (lam - 1.0) * lka - gam * ka_new
        if np.log(_uniform(s) + 1e-320) < (ll_new + lp_new + lka) - (ll + lp_ka + np.log(kappa)):
            kappa, ll, lp_ka, tps0, tps1 = ka_new, ll_new, lp_new, t0_new, t1_new
            blk[1] += 1.0
            if it >= burn_in:
                acc[1] += 1.0
        # log hazard ratio
        be_new = beta + s_be * _normal(s)
        ll_new = n_ev * (np.log(LN2) + np.log(kappa) - kappa * np.log(theta)) \
            + (kappa - 1.0) * sum_log_t_ev + be_new * n_ev1 \
            - LN2 * theta ** (-kappa) * (tps0 + np.exp(be_new) * tps1)
        lp_new = -0.5 * (be_new - xi) ** 2 / tau_sq
        if np.log(_uniform(s) + 1e-320) < (ll_new + lp_new) - (ll + lp_be):
            beta, ll, lp_be = be_new, ll_new, lp_new
            blk[2] += 1.0
            if it >= burn_in:
                acc[2] += 1.0

        if adapt and it < burn_in and (it + 1) % ADAPT_BLOCK == 0:
            s_th *= np.exp(0.5 * (blk[0] / ADAPT_BLOCK - ACCEPT_TARGET))
            s_ka *= np.exp(0.5 * (blk[1] / ADAPT_BLOCK - ACCEPT_TARGET))
            s_be *= np.exp(0.5 * (blk[2] / ADAPT_BLOCK - ACCEPT_TARGET))
            blk[:] = 0.0
        elif (it + 1) % ADAPT_BLOCK == 0:
            blk[:] = 0.0

        if it >= burn_in and (it - burn_in) % thin == 0:
            theta_out[kept] = theta
            kappa_out[kept] = kappa
            beta_out[kept] = beta
            kept += 1
    denom = float(n_iter - burn_in)
    return acc[0] / denom, acc[1] / denom, acc[2] / denom, True


@njit(parallel=True, cache=True)
def run_chains_weibull(t, event, n_obs, phi, eta, lam, gam,
                       n_iter, burn_in, thin, scale_th, scale_ka, adapt,
                       seed_words, n_keep):
    """Independent single-arm chains over a padded batch of datasets."""
    R = n_obs.shape[0]
    theta = np.empty((R, n_keep))
    kappa = np.empty((R, n_keep))
    rates = np.empty((R, 2))
    ok = np.empty(R, dtype=np.bool_)
    for r in prange(R):
        a_th, a_ka, good = _chain_weibull(
            t[r], event[r], n_obs[r], phi, eta, lam, gam,
            n_iter, burn_in, thin, scale_th, scale_ka, adapt,
            seed_words[r], theta[r], kappa[r])
        rates[r, 0] = a_th
        rates[r, 1] = a_ka
        ok[r] = good
    return theta, kappa, rates, ok


@njit(parallel=True, cache=True)
def run_chains_cox(t, event, arm, n_obs, phi, eta, lam, gam, xi, tau_sq,
                   n_iter, burn_in, thin, scale_th, scale_ka, scale_be, adapt,
                   seed_words, n_keep):
    """Independent two-arm chains over a padded batch of datasets."""
    R = n_obs.shape[0]
    theta = np.empty((R, n_keep))
    kappa = np.empty((R, n_keep))
    beta = np.empty((R, n_keep))
    rates = np.empty((R, 3))
    ok = np.empty(R, dtype=np.bool_)
    for r in prange(R):
        a_th, a_ka, a_be, good = _chain_cox(
            t[r], event[r], arm[r], n_obs[r], phi, eta, lam, gam, xi, tau_sq,
            n_iter, burn_in, thin, scale_th, scale_ka, scale_be, adapt,
            seed_words[r], theta[r], kappa[r], beta[r])
        rates[r, 0] = a_th
        rates[r, 1] = a_ka
        rates[r, 2] = a_be
        ok[r] = good
    return theta, kappa, beta, rates, ok


@njit(parallel=True, cache=True)
def geweke_sweeps_weibull(phi, eta, lam, gam, exposures, n_sweeps,
                          scale_th, scale_ka, seed_words):
    """Marginal-invariance sweeps: prior draw -> simulated censored data ->
    one Metropolis-within-Gibbs update.  Output stays prior-distributed when
    the transition kernel is correct."""
    n = exposures.shape[0]
    theta_out = np.empty(n_sweeps)
    kappa_out = np.empty(n_sweeps)
    for m in prange(n_sweeps):
        words = np.empty(4, dtype=np.uint64)
        for i in range(4):
            words[i] = seed_words[i]
        words[3] = (words[3] ^ _U64(m * 2654435761 + 1)) & _MASK
        s = _init_state(words)
        theta = _gamma_draw(s, phi, eta)
        kappa = _gamma_draw(s, lam, gam)
        t = np.empty(n)
        event = np.empty(n, dtype=np.int8)
        for i in range(n):
            u = _uniform(s)
            x = theta * (-np.log1p(-u) / LN2) ** (1.0 / kappa)
            if x <= exposures[i]:
                t[i] = max(x, 1e-300)
                event[i] = 1
            else:
                t[i] = exposures[i]
                event[i] = 0

        log_t = np.empty(n)
        n_ev = 0.0
        sum_log_t_ev = 0.0
        for i in range(n):
            log_t[i] = np.log(t[i])
            if event[i] == 1:
                n_ev += 1.0
                sum_log_t_ev += log_t[i]
        tps = _tpow_sum(log_t, n, kappa)
        ll = n_ev * (np.log(LN2) + np.log(kappa) - kappa * np.log(theta)) \
            + (kappa - 1.0) * sum_log_t_ev - LN2 * theta ** (-kappa) * tps
        lp_th = (phi - 1.0) * np.log(theta) - eta * theta
        lp_ka = (lam - 1.0) * np.log(kappa) - gam * kappa

        lth = np.log(theta) + scale_th * _normal(s)
        th_new = np.exp(lth)
        ll_new = n_ev * (np.log(LN2) + np.log(kappa) - kappa * lth) \
            + (kappa - 1.0) * sum_log_t_ev - LN2 * th_new ** (-kappa) * tps
        lp_new = (phi - 1.0) * lth - eta * th_new
        if np.log(_uniform(s) + 1e-320) < (ll_new + lp_new + lth) - (ll + lp_th + np.log(theta)):
            theta, ll, lp_th = th_new, ll_new, lp_new

        lka = np.log(kappa) + scale_ka * _normal(s)
        ka_new = np.exp(lka)
        tps_new = _tpow_sum(log_t, n, ka_new)
        ll_new = n_ev * (np.log(LN2) + lka - ka_new * np.log(theta)) \
            + (ka_new - 1.0) * sum_log_t_ev - LN2 * theta ** (-ka_new) * tps_new
        lp_new = (lam - 1.0) * lka - gam * ka_new
        if np.log(_uniform(s) + 1e-320) < (ll_new + lp_new + lka) - (ll + lp_ka + np.log(kappa)):
            kappa = ka_new

        theta_out[m] = theta
        kappa_out[m] = kappa
    return theta_out, kappa_out
