"""Plain-text scenario files.

A scenario file describes one table-style experiment: a base trial design,
the data-generating priors, fixed user priors (e.g. a control arm shared by
all rows), and one [variant ...] section per table row carrying that row's
user prior.  INI syntax via configparser, with these prior literals:

    Beta(a, b)                      binary endpoints
    Normal(mean, var)               normal mean prior (known variance)
    NormalFixedVar(mean, var, dv)   normal mean prior with data variance dv
    NIX(mu, kappa, nu, sigma0_sq)   normal-inverse-chi-squared prior
    Gamma(shape, rate) Gamma(shape, rate) [Normal(mean, var)]
                                    survival prior triple (median, shape,
                                    optional log-HR)

Unknown sections or keys are rejected.  parse_table followed by
serialize_table followed by parse_table reproduces identical values.
"""

from __future__ import annotations

import configparser
import io
import re
from dataclasses import dataclass, replace
from typing import Optional

from .conjugate import BetaPrior, NixPrior, NormalKnownVarPrior
from .engine import Scenario
from .mcmc import McmcConfig, SurvPrior

__all__ = ["Variant", "TableSpec", "ScenarioParseError", "parse_table", "serialize_table"]


class ScenarioParseError(ValueError):
    """Scenario file violates the grammar; message names the key at fault."""


_TRIAL_KEYS = {
    "endpoint", "design", "n_max", "interim_schedule", "theta0", "delta",
    "rho", "cutoff", "n_replicates", "seed", "sigma_sq", "accrual_rate",
    "followup_months", "with_interims", "without_interims",
    "mcmc_n_iter", "mcmc_burn_in", "mcmc_thin",
}
_ARM_KEYS = {"treatment", "control"}

_DIST_RE = re.compile(r"([A-Za-z_]+)\s*\(([^()]*)\)")


def _parse_dists(text: str, key: str):
    """All distribution literals in a value, validated to cover the text."""
    out = []
    rest = text
    for m in _DIST_RE.finditer(text):
        args = []
        for piece in m.group(2).split(","):
            piece = piece.strip()
            if not piece:
                raise ScenarioParseError(f"{key}: empty argument in {m.group(0)!r}")
            try:
                args.append(float(piece))
            except ValueError as exc:
                raise ScenarioParseError(f"{key}: bad number {piece!r}") from exc
        out.append((m.group(1), args))
        rest = rest.replace(m.group(0), "", 1)
    if rest.strip():
        raise ScenarioParseError(f"{key}: unparsed text {rest.strip()!r}")
    if not out:
        raise ScenarioParseError(f"{key}: no distribution literal found")
    return out


def _build_prior(text: str, key: str, endpoint: str, sigma_sq: float):
    dists = _parse_dists(text, key)
    names = [d[0] for d in dists]
    if endpoint == "survival":
        if names[:2] != ["Gamma", "Gamma"] or len(dists) > 3:
            raise ScenarioParseError(
                f"{key}: survival priors are 'Gamma(a,b) Gamma(a,b) [Normal(m,v)]'")
        (_, th), (_, ka) = dists[0], dists[1]
        if len(th) != 2 or len(ka) != 2:
            raise ScenarioParseError(f"{key}: Gamma takes two arguments")
        beta_mean, beta_var = 0.0, 1.0
        if len(dists) == 3:
            if names[2] != "Normal" or len(dists[2][1]) != 2:
                raise ScenarioParseError(f"{key}: log-HR prior must be Normal(mean, var)")
            beta_mean, beta_var = dists[2][1]
        return SurvPrior(th[0], th[1], ka[0], ka[1], beta_mean, beta_var)
    if len(dists) != 1:
        raise ScenarioParseError(f"{key}: expected a single distribution literal")
    name, args = dists[0]
    if name == "Beta" and len(args) == 2:
        return BetaPrior(*args)
    if name == "Normal" and len(args) == 2:
        return NormalKnownVarPrior(args[0], args[1], sigma_sq)
    if name == "NormalFixedVar" and len(args) == 3:
        return NormalKnownVarPrior(args[0], args[1], args[2])
    if name == "NIX" and len(args) == 4:
        return NixPrior(*args)
    raise ScenarioParseError(f"{key}: unsupported prior {text.strip()!r}")


def _format_prior(prior) -> str:
    if isinstance(prior, BetaPrior):
        return f"Beta({prior.alpha!r}, {prior.beta!r})"
    if isinstance(prior, NixPrior):
        return f"NIX({prior.mu!r}, {prior.kappa!r}, {prior.nu!r}, {prior.sigma0_sq!r})"
    if isinstance(prior, NormalKnownVarPrior):
        if prior.sigma_sq == 1.0:
            return f"Normal({prior.mu!r}, {prior.sigma0_sq!r})"
        return f"NormalFixedVar({prior.mu!r}, {prior.sigma0_sq!r}, {prior.sigma_sq!r})"
    if isinstance(prior, SurvPrior):
        s = (f"Gamma({prior.theta_shape!r}, {prior.theta_rate!r}) "
             f"Gamma({prior.kappa_shape!r}, {prior.kappa_rate!r})")
        return s + f" Normal({prior.beta_mean!r}, {prior.beta_var!r})"
    raise TypeError(f"cannot format prior {prior!r}")


@dataclass(frozen=True)
class Variant:
    """One table row: a label and that row's user priors."""

    label: str
    treatment_user: object
    control_user: Optional[object] = None


@dataclass(frozen=True)
class TableSpec:
    """A parsed scenario file: base scenario plus per-row user priors."""

    name: str
    base: Scenario          # user priors filled per variant before running
    variants: tuple
    with_interims: bool = True
    without_interims: bool = True

    def scenario_for(self, variant: Variant) -> Scenario:
        scen = replace(self.base, treatment_user=variant.treatment_user)
        if variant.control_user is not None:
            scen = replace(scen, control_user=variant.control_user)
        return scen

    def variant(self, label: str) -> Variant:
        for v in self.variants:
            if v.label == label:
                return v
        raise KeyError(f"no variant labeled {label!r}")


def _make_parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str  # keys and labels are case-sensitive
    return cp


def parse_table(text: str, name: str = "scenario") -> TableSpec:
    """Parse a scenario document; reject unknown sections and keys."""
    cp = _make_parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioParseError(str(exc)) from exc
    sections = cp.sections()
    if "trial" not in sections:
        raise ScenarioParseError("missing [trial] section")
    known = {"trial", "generating", "user"}
    for s in sections:
        if s not in known and not s.startswith("variant "):
            raise ScenarioParseError(f"unknown section [{s}]")

    trial = dict(cp.items("trial"))
    for k in trial:
        if k not in _TRIAL_KEYS:
            raise ScenarioParseError(f"unknown [trial] key {k!r}")
    missing = {"endpoint", "design", "n_max", "cutoff", "n_replicates", "seed"} - set(trial)
    if missing:
        raise ScenarioParseError(f"[trial] missing keys: {sorted(missing)}")

    def _get(key, conv, default=None):
        if key not in trial:
            return default
        try:
            return conv(trial[key])
        except ValueError as exc:
            raise ScenarioParseError(f"[trial] {key}: {exc}") from exc

    endpoint = trial["endpoint"]
    sigma_sq = _get("sigma_sq", float, 1.0)
    schedule = tuple(int(tok) for tok in trial.get("interim_schedule", "").split())

    def _arm_priors(section):
        if section not in sections:
            return {}
        out = {}
        for k, v in cp.items(section):
            if k not in _ARM_KEYS:
                raise ScenarioParseError(f"unknown [{section}] key {k!r}")
            out[k] = _build_prior(v, f"[{section}] {k}", endpoint, sigma_sq)
        return out

    gen = _arm_priors("generating")
    if "treatment" not in gen:
        raise ScenarioParseError("[generating] must define a treatment prior")
    user = _arm_priors("user")

    mcmc = None
    if endpoint == "survival":
        mcmc = McmcConfig(
            n_iter=_get("mcmc_n_iter", int, 6000),
            burn_in=_get("mcmc_burn_in", int, 2000),
            thin=_get("mcmc_thin", int, 2),
        )

    variants = []
    for s in sections:
        if not s.startswith("variant "):
            continue
        label = s[len("variant "):].strip()
        if not label:
            raise ScenarioParseError("variant sections need a label: [variant <label>]")
        keys = dict(cp.items(s))
        for k in keys:
            if k not in _ARM_KEYS:
                raise ScenarioParseError(f"unknown [{s}] key {k!r}")
        if "treatment" not in keys:
            raise ScenarioParseError(f"[{s}] must define a treatment prior")
        variants.append(Variant(
            label=label,
            treatment_user=_build_prior(keys["treatment"], f"[{s}] treatment", endpoint, sigma_sq),
            control_user=(_build_prior(keys["control"], f"[{s}] control", endpoint, sigma_sq)
                          if "control" in keys else None),
        ))
    if not variants:
        raise ScenarioParseError("at least one [variant ...] section is required")

    try:
        base = Scenario(
            endpoint=endpoint,
            design=trial["design"],
            n_max=_get("n_max", int),
            interim_schedule=schedule,
            theta0=_get("theta0", float, 0.0),
            delta=_get("delta", float, 0.0),
            rho=_get("rho", float, 1.0),
            cutoff=_get("cutoff", float),
            n_replicates=_get("n_replicates", int),
            seed=_get("seed", int),
            treatment_gen=gen["treatment"],
            treatment_user=variants[0].treatment_user,
            control_gen=gen.get("control"),
            control_user=user.get("control"),
            accrual_rate=_get("accrual_rate", float, 6.0),
            followup_months=_get("followup_months", float, 12.0),
            mcmc=mcmc,
        )
    except ValueError as exc:
        raise ScenarioParseError(str(exc)) from exc
    if base.design == "rct" and base.endpoint != "survival" and base.control_user is None:
        for v in variants:
            if v.control_user is None:
                raise ScenarioParseError(
                    "two-arm scenarios need a [user] control prior or per-variant overrides")
    return TableSpec(
        name=name,
        base=base,
        variants=tuple(variants),
        with_interims=_get("with_interims", _parse_bool, True),
        without_interims=_get("without_interims", _parse_bool, True),
    )


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def serialize_table(spec: TableSpec) -> str:
    """Write a TableSpec back to the file grammar (round-trip exact)."""
    cp = _make_parser()
    base = spec.base
    trial = {
        "endpoint": base.endpoint,
        "design": base.design,
        "n_max": str(base.n_max),
        "cutoff": repr(base.cutoff),
        "n_replicates": str(base.n_replicates),
        "seed": str(base.seed),
        "theta0": repr(base.theta0),
        "delta": repr(base.delta),
        "with_interims": str(spec.with_interims).lower(),
        "without_interims": str(spec.without_interims).lower(),
    }
    if base.interim_schedule:
        trial["interim_schedule"] = " ".join(str(n) for n in base.interim_schedule)
    if base.endpoint == "normal_known":
        trial["sigma_sq"] = repr(base.treatment_user.sigma_sq)
    if base.endpoint == "survival":
        trial["rho"] = repr(base.rho)
        trial["accrual_rate"] = repr(base.accrual_rate)
        trial["followup_months"] = repr(base.followup_months)
        trial["mcmc_n_iter"] = str(base.mcmc.n_iter)
        trial["mcmc_burn_in"] = str(base.mcmc.burn_in)
        trial["mcmc_thin"] = str(base.mcmc.thin)
    cp["trial"] = trial
    gen = {"treatment": _format_prior(base.treatment_gen)}
    if base.control_gen is not None:
        gen["control"] = _format_prior(base.control_gen)
    cp["generating"] = gen
    if base.control_user is not None:
        cp["user"] = {"control": _format_prior(base.control_user)}
    for v in spec.variants:
        sec = {"treatment": _format_prior(v.treatment_user)}
        if v.control_user is not None:
            sec["control"] = _format_prior(v.control_user)
        cp[f"variant {v.label}"] = sec
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
