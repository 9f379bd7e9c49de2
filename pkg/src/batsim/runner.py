"""Orchestration shared by the HTTP service and the command line client."""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

from .calibrate import CalibrationSpec, calibrate_cutoff
from .engine import run_scenario
from .metrics import compute_metrics
from .scenario_io import TableSpec
from .tables import TableOutput, TableRow

__all__ = ["run_table", "calibrate_table"]


def _apply_overrides(spec: TableSpec, replicates, seed) -> TableSpec:
    base = spec.base
    if replicates is not None:
        base = replace(base, n_replicates=int(replicates))
    if seed is not None:
        base = replace(base, seed=int(seed))
    return replace(spec, base=base)


def run_table(spec: TableSpec, *, variant: Optional[str] = None,
              replicates: Optional[int] = None, seed: Optional[int] = None,
              threads: Optional[int] = None, progress=None) -> TableOutput:
    """Run every requested (variant, interims) cell of a table experiment.

    The fixed (no interims) row and the adaptive row of one variant come
    from the same simulated data, so each pair differs only by the interim
    looks.  Rows appear in variant order, fixed before adaptive.
    """
    spec = _apply_overrides(spec, replicates, seed)
    variants = spec.variants if variant is None else (spec.variant(variant),)
    designs = []
    if spec.without_interims:
        designs.append("fixed")
    if spec.with_interims:
        designs.append("adaptive")
    if not designs:
        raise ValueError("scenario disables both the fixed and adaptive designs")
    rows = []
    for i, var in enumerate(variants):
        scen = spec.scenario_for(var)
        if progress:
            progress(f"variant {var.label}", i, len(variants))
        out = run_scenario(scen, designs=tuple(designs), threads=threads,
                           progress=progress)
        for design in designs:
            rows.append(TableRow(
                label=var.label,
                interims=design == "adaptive",
                report=compute_metrics(out[design]),
            ))
    if progress:
        progress("done", len(variants), len(variants))
    return TableOutput(name=spec.name, rows=tuple(rows))


def _matched_variant(spec: TableSpec) -> str:
    for var in spec.variants:
        if var.treatment_user == spec.base.treatment_gen:
            return var.label
    raise ValueError(
        "no variant matches the data-generating prior; pass the variant explicitly")


def calibrate_table(spec: TableSpec, *, variant: Optional[str] = None,
                    target: float = 0.05, replicates: Optional[int] = None,
                    seed: Optional[int] = None, grid_step: Optional[float] = None,
                    threads: Optional[int] = None, progress=None):
    """Calibrate the probability cutoff on a table's matched-prior variant."""
    spec = _apply_overrides(spec, replicates, seed)
    label = variant or _matched_variant(spec)
    scen = spec.scenario_for(spec.variant(label))
    result = calibrate_cutoff(
        CalibrationSpec(scenario=scen, target_pfdr=target, grid_step=grid_step),
        threads=threads, progress=progress)
    return label, result
