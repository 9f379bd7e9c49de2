"""HTTP facade over the simulation engine.

Endpoints map one-to-one onto the core operations: /run executes a table
experiment (or one of its rows), /calibrate tunes the probability cutoff,
/properties executes a named property suite, /presets lists the shipped
scenario catalog.  Requests run synchronously; a 50k-replicate closed-form
table takes seconds, survival tables minutes.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..calibrate import CalibrationError
from ..presets import list_presets, preset_text
from ..properties import SUITES, run_suite
from ..runner import calibrate_table, run_table
from ..scenario_io import ScenarioParseError, parse_table
from .models import (
    CalibrateRequest,
    CalibrateResponse,
    CheckModel,
    MetricsModel,
    PresetInfo,
    PresetsResponse,
    PropertiesRequest,
    PropertiesResponse,
    RowModel,
    RunRequest,
    RunResponse,
)

app = FastAPI(title="batsim", version=__version__)


def _load_spec(req):
    try:
        if req.preset is not None:
            try:
                text = preset_text(req.preset)
            except KeyError as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from exc
            return parse_table(text, name=req.preset)
        return parse_table(req.scenario_text, name="scenario")
    except ScenarioParseError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/healthz")
def healthz():
    return {"status": "ok", "version": __version__}


@app.get("/presets", response_model=PresetsResponse)
def presets():
    return PresetsResponse(presets=[
        PresetInfo(name=k, description=v) for k, v in sorted(list_presets().items())
    ])


@app.post("/run", response_model=RunResponse)
def run(req: RunRequest):
    spec = _load_spec(req)
    try:
        table = run_table(spec, variant=req.variant, replicates=req.replicates,
                          seed=req.seed, threads=req.threads)
    except KeyError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    rows = []
    for row in table.rows:
        r = row.report
        rows.append(RowModel(
            label=row.label,
            interims=row.interims,
            metrics=MetricsModel(
                pfdr=r.pfdr, fdr=r.fdr, type1_a=r.type1_a, type1_b=r.type1_b,
                power=r.power, bias=r.bias, mse=r.mse,
                coverage_one_sided=r.coverage_one_sided,
                coverage_symmetric=r.coverage_symmetric,
                mean_sample_size=r.mean_sample_size,
                n_reject=r.n_reject, n_h0=r.n_h0, n_h1=r.n_h1,
                n_replicates=r.n_replicates,
                mc_se={k: (None if v != v else v) for k, v in r.mc_se.items()},
            ),
        ))
    return RunResponse(name=table.name, rows=rows)


@app.post("/calibrate", response_model=CalibrateResponse)
def calibrate(req: CalibrateRequest):
    spec = _load_spec(req)
    try:
        label, result = calibrate_table(
            spec, variant=req.variant, target=req.target_pfdr,
            replicates=req.replicates, seed=req.seed,
            grid_step=req.grid_step, threads=req.threads)
    except (CalibrationError, ValueError, KeyError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return CalibrateResponse(
        variant=label, cutoff=result.cutoff, achieved_pfdr=result.achieved_pfdr,
        mc_se=result.mc_se, band_lower=result.band_lower,
        band_upper=result.band_upper, grid_step=result.grid_step,
        n_reject=result.n_reject, n_replicates=result.n_replicates)


@app.post("/properties", response_model=PropertiesResponse)
def properties(req: PropertiesRequest):
    if req.suite not in SUITES:
        raise HTTPException(status_code=404,
                            detail=f"unknown suite {req.suite!r}; choose from {SUITES}")
    result = run_suite(req.suite, scale=req.scale, threads=req.threads)
    return PropertiesResponse(
        suite=result.suite, passed=result.passed,
        checks=[CheckModel(**vars(c)) for c in result.checks])
