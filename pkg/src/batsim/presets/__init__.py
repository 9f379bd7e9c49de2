"""Shipped scenario presets, one per results table."""

from __future__ import annotations

from importlib import resources

from ..scenario_io import TableSpec, parse_table

__all__ = ["list_presets", "load_preset", "preset_text"]

_DESCRIPTIONS = {
    "table2": "single-arm binary, two interims at 40/70",
    "table3": "single-arm normal (known variance), two interims at 40/70",
    "table4": "single-arm normal (unknown variance), two interims at 40/70",
    "table5": "single-arm survival, two interims at 40/70",
    "table_s3": "two-arm binary, interims at 20/35 per arm",
    "table_s4": "two-arm normal (known variance), interims at 20/35 per arm",
    "table_s5": "two-arm normal (unknown variance), interims at 20/35 per arm",
    "table_s6": "two-arm survival (hazard-ratio test), interims at 20/35 per arm",
    "table_s7": "single-arm binary, fully sequential looks from patient 20",
    "table_s8": "single-arm normal (known variance), fully sequential looks",
    "table_s9": "single-arm survival, looks every 5 patients from 20",
    "table_s10": "single-arm binary with margin 0.1",
    "table_s11": "single-arm normal (known variance) with margin 0.25",
    "table_s12": "single-arm survival with margin 1",
    "table_s13": "single-arm normal, concentrated generating prior N(0, 0.09)",
    "table_s14": "single-arm binary, generating prior Beta(15, 15)",
    "table_s15": "single-arm survival, control median 6 and margin 2",
    "table_s16": "single-arm normal (unknown variance), user prior scale 20",
    "table_s17": "single-arm normal (unknown variance), user prior scale 60",
}


def list_presets() -> dict:
    """Preset names mapped to one-line descriptions."""
    return dict(_DESCRIPTIONS)


def preset_text(name: str) -> str:
    if name not in _DESCRIPTIONS:
        raise KeyError(f"unknown preset {name!r}; see list_presets()")
    return resources.files("batsim.presets").joinpath(f"{name}.scenario").read_text()


def load_preset(name: str) -> TableSpec:
    return parse_table(preset_text(name), name=name)
