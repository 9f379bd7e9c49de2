"""Tabular result assembly and serialization.

One table row per (user-prior variant, interims yes/no), with the column
order of the results tables: pFDR, Type I errors A and B, power, bias
(displayed x10^-3), MSE, one-sided and symmetric coverage, mean sample
size.  Display output is fixed at three decimals; a full-precision sidecar
carries the raw values and the Monte Carlo standard errors.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional

from .metrics import MetricsReport

__all__ = ["TableRow", "TableOutput", "format_csv", "format_full_csv", "format_text"]

COLUMNS = (
    "pfdr", "type1_a", "type1_b", "power", "bias_e3", "mse",
    "coverage_one_sided", "coverage_symmetric", "mean_sample_size",
)
_HEAD = (
    "prior", "interims", "pFDR", "typeI_A", "typeI_B", "power", "bias_x1e3",
    "MSE", "cov_one_sided", "cov_symmetric", "mean_n",
)


@dataclass(frozen=True)
class TableRow:
    label: str
    interims: bool
    report: MetricsReport

    def values(self) -> list:
        r = self.report
        return [r.pfdr, r.type1_a, r.type1_b, r.power,
                None if r.bias is None else r.bias * 1e3, r.mse,
                r.coverage_one_sided, r.coverage_symmetric, r.mean_sample_size]


@dataclass(frozen=True)
class TableOutput:
    name: str
    rows: tuple

    def row(self, label: str, interims: bool) -> TableRow:
        for r in self.rows:
            if r.label == label and r.interims == interims:
                return r
        raise KeyError(f"no row ({label!r}, interims={interims})")


def _fmt(x: Optional[float], digits=3) -> str:
    if x is None:
        return "NA"
    return f"{x:.{digits}f}"


def format_csv(table: TableOutput) -> str:
    """Three-decimal display table, bias scaled by 10^3."""
    buf = io.StringIO()
    buf.write(",".join(_HEAD) + "\n")
    for row in table.rows:
        vals = [f'"{row.label}"', "yes" if row.interims else "no"]
        for v, col in zip(row.values(), COLUMNS):
            digits = 1 if col in ("bias_e3", "mean_sample_size") else 3
            vals.append(_fmt(v, digits))
        buf.write(",".join(vals) + "\n")
    return buf.getvalue()


def format_full_csv(table: TableOutput) -> str:
    """Full-precision sidecar: raw metric values plus their MC standard errors."""
    metric_keys = ("pfdr", "fdr", "type1_a", "type1_b", "power", "bias", "mse",
                   "coverage_one_sided", "coverage_symmetric", "mean_sample_size")
    se_keys = ("pfdr", "type1_a", "type1_b", "power", "bias", "mse",
               "coverage_one_sided", "coverage_symmetric", "mean_sample_size")
    head = ["prior", "interims", *metric_keys,
            *(f"se_{k}" for k in se_keys),
            "n_reject", "n_h0", "n_h1", "n_replicates"]
    buf = io.StringIO()
    buf.write(",".join(head) + "\n")
    for row in table.rows:
        r = row.report
        vals = [f'"{row.label}"', "yes" if row.interims else "no"]
        for k in metric_keys:
            v = getattr(r, k)
            vals.append("NA" if v is None else repr(float(v)))
        for k in se_keys:
            v = r.mc_se.get(k)
            vals.append("NA" if v is None or v != v else repr(float(v)))
        vals += [str(r.n_reject), str(r.n_h0), str(r.n_h1), str(r.n_replicates)]
        buf.write(",".join(vals) + "\n")
    return buf.getvalue()


def format_text(table: TableOutput) -> str:
    """Aligned plain-text rendering of the display table."""
    lines = [list(_HEAD)]
    for row in table.rows:
        cells = [row.label, "yes" if row.interims else "no"]
        for v, col in zip(row.values(), COLUMNS):
            cells.append(_fmt(v, 1 if col in ("bias_e3", "mean_sample_size") else 3))
        lines.append(cells)
    widths = [max(len(cell) for cell in col) for col in zip(*lines)]
    out = []
    for i, cells in enumerate(lines):
        out.append("  ".join(c.rjust(w) if j else c.ljust(w)
                             for j, (c, w) in enumerate(zip(cells, widths))))
        if i == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"
