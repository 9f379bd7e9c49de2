"""Command line client.

The CLI is a thin HTTP client of the batsim service.  By default it mounts
the service in-process (no network, no server to start) so runs stay fully
offline and byte-reproducible; pass --server to talk to a running instance
instead.  Results go to stdout and to CSV files; progress and diagnostics
go to stderr only.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from .presets import list_presets
from .properties import SUITES
from .scenario_io import ScenarioParseError, parse_table
from .tables import TableOutput, TableRow, format_csv, format_full_csv, format_text
from .metrics import MetricsReport


def _say(msg: str):
    print(msg, file=sys.stderr, flush=True)


class Client:
    """Minimal JSON client; in-process ASGI unless a server URL is given."""

    def __init__(self, server: str | None):
        self.server = server

    def _request(self, method: str, path: str, payload=None):
        if self.server:
            with httpx.Client(base_url=self.server, timeout=None) as client:
                resp = client.request(method, path, json=payload)
        else:
            from .service import app

            async def _go():
                transport = httpx.ASGITransport(app=app)
                async with httpx.AsyncClient(transport=transport,
                                             base_url="http://batsim.internal",
                                             timeout=None) as client:
                    return await client.request(method, path, json=payload)

            resp = asyncio.run(_go())
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except Exception:
                detail = resp.text
            raise SystemExit(f"error: {detail}")
        return resp.json()

    def get(self, path: str):
        return self._request("GET", path)

    def post(self, path: str, payload: dict):
        return self._request("POST", path, payload)


def _source_args(args) -> dict:
    if args.scenario:
        return {"scenario_text": Path(args.scenario).read_text()}
    return {"preset": args.preset}


def _spec_for(args):
    try:
        if args.scenario:
            text = Path(args.scenario).read_text()
            return parse_table(text, name=Path(args.scenario).stem)
        from .presets import load_preset

        return load_preset(args.preset)
    except (ScenarioParseError, KeyError, OSError) as exc:
        raise SystemExit(f"error: {exc}")


def _row_from_payload(payload: dict) -> TableRow:
    m = dict(payload["metrics"])
    mc_se = {k: (float("nan") if v is None else v) for k, v in m.pop("mc_se").items()}
    return TableRow(label=payload["label"], interims=payload["interims"],
                    report=MetricsReport(mc_se=mc_se, **m))


def cmd_run(args) -> int:
    client = Client(args.server)
    spec = _spec_for(args)
    rows = []
    for i, variant in enumerate(spec.variants):
        _say(f"[{i + 1}/{len(spec.variants)}] {spec.name}: {variant.label}")
        payload = {**_source_args(args), "variant": variant.label,
                   "replicates": args.replicates, "seed": args.seed,
                   "threads": args.threads}
        data = client.post("/run", payload)
        rows.extend(_row_from_payload(r) for r in data["rows"])
    table = TableOutput(name=spec.name, rows=tuple(rows))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{spec.name}.csv"
    full_path = out_dir / f"{spec.name}_full.csv"
    csv_path.write_text(format_csv(table))
    full_path.write_text(format_full_csv(table))
    _say(f"wrote {csv_path} and {full_path}")
    _say("\n" + format_text(table))
    sys.stdout.write(format_csv(table))
    return 0


def cmd_calibrate(args) -> int:
    client = Client(args.server)
    payload = {**_source_args(args), "variant": args.variant,
               "target_pfdr": args.target, "replicates": args.replicates,
               "seed": args.seed, "grid_step": args.grid_step,
               "threads": args.threads}
    data = client.post("/calibrate", payload)
    _say(f"calibrated on variant {data['variant']!r} "
         f"({data['n_replicates']} replicates, grid {data['grid_step']})")
    print(json.dumps({
        "cutoff": data["cutoff"],
        "achieved_pfdr": data["achieved_pfdr"],
        "mc_se": data["mc_se"],
        "band": [data["band_lower"], data["band_upper"]],
    }))
    return 0


def cmd_properties(args) -> int:
    client = Client(args.server)
    data = client.post("/properties", {"suite": args.suite, "scale": args.scale,
                                       "threads": args.threads})
    for check in data["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status}\t{check['name']}\tobserved={check['observed']:.6g}"
              f"\tbound={check['bound']}\t{check['detail']}")
    print(f"{'PASS' if data['passed'] else 'FAIL'}\tsuite={data['suite']}")
    return 0 if data["passed"] else 1


def cmd_list_presets(args) -> int:
    client = Client(args.server)
    data = client.get("/presets")
    for p in data["presets"]:
        print(f"{p['name']}\t{p['description']}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _add_common(p, with_source=True):
    p.add_argument("--server", default=None,
                   help="service URL; default runs the service in-process")
    p.add_argument("--threads", type=int, default=None,
                   help="compute threads (never changes results)")
    if with_source:
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--scenario", help="path to a scenario file")
        src.add_argument("--preset", help="name of a shipped preset")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="batsim",
        description="Operating characteristics of Bayesian adaptive trial designs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a table experiment and write CSV output")
    _add_common(p)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("calibrate", help="calibrate the probability cutoff")
    _add_common(p)
    p.add_argument("--target", type=float, default=0.05)
    p.add_argument("--variant", default=None)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--grid-step", type=float, default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("properties", help="run a property suite")
    _add_common(p, with_source=False)
    p.add_argument("--suite", required=True, choices=SUITES)
    p.add_argument("--scale", default="full", choices=("full", "smoke"))
    p.set_defaults(func=cmd_properties)

    p = sub.add_parser("list-presets", help="list shipped scenario presets")
    _add_common(p, with_source=False)
    p.set_defaults(func=cmd_list_presets)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
