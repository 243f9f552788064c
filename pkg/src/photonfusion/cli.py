"""Command-line entry point.

    photonfusion run --config bell_fringe --out results/
    photonfusion validate --config my_experiment.yaml
    photonfusion list
    photonfusion schema

``--config`` takes a path or the name of a bundled config. Exit status is 0
on success, 1 on validation errors and 2 on runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import platform
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .config import (
    SCHEMA,
    ConfigError,
    RunConfig,
    apply_overrides,
    build,
    bundled_configs,
    config_hash,
    load_config,
    validate_config,
)
from .montecarlo.coincidence import correlation_fwhm, g2_histogram, relative_delay_estimate
from .montecarlo.experiment import simulate
from .montecarlo.scan import predict_scan, scan
from .network import rate_budget
from .protocol import (
    bell_fringe,
    fringe_visibility,
    fuse,
    hom_dip,
    mixed_bell_fringe,
    projection_spectrum,
)
from .source import coherence_sigma_t

log = logging.getLogger("photonfusion")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
MANIFEST_VERSION = 1


# predictions ---------------------------------------------------------------


def closed_form_rows(rc: RunConfig) -> list[tuple]:
    src = rc.source
    kind = rc.prediction
    rows = []
    sigma = coherence_sigma_t(src)
    v0 = math.sqrt(src.hom_visibility)
    for x in rc.scan_points:
        if kind == "bell_fringe":
            same, cross = bell_fringe(float(x))
            m_same, m_cross = mixed_bell_fringe(float(x), src.entangled_fraction)
            rows += [(x, "P_HH_VV", same), (x, "P_HV_VH", cross), (x, "P_HH_VV_mixed", m_same), (x, "P_HV_VH_mixed", m_cross)]
        elif kind == "hom_dip":
            rows.append((x, "hom_dip", hom_dip(float(x), sigma, v0)))
        elif kind in ("fusion_dip", "heralded_noon"):
            v2 = v0**2 * math.exp(-float(x) ** 2 / (2 * sigma**2))
            if kind == "fusion_dip":
                rows.append((x, "fusion_fourfold", (2.0 - v2) / 4.0))
            else:
                rows.append((x, "noon_fourfold", (1.0 - v2) / 8.0))
        elif kind == "heralded_bell":
            same, cross = bell_fringe(float(x))
            rows += [(x, "P_HeHf_VbHd", same / 8.0), (x, "P_HeVf_VbHd", cross / 8.0)]
        elif kind == "projection_spectrum":
            spec = projection_spectrum(fuse().final_state)
            rows.append((x, f"P_{x}", spec[str(x)]))
    return rows


def run_predict(rc: RunConfig) -> tuple[list[dict], dict]:
    rows = closed_form_rows(rc)
    rows += [(p, f"engine:{q}", v) for p, q, v in predict_scan(rc.experiment, rc.scan_axis, rc.scan_points, rc.counts)]
    table = [{"scan_value": p, "quantity": q, "value": float(v)} for p, q, v in rows]
    summary = {}
    if rc.prediction == "bell_fringe":
        same = [r["value"] for r in table if r["quantity"] == "P_HH_VV_mixed"]
        summary["mixed_fringe_visibility"] = fringe_visibility(same)
        summary["entangled_fraction"] = rc.source.entangled_fraction
    return table, summary


def _fit_dip(xs, ys) -> Optional[dict]:
    from scipy.optimize import curve_fit

    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 4 or ys.max() <= 0:
        return None

    def model(x, base, depth, mu, sigma):
        return base * (1.0 - depth * np.exp(-0.5 * ((x - mu) / sigma) ** 2))

    span = xs.max() - xs.min()
    p0 = [ys.max(), min(max(1.0 - ys.min() / ys.max(), 0.05), 0.95), xs[np.argmin(ys)], span / 8]
    try:
        popt, pcov = curve_fit(
            model,
            xs,
            ys,
            p0=p0,
            sigma=np.sqrt(np.maximum(ys, 1.0)),
            bounds=([0.0, 0.0, xs.min(), span / 100], [np.inf, 1.0, xs.max(), span]),
            maxfev=20000,
        )
    except (RuntimeError, ValueError):
        return None
    err = np.sqrt(np.diag(pcov))
    return {
        "baseline": float(popt[0]),
        "visibility": float(popt[1]),
        "visibility_err": float(err[1]),
        "center_ps": float(popt[2]),
        "fwhm_ps": float(abs(popt[3]) * 2 * math.sqrt(2 * math.log(2))),
        "fwhm_err_ps": float(err[3] * 2 * math.sqrt(2 * math.log(2))),
    }


def run_simulate(rc: RunConfig, workers: int) -> tuple[list[dict], dict]:
    rows = scan(
        rc.experiment,
        rc.scan_axis,
        rc.scan_points,
        rc.seed,
        rc.coincidence,
        rc.counts,
        workers=workers,
        accidental_offset_ps=rc.accidental_offset_ps,
    )
    table = [r.as_dict() for r in rows]
    summary: dict = {}
    if rc.scan_axis == "vdl_delay":
        for q in rc.counts:
            pts = [(r.point, r.subtracted) for r in rows if r.quantity == q]
            fit = _fit_dip([p for p, _ in pts], [c for _, c in pts])
            if fit:
                summary[f"dip_fit:{q}"] = fit
        summary["coherence_fwhm_ps"] = coherence_sigma_t(rc.source) * 2 * math.sqrt(2 * math.log(2))
    elif rc.scan_axis == "lcvr_phase":
        for q in rc.counts:
            summary[f"fringe_visibility:{q}"] = fringe_visibility([r.subtracted for r in rows if r.quantity == q])
    else:
        total = sum(max(r.subtracted, 0) for r in rows)
        summary["pattern_fraction"] = {r.quantity: (max(r.subtracted, 0) / total if total else 0.0) for r in rows}
    return table, summary


def run_g2(rc: RunConfig, workers: int, out: Path) -> tuple[list[dict], dict]:
    g2 = rc.raw["g2"]
    run = simulate(rc.experiment, rc.seed, workers=workers)
    bin_ps = g2.get("bin_ps", rc.raw.get("coincidence", {}).get("histogram_bin_ps", 100))
    table, summary = [], {}
    for a, b in g2["pairs"]:
        h = g2_histogram(run.streams[a], run.streams[b], tuple(g2["range_ps"]), bin_ps)
        h.write_csv(out / f"g2_{a}_{b}.csv")
        tau = relative_delay_estimate(h)
        fw = correlation_fwhm(h)
        summary[f"{a}-{b}"] = {
            "delay_ps": tau,
            "delay_us": tau * 1e-6,
            "fit_center_ps": fw["center_ps"],
            "fwhm_ps": fw["fwhm_ps"],
            "counts": h.total,
        }
        table.append({"scan_value": f"{a}-{b}", "quantity": "delay_ps", "value": tau})
        table.append({"scan_value": f"{a}-{b}", "quantity": "fwhm_ps", "value": fw["fwhm_ps"]})
    return table, summary


def run_throughput(rc: RunConfig) -> tuple[list[dict], dict]:
    budget = rate_budget(rc.throughput, rc.plan if rc.topology else None, rc.topology, rc.quoted_remote_rate_hz)
    table = [
        {"scan_value": "local", "quantity": "local_fourfold_rate_hz", "value": budget["local_fourfold_rate_hz"]},
        {"scan_value": "aggregate", "quantity": "aggregate_loss_db", "value": budget["aggregate_loss_db"]},
        {"scan_value": "aggregate", "quantity": "aggregate_rate_hz", "value": budget["aggregate_rate_hz"]},
        {"scan_value": "quoted", "quantity": "quoted_remote_rate_hz", "value": budget["quoted_remote_rate_hz"]},
        {"scan_value": "quoted", "quantity": "extra_loss_db_to_match", "value": budget["extra_loss_db_to_match"]},
    ]
    for m, db in budget["per_photon_loss_db"].items():
        table.append({"scan_value": m, "quantity": "photon_loss_db", "value": db})
    for h, r in budget["distributed_rate_hz"].items():
        table.append({"scan_value": h, "quantity": "distributed_rate_hz", "value": r})
    budget["note"] = (
        f"aggregate budget gives {budget['aggregate_rate_hz']:.3f} Hz, not the quoted "
        f"{budget['quoted_remote_rate_hz']} Hz; matching it needs about "
        f"{budget['extra_loss_db_to_match']:.1f} dB of loss that the stated budget does not contain"
    )
    return table, budget


# output --------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_table(rows: list[dict], path: Path, fmt: str) -> Path:
    if fmt == "json":
        path = path.with_suffix(".json")
        path.write_text(json.dumps(rows, indent=1, sort_keys=True, default=float) + "\n")
        return path
    path = path.with_suffix(".csv")
    cols = list(rows[0].keys()) if rows else ["scan_value", "quantity", "value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])
    return path


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def execute(cfg: dict, out: Path, fmt: str = "csv", workers: int = 1) -> dict:
    """Run a validated config dict, write outputs and the manifest, return the summary."""
    rc = build(cfg)
    out.mkdir(parents=True, exist_ok=True)
    if rc.mode == "predict":
        table, summary = run_predict(rc)
    elif rc.mode == "simulate":
        table, summary = run_simulate(rc, workers)
    elif rc.mode == "g2":
        table, summary = run_g2(rc, workers, out)
    else:
        table, summary = run_throughput(rc)
    written = [write_table(table, out / rc.mode, fmt)]
    spath = out / "summary.json"
    spath.write_text(json.dumps(summary, indent=1, sort_keys=True, default=float) + "\n")
    written.append(spath)
    written += sorted(out.glob("g2_*.csv"))
    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "name": rc.name,
        "mode": rc.mode,
        "seed": rc.seed,
        "config_sha256": config_hash(cfg),
        "versions": {
            "photonfusion": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "outputs": {p.name: _sha(p) for p in written},
        "config": cfg,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return summary


def _resolve(args) -> dict:
    cfg = load_config(args.config)
    overrides = list(args.set or [])
    if getattr(args, "mode", None):
        overrides.append(f"mode={args.mode}")
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    return apply_overrides(cfg, overrides)


def cmd_run(args) -> int:
    try:
        cfg = _resolve(args)
        diags = validate_config(cfg)
        if diags:
            raise ConfigError(diags)
    except (ConfigError, OSError) as exc:
        for line in getattr(exc, "diagnostics", [str(exc)]):
            print(f"error: {line}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out or f"results/{cfg['name']}")
    try:
        summary = execute(cfg, out, args.format, args.workers)
    except ConfigError as exc:
        for line in exc.diagnostics:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # runtime failure
        log.exception("run failed")
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if "note" in summary:
        print(summary["note"])
    print(f"wrote {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = _resolve(args)
    except (ConfigError, OSError) as exc:
        for line in getattr(exc, "diagnostics", [str(exc)]):
            print(f"error: {line}", file=sys.stderr)
        return EXIT_INVALID
    diags = validate_config(cfg)
    for d in diags:
        print(f"error: {d}")
    if not diags:
        print("ok")
    return EXIT_INVALID if diags else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="photonfusion", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="config path, run manifest, or bundled config name")
        sp.add_argument("--mode", choices=["predict", "simulate", "throughput", "g2"])
        sp.add_argument("--seed", type=int)
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted-path override, repeatable")

    r = sub.add_parser("run", help="run a config")
    common(r)
    r.add_argument("--out", help="output directory (default results/<name>)")
    r.add_argument("--format", choices=["csv", "json"], default="csv")
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a config without running it")
    common(v)
    v.set_defaults(func=cmd_validate)

    ls = sub.add_parser("list", help="list bundled configs")
    ls.set_defaults(func=lambda a: print("\n".join(bundled_configs())) or EXIT_OK)

    sc = sub.add_parser("schema", help="print the config JSON schema")
    sc.set_defaults(func=lambda a: print(json.dumps(SCHEMA, indent=2)) or EXIT_OK)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
