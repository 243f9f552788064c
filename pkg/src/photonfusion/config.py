"""Experiment configuration: YAML schema, overrides, validation, object building."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np
import yaml

from .fock import Polarization
from .montecarlo.coincidence import CoincidenceSpec
from .montecarlo.detectors import DetectorSpec
from .montecarlo.experiment import ConfigInvalid, Experiment
from .network import RoutePlan, Topology, ThroughputSpec, load_topology, mode_delay_us, topology_from_dict
from .optics import LCVR, PBS, BeamSplitter, Circuit, DelayLine, Rotation
from .source import SpdcSpec

__all__ = [
    "SCHEMA",
    "MODES",
    "PREDICTIONS",
    "ConfigError",
    "RunConfig",
    "load_config",
    "bundled_configs",
    "bundled_path",
    "apply_overrides",
    "validate_config",
    "build",
    "config_hash",
]

MODES = ("predict", "simulate", "throughput", "g2")
PREDICTIONS = ("none", "bell_fringe", "hom_dip", "fusion_dip", "heralded_noon", "heralded_bell", "projection_spectrum")

_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_frac = {"type": "number", "minimum": 0, "maximum": 1}
_str_list = {"type": "array", "items": {"type": "string"}}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "photonfusion experiment",
    "type": "object",
    "required": ["name", "mode"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "mode": {"enum": list(MODES)},
        "seed": {"type": "integer", "minimum": 0},
        "source": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "wavelength_nm": {"type": "number", "exclusiveMinimum": 0},
                "bandwidth_fwhm_nm": {"type": "number", "exclusiveMinimum": 0},
                "pair_rate_hz": _nonneg,
                "entangled_fraction": _frac,
                "background_singles_rate_hz": _nonneg,
                "hom_visibility": _frac,
            },
        },
        "experiment": {
            "type": "object",
            "additionalProperties": False,
            "required": ["pairs"],
            "properties": {
                "pairs": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
                },
                "pair_state": {"enum": ["singlet", "HH", "HV", "VH", "VV"]},
                "grouping": {"enum": ["independent", "fused"]},
                "fusion_probability": _frac,
                "duration_s": _nonneg,
                "block_s": {"type": "number", "exclusiveMinimum": 0},
                "interference": {"type": "boolean"},
                "extra_loss_db": {"type": "object", "additionalProperties": _nonneg},
            },
        },
        "circuit": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["type"],
                "properties": {"type": {"enum": ["beamsplitter", "pbs", "lcvr", "rotation", "delay"]}},
                "allOf": [
                    {
                        "if": {"properties": {"type": {"const": "beamsplitter"}}},
                        "then": {
                            "required": ["in1", "in2"],
                            "additionalProperties": False,
                            "properties": {
                                "type": {},
                                "in1": {"type": "string"},
                                "in2": {"type": "string"},
                                "out1": {"type": "string"},
                                "out2": {"type": "string"},
                                "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                            },
                        },
                    },
                    {
                        "if": {"properties": {"type": {"const": "pbs"}}},
                        "then": {
                            "required": ["inp", "out_h", "out_v"],
                            "additionalProperties": False,
                            "properties": {
                                "type": {},
                                "inp": {"type": "string"},
                                "out_h": {"type": "string"},
                                "out_v": {"type": "string"},
                                "slow_axis_deg": _num,
                                "error_deg": _num,
                            },
                        },
                    },
                    {
                        "if": {"properties": {"type": {"const": "lcvr"}}},
                        "then": {
                            "required": ["mode"],
                            "additionalProperties": False,
                            "properties": {"type": {}, "mode": {"type": "string"}, "retardance_rad": _num},
                        },
                    },
                    {
                        "if": {"properties": {"type": {"const": "rotation"}}},
                        "then": {
                            "required": ["mode", "angle_deg"],
                            "additionalProperties": False,
                            "properties": {"type": {}, "mode": {"type": "string"}, "angle_deg": _num},
                        },
                    },
                    {
                        "if": {"properties": {"type": {"const": "delay"}}},
                        "then": {
                            "required": ["mode"],
                            "additionalProperties": False,
                            "properties": {"type": {}, "mode": {"type": "string"}, "delay_ps": _num},
                        },
                    },
                ],
            },
        },
        "lcvr_calibration": {
            "type": "array",
            "minItems": 2,
            "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
        },
        "topology_file": {"type": "string"},
        "topology": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "nodes": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["id"],
                        "additionalProperties": False,
                        "properties": {"id": {"type": "string"}, "role": {"enum": ["source_lab", "remote"]}},
                    },
                },
                "links": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["from", "to"],
                        "additionalProperties": False,
                        "properties": {
                            "from": {"type": "string"},
                            "to": {"type": "string"},
                            "loss_db": _nonneg,
                            "delay_us": _nonneg,
                            "length_km": _nonneg,
                            "group_index": {"type": "number", "exclusiveMinimum": 0},
                        },
                        "anyOf": [{"required": ["delay_us"]}, {"required": ["length_km"]}],
                    },
                },
                "routes": {"type": "object", "additionalProperties": _str_list},
            },
        },
        "detectors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "mode"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "mode": {"type": "string"},
                    "pol": {"enum": ["H", "V", None]},
                    "efficiency": _frac,
                    "dark_rate_hz": _nonneg,
                    "jitter_fwhm_ps": _nonneg,
                    "dead_time_ps": _nonneg,
                    "noise_rate_hz": _nonneg,
                },
            },
        },
        "coincidence": {
            "type": "object",
            "additionalProperties": False,
            "required": ["window_ps"],
            "properties": {
                "window_ps": {"type": "integer", "exclusiveMinimum": 0},
                "channel_offsets_ps": {
                    "oneOf": [{"const": "auto"}, {"type": "object", "additionalProperties": {"type": "integer"}}]
                },
                "histogram_bin_ps": {"type": "integer", "exclusiveMinimum": 0},
                "accidental_offset_ps": {"type": "integer", "exclusiveMinimum": 0},
            },
        },
        "counts": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "string"}, "minItems": 2}},
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axis"],
            "properties": {
                "axis": {"enum": ["vdl_delay", "lcvr_phase", "projection_pattern"]},
                "points": {"type": "array"},
                "range": {
                    "type": "object",
                    "required": ["start", "stop", "num"],
                    "additionalProperties": False,
                    "properties": {"start": _num, "stop": _num, "num": {"type": "integer", "minimum": 1}},
                },
                "control_values": {"type": "array", "items": _num},
            },
        },
        "prediction": {"enum": list(PREDICTIONS)},
        "g2": {
            "type": "object",
            "additionalProperties": False,
            "required": ["pairs", "range_ps"],
            "properties": {
                "pairs": {"type": "array", "items": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2}},
                "range_ps": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
                "bin_ps": {"type": "integer", "exclusiveMinimum": 0},
            },
        },
        "throughput": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "pair_rate_hz": _nonneg,
                "fusion_probability": _frac,
                "insertion_loss_db": _nonneg,
                "per_mode_loss_db": {"type": "object", "additionalProperties": _nonneg},
                "detector_efficiency": {"type": "object", "additionalProperties": _frac},
                "quoted_remote_rate_hz": _nonneg,
            },
        },
    },
}


class ConfigError(ValueError):
    """Validation failure; ``diagnostics`` holds one message per problem."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("\n".join(diagnostics))
        self.diagnostics = diagnostics


def bundled_configs() -> list[str]:
    root = resources.files("photonfusion") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml") and not p.name.startswith("topology"))


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("photonfusion") / "configs" / f"{name}.yaml"))


def load_config(path) -> dict:
    """Read YAML or JSON. A run manifest yields its embedded resolved config."""
    p = Path(path)
    if not p.exists() and bundled_path(str(path)).exists():
        p = bundled_path(str(path))
    with open(p) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError([f"{p}: top level must be a mapping"])
    if "manifest_version" in data:
        return copy.deepcopy(data["config"])
    if "topology_file" in data:
        tf = Path(data["topology_file"])
        if not tf.is_absolute():
            tf = p.parent / tf
        with open(tf) as fh:
            topo = yaml.safe_load(fh) or {}
        topo.update(data.get("topology") or {})
        data["topology"] = topo
        del data["topology_file"]
    return data


def _parse_path(key: str) -> list:
    return [int(k) if k.lstrip("-").isdigit() else k for k in key.split(".")]


def apply_overrides(cfg: dict, overrides) -> dict:
    """Apply ``key.sub=value`` strings; values are parsed as YAML scalars."""
    cfg = copy.deepcopy(cfg)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError([f"--set {item!r}: expected key=value"])
        key, raw = item.split("=", 1)
        path = _parse_path(key.strip())
        node = cfg
        for k in path[:-1]:
            if isinstance(node, list):
                node = node[k]
            else:
                node = node.setdefault(k, {})
        node[path[-1]] = yaml.safe_load(raw)
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _fmt_path(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _link_label(cfg, path) -> str:
    p = list(path)
    if len(p) >= 3 and p[0] == "topology" and p[1] == "links" and isinstance(p[2], int):
        try:
            l = cfg["topology"]["links"][p[2]]
            return f" (link {l.get('from')}-{l.get('to')})"
        except (KeyError, IndexError, TypeError):
            pass
    if len(p) >= 2 and p[0] == "detectors" and isinstance(p[1], int):
        try:
            return f" (detector {cfg['detectors'][p[1]].get('id')})"
        except (KeyError, IndexError, TypeError):
            pass
    return ""


def validate_config(cfg: dict) -> list[str]:
    """Schema plus cross-reference diagnostics; empty list means valid."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    diags = []
    for err in sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path))):
        best = jsonschema.exceptions.best_match([err])
        diags.append(f"{_fmt_path(best.absolute_path)}{_link_label(cfg, best.absolute_path)}: {best.message}")
    if diags:
        return diags
    return _cross_check(cfg)


def _cross_check(cfg: dict) -> list[str]:
    diags = []
    mode = cfg["mode"]
    topo = cfg.get("topology") or {}
    node_ids = [n["id"] for n in topo.get("nodes", [])]
    if len(set(node_ids)) != len(node_ids):
        diags.append("topology.nodes: duplicate node id")
    for i, l in enumerate(topo.get("links", [])):
        for end in ("from", "to"):
            if l[end] not in node_ids:
                diags.append(f"topology.links[{i}] (link {l['from']}-{l['to']}).{end}: unknown node {l[end]!r}")
    links = {frozenset((l["from"], l["to"])) for l in topo.get("links", [])}
    labs = {n["id"] for n in topo.get("nodes", []) if n.get("role") == "source_lab"}
    for m, path in (topo.get("routes") or {}).items():
        if not path:
            continue
        unknown = [p for p in path if p not in node_ids]
        if unknown:
            diags.append(f"topology.routes.{m}: unknown node(s) {unknown}")
            continue
        if path[0] not in labs or path[-1] not in labs:
            diags.append(f"topology.routes.{m}: path must start and end at the source lab")
        for u, v in zip(path[:-1], path[1:]):
            if frozenset((u, v)) not in links:
                diags.append(f"topology.routes.{m}: no link {u}-{v}")

    if mode in ("predict", "simulate", "g2"):
        if "experiment" not in cfg:
            diags.append(f"experiment: required for mode {mode!r}")
            return diags
        if "detectors" not in cfg:
            diags.append(f"detectors: required for mode {mode!r}")
            return diags
    exp = cfg.get("experiment") or {}
    in_modes = [m for p in exp.get("pairs", []) for m in p]
    if len(set(in_modes)) != len(in_modes):
        diags.append("experiment.pairs: modes must be distinct")
    known_modes = set(in_modes)
    for i, e in enumerate(cfg.get("circuit", [])):
        for k in ("in1", "in2", "inp", "mode"):
            if k in e and e[k] not in known_modes:
                diags.append(f"circuit[{i}].{k}: mode {e[k]!r} is not produced by the source or an earlier element")
        for k in ("out1", "out2", "out_h", "out_v"):
            if k in e:
                known_modes.add(e[k])
        if e["type"] == "beamsplitter":
            known_modes.add(e["in1"])
            known_modes.add(e["in2"])
    det_ids = [d["id"] for d in cfg.get("detectors", [])]
    if len(set(det_ids)) != len(det_ids):
        diags.append("detectors: duplicate detector id")
    for i, d in enumerate(cfg.get("detectors", [])):
        if known_modes and d["mode"] not in known_modes:
            diags.append(f"detectors[{i}] (detector {d['id']}).mode: unknown mode {d['mode']!r}")
    for name, chans in (cfg.get("counts") or {}).items():
        for c in chans:
            if c not in det_ids:
                diags.append(f"counts.{name}: unknown detector {c!r}")
    coin = cfg.get("coincidence") or {}
    offs = coin.get("channel_offsets_ps")
    if isinstance(offs, dict):
        for c in offs:
            if c not in det_ids:
                diags.append(f"coincidence.channel_offsets_ps.{c}: unknown detector")
    scan = cfg.get("scan")
    if mode == "simulate":
        if not cfg.get("counts"):
            diags.append("counts: required for mode 'simulate'")
        if not coin:
            diags.append("coincidence: required for mode 'simulate'")
    if mode in ("simulate", "predict"):
        if scan is None:
            diags.append(f"scan: required for mode {mode!r}")
        else:
            n_src = sum(k in scan for k in ("points", "range", "control_values"))
            if n_src != 1:
                diags.append("scan: give exactly one of points, range, control_values")
            if "control_values" in scan and "lcvr_calibration" not in cfg:
                diags.append("scan.control_values: needs lcvr_calibration")
            types = {e["type"] for e in cfg.get("circuit", [])}
            if scan["axis"] == "vdl_delay" and "delay" not in types:
                diags.append("scan.axis: vdl_delay needs a delay element in the circuit")
            if scan["axis"] == "lcvr_phase" and "lcvr" not in types:
                diags.append("scan.axis: lcvr_phase needs an lcvr element in the circuit")
            if scan["axis"] == "projection_pattern":
                for p in scan.get("points", []):
                    if str(p) not in (cfg.get("counts") or {}):
                        diags.append(f"scan.points: pattern {p!r} has no entry in counts")
    if mode == "g2":
        g2 = cfg.get("g2")
        if not g2:
            diags.append("g2: required for mode 'g2'")
        else:
            for i, pair in enumerate(g2["pairs"]):
                for c in pair:
                    if c not in det_ids:
                        diags.append(f"g2.pairs[{i}]: unknown detector {c!r}")
            lo, hi = g2["range_ps"]
            b = g2.get("bin_ps", coin.get("histogram_bin_ps", 100))
            if hi <= lo or (hi - lo) % b:
                diags.append("g2.range_ps: bin must evenly divide a non-empty range")
    cal = cfg.get("lcvr_calibration")
    if cal:
        xs = [c[0] for c in cal]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            diags.append("lcvr_calibration: control values must be strictly increasing")
    return diags


# building ---------------------------------------------------------------------


@dataclass
class RunConfig:
    raw: dict
    name: str
    mode: str
    seed: int
    source: SpdcSpec
    topology: Optional[Topology]
    plan: RoutePlan
    experiment: Optional[Experiment] = None
    coincidence: Optional[CoincidenceSpec] = None
    counts: dict = field(default_factory=dict)
    scan_axis: Optional[str] = None
    scan_points: list = field(default_factory=list)
    prediction: str = "none"
    accidental_offset_ps: Optional[int] = None
    throughput: Optional[ThroughputSpec] = None
    quoted_remote_rate_hz: float = 0.07


def _element(e: dict):
    kw = {k: v for k, v in e.items() if k != "type"}
    return {"beamsplitter": BeamSplitter, "pbs": PBS, "lcvr": LCVR, "rotation": Rotation, "delay": DelayLine}[e["type"]](**kw)


def scan_points(cfg: dict) -> list:
    scan = cfg["scan"]
    if "points" in scan:
        return list(scan["points"])
    if "range" in scan:
        r = scan["range"]
        return [float(x) for x in np.linspace(r["start"], r["stop"], r["num"])]
    cal = np.asarray(cfg["lcvr_calibration"], dtype=float)
    return [float(x) for x in np.interp(scan["control_values"], cal[:, 0], cal[:, 1])]


def build(cfg: dict) -> RunConfig:
    diags = validate_config(cfg)
    if diags:
        raise ConfigError(diags)
    source = SpdcSpec(**cfg.get("source", {}))
    topology, plan = (topology_from_dict(cfg["topology"]) if cfg.get("topology") else (None, RoutePlan()))
    rc = RunConfig(cfg, cfg["name"], cfg["mode"], int(cfg.get("seed", 0)), source, topology, plan)
    rc.prediction = cfg.get("prediction", "none")
    if "experiment" in cfg:
        e = cfg["experiment"]
        dets = tuple(
            DetectorSpec(**{k: (Polarization(v) if k == "pol" and v is not None else v) for k, v in d.items()})
            for d in cfg.get("detectors", [])
        )
        try:
            rc.experiment = Experiment(
                source=source,
                pairs=tuple(tuple(p) for p in e["pairs"]),
                detectors=dets,
                circuit=Circuit(tuple(_element(x) for x in cfg.get("circuit", []))),
                pair_state=e.get("pair_state", "singlet"),
                grouping=e.get("grouping", "independent"),
                fusion_probability=e.get("fusion_probability", 1 / 32),
                topology=topology,
                plan=plan,
                extra_loss_db=e.get("extra_loss_db", {}),
                duration_s=e.get("duration_s", 1.0),
                block_s=e.get("block_s", 0.5),
                interference=e.get("interference", True),
            )
        except ConfigInvalid as exc:
            raise ConfigError([str(exc)]) from exc
    coin = cfg.get("coincidence")
    if coin:
        offs = coin.get("channel_offsets_ps", {})
        if offs == "auto":
            offs = auto_offsets(rc)
        first = next(iter((cfg.get("counts") or {}).values()), [d["id"] for d in cfg.get("detectors", [])][:2])
        rc.coincidence = CoincidenceSpec(tuple(first), coin["window_ps"], offs, coin.get("histogram_bin_ps", 100))
        rc.accidental_offset_ps = coin.get("accidental_offset_ps")
    rc.counts = {k: list(v) for k, v in (cfg.get("counts") or {}).items()}
    if "scan" in cfg:
        rc.scan_axis = cfg["scan"]["axis"]
        rc.scan_points = scan_points(cfg)
    if cfg["mode"] == "throughput" or "throughput" in cfg:
        t = dict(cfg.get("throughput", {}))
        rc.quoted_remote_rate_hz = t.pop("quoted_remote_rate_hz", 0.07)
        t.setdefault("pair_rate_hz", source.pair_rate_hz)
        rc.throughput = ThroughputSpec(**t)
    return rc


def auto_offsets(rc: RunConfig) -> dict:
    """Offsets that cancel each detector's route delay."""
    out = {}
    if rc.topology is None or rc.experiment is None:
        return out
    for d in rc.experiment.detectors:
        if rc.plan.path(d.mode):
            out[d.id] = -int(round(mode_delay_us(rc.plan, rc.topology, d.mode) * 1e6))
    return out
