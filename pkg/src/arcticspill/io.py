"""Input bundles on disk: CSV tables, JSON config and scenarios, run manifests.

A bundle directory holds

``resources.csv``  id,name,kind,setup_time_per_unit[,setup_unit_size,unit_cost,capacity_per_unit]
``stations.csv``   id,name,lat,lon,opening_cost[,base_delay] plus one inventory column per resource name
``spills.csv``     id,lat,lon,volume,esi
``config.json``    model settings, weights, sampling settings and scenario probabilities
``scenarios.json`` optional; generated from the spills when absent
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import platform
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .core_model import ModelConfig, ProblemInstance, ResourceType, Scenario, SpillEvent, Station, Weights, build_instance
from .errors import CrossRefError, InfeasibleDataWarning, ParseError, SchemaError, ValidationError
from .scenarios import SamplingConfig, ScenarioSet, fit_exponential, generate_scenarios

FILES = ("resources.csv", "stations.csv", "spills.csv", "config.json", "scenarios.json")


@dataclass
class InputBundle:
    root: Path

    def __post_init__(self):
        self.root = Path(self.root)

    def path(self, name: str) -> Path:
        return self.root / name

    @property
    def has_scenarios(self) -> bool:
        return self.path("scenarios.json").is_file()

    def input_files(self) -> list[Path]:
        return [self.path(n) for n in FILES if self.path(n).is_file()]


@dataclass
class BundleConfig:
    model: ModelConfig
    weights: Weights
    sampling: SamplingConfig
    probabilities: tuple[float, ...]
    eligible_pairs: tuple[tuple[int, int], ...] | None = None  # (spill id, station id)
    raw: dict = field(default_factory=dict)


# -- CSV --------------------------------------------------------------------

def _read_table(path: Path, required: Sequence[str]) -> tuple[list[str], list[tuple[int, dict[str, str]]]]:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise OSError(f"{path}: {exc}") from exc
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise SchemaError(f"{path}: empty file, header row required")
    header = [h.strip() for h in rows[0]]
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    if len(set(header)) != len(header):
        raise SchemaError(f"{path}: duplicate column names in header")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(path, lineno, min(len(row), len(header)) + 1,
                             f"expected {len(header)} fields, found {len(row)}")
        out.append((lineno, {h: c.strip() for h, c in zip(header, row)}))
    return header, out


def _num(path: Path, lineno: int, header: list[str], rec: dict, col: str, cast: Callable = float, default=None):
    if col not in rec:
        return default
    raw = rec[col]
    if raw == "" and default is not None:
        return default
    try:
        val = cast(raw)
    except ValueError:
        raise ParseError(path, lineno, header.index(col) + 1, f"{col}: cannot parse {raw!r} as a number") from None
    if cast is float and not math.isfinite(val):
        raise ParseError(path, lineno, header.index(col) + 1, f"{col}: value must be finite")
    return val


def _wrap(path: Path, lineno: int, fn: Callable):
    try:
        return fn()
    except ValidationError as exc:
        if isinstance(exc, (ParseError, SchemaError)):
            raise
        raise type(exc)(f"{path}:{lineno}: {exc}") from None


def _unique_ids(path: Path, ids: list[int]) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            raise SchemaError(f"{path}: duplicate id {i}")
        seen.add(i)


def parse_resources(path: Path) -> list[ResourceType]:
    header, rows = _read_table(path, ("id", "name", "kind", "setup_time_per_unit"))
    out = []
    for ln, r in rows:
        out.append(_wrap(path, ln, lambda: ResourceType(
            id=_num(path, ln, header, r, "id", int),
            name=r["name"],
            setup_time_per_unit=_num(path, ln, header, r, "setup_time_per_unit"),
            unit_cost=_num(path, ln, header, r, "unit_cost", default=0.0),
            capacity_per_unit=_num(path, ln, header, r, "capacity_per_unit", default=1.0),
            kind=r["kind"],
            setup_unit_size=_num(path, ln, header, r, "setup_unit_size", default=1.0),
        )))
    _unique_ids(path, [x.id for x in out])
    names = [x.name for x in out]
    if len(set(names)) != len(names):
        raise SchemaError(f"{path}: resource names must be unique")
    return out


def parse_stations(path: Path, resources: Sequence[ResourceType]) -> list[Station]:
    names = [r.name for r in resources]
    header, rows = _read_table(path, ("id", "name", "lat", "lon", "opening_cost", *names))
    out = []
    for ln, r in rows:
        inv = np.array([_num(path, ln, header, r, n) for n in names], dtype=float)
        out.append(_wrap(path, ln, lambda: Station(
            id=_num(path, ln, header, r, "id", int),
            name=r["name"],
            lat=_num(path, ln, header, r, "lat"),
            lon=_num(path, ln, header, r, "lon"),
            opening_cost=_num(path, ln, header, r, "opening_cost"),
            inventory=inv,
            base_delay=_num(path, ln, header, r, "base_delay", default=15.0),
        )))
    _unique_ids(path, [x.id for x in out])
    return out


def parse_spills(path: Path) -> list[SpillEvent]:
    header, rows = _read_table(path, ("id", "lat", "lon", "volume", "esi"))
    out = []
    for ln, r in rows:
        out.append(_wrap(path, ln, lambda: SpillEvent(
            id=_num(path, ln, header, r, "id", int),
            lat=_num(path, ln, header, r, "lat"),
            lon=_num(path, ln, header, r, "lon"),
            base_volume=_num(path, ln, header, r, "volume"),
            base_esi=_num(path, ln, header, r, "esi"),
        )))
    _unique_ids(path, [x.id for x in out])
    return out


# -- JSON -------------------------------------------------------------------

def _load_json(path: Path) -> Any:
    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.colno, exc.msg) from None


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise SchemaError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise SchemaError(f"{where}: unknown field(s) {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def parse_config(path: Path) -> BundleConfig:
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be an object")
    for key in ("model", "weights"):
        if key not in doc:
            raise SchemaError(f"{path}: missing section {key!r}")
    model = _build(ModelConfig, doc["model"], f"{path}: model")
    w = doc["weights"]
    if not isinstance(w, dict) or "k1" not in w or "omega" not in w:
        raise SchemaError(f"{path}: weights need 'k1' and 'omega'")
    if len(w["omega"]) != 3:
        raise SchemaError(f"{path}: weights.omega must have three entries")
    weights = Weights.from_k1(float(w["k1"]), [float(x) for x in w["omega"]])
    samp = dict(doc.get("sampling", {}))
    if "truncation_bounds" in samp:
        samp["truncation_bounds"] = tuple(samp["truncation_bounds"])
    sampling = _build(SamplingConfig, samp, f"{path}: sampling")
    probs = tuple(float(p) for p in doc.get("probabilities", ()))
    pairs = doc.get("eligible_pairs")
    if pairs is not None:
        pairs = tuple((int(o), int(i)) for o, i in pairs)
    return BundleConfig(model, weights, sampling, probs, pairs, doc)


def config_to_dict(cfg: BundleConfig) -> dict:
    w = cfg.weights
    doc = {
        "model": dataclasses.asdict(cfg.model),
        "weights": {"k1": w.k1, "omega": [w.omega1, w.omega2, w.omega3]},
        "sampling": {**dataclasses.asdict(cfg.sampling), "truncation_bounds": list(cfg.sampling.truncation_bounds)},
        "probabilities": list(cfg.probabilities),
    }
    if cfg.eligible_pairs is not None:
        doc["eligible_pairs"] = [list(p) for p in cfg.eligible_pairs]
    return doc


def parse_scenarios(path: Path, spills: Sequence[SpillEvent], resources: Sequence[ResourceType]) -> ScenarioSet:
    """Read a scenario document and reorder it to the spill and resource files."""
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be an object")
    ss = ScenarioSet.from_dict(doc)
    spill_ids = [s.id for s in spills]
    doc_ids = [int(x) for x in doc.get("spill_ids", spill_ids)]
    unknown = sorted(set(doc_ids) - set(spill_ids))
    if unknown:
        raise CrossRefError(f"{path}: scenarios reference unknown spill id(s) {unknown}")
    absent = sorted(set(spill_ids) - set(doc_ids))
    if absent:
        raise CrossRefError(f"{path}: no scenario data for spill id(s) {absent}")
    res_names = [r.name for r in resources]
    doc_res = list(doc.get("resource_names", res_names))
    bad = sorted(set(doc_res) ^ set(res_names))
    if bad:
        raise CrossRefError(f"{path}: resource names {bad} do not match resources.csv")
    o_idx = [doc_ids.index(i) for i in spill_ids]
    r_idx = [doc_res.index(n) for n in res_names]
    scs = []
    for s in ss.scenarios:
        if s.spill_volume.size != len(doc_ids) or s.demand.shape != (len(doc_ids), len(doc_res)):
            raise SchemaError(f"{path}: scenario {s.id} arrays do not match spill_ids/resource_names")
        scs.append(Scenario(s.id, s.probability, s.spill_volume[o_idx], s.spill_esi[o_idx],
                            s.demand[np.ix_(o_idx, r_idx)]))
    return ScenarioSet(tuple(scs), ss.provenance, ss.seed)


def scenarios_to_json(ss: ScenarioSet, spills: Sequence[SpillEvent], resources: Sequence[ResourceType]) -> str:
    doc = ss.to_dict()
    doc["spill_ids"] = [s.id for s in spills]
    doc["resource_names"] = [r.name for r in resources]
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


# -- bundles ------------------------------------------------------------------

@dataclass
class ParsedBundle:
    resources: list[ResourceType]
    stations: list[Station]
    spills: list[SpillEvent]
    config: BundleConfig
    scenarios: ScenarioSet


def make_scenarios(spills: Sequence[SpillEvent], resources: Sequence[ResourceType], cfg: BundleConfig,
                   seed: int | None = None, n_stochastic: int | None = None,
                   probabilities: Sequence[float] | None = None) -> ScenarioSet:
    samp = cfg.sampling
    if seed is not None:
        samp = dataclasses.replace(samp, rng_seed=seed)
    if n_stochastic is not None:
        samp = dataclasses.replace(samp, n_stochastic=n_stochastic)
    probs = probabilities if probabilities is not None else cfg.probabilities
    if not probs or len(probs) != samp.n_stochastic + 1:
        probs = [1.0 / (samp.n_stochastic + 1)] * (samp.n_stochastic + 1)
    fitted = fit_exponential([s.base_volume for s in spills])
    return generate_scenarios(spills, fitted, samp, probs, resources, cfg.model)


def read_bundle(bundle: InputBundle | str | Path) -> ParsedBundle:
    b = bundle if isinstance(bundle, InputBundle) else InputBundle(Path(bundle))
    for name in FILES[:4]:
        if not b.path(name).is_file():
            raise FileNotFoundError(f"{b.path(name)}: missing bundle file")
    resources = parse_resources(b.path("resources.csv"))
    stations = parse_stations(b.path("stations.csv"), resources)
    spills = parse_spills(b.path("spills.csv"))
    cfg = parse_config(b.path("config.json"))
    if b.has_scenarios:
        ss = parse_scenarios(b.path("scenarios.json"), spills, resources)
    else:
        ss = make_scenarios(spills, resources, cfg)
    return ParsedBundle(resources, stations, spills, cfg, ss)


def _pairs_to_indices(cfg: BundleConfig, stations, spills):
    if cfg.eligible_pairs is None:
        return None
    st = {s.id: i for i, s in enumerate(stations)}
    sp = {s.id: o for o, s in enumerate(spills)}
    out = []
    for o_id, i_id in cfg.eligible_pairs:
        if o_id not in sp or i_id not in st:
            raise CrossRefError(f"eligible pair ({o_id}, {i_id}) references an unknown spill or station id")
        out.append((sp[o_id], st[i_id]))
    return out


def instance_from_parsed(p: ParsedBundle, scenarios: ScenarioSet | None = None) -> ProblemInstance:
    ss = scenarios or p.scenarios
    return build_instance(p.stations, p.spills, p.resources, ss.scenarios, p.config.weights, p.config.model,
                          pairs=_pairs_to_indices(p.config, p.stations, p.spills))


def parse_inputs(bundle: InputBundle | str | Path) -> ProblemInstance:
    return instance_from_parsed(read_bundle(bundle))


def data_check(bundle: InputBundle | str | Path) -> list[str]:
    """Itemised problems with a bundle; an empty list means it is usable.

    Hard errors are prefixed ``error:``, soft findings ``warning:``.
    """
    try:
        parsed = read_bundle(bundle)
    except (ValidationError, FileNotFoundError) as exc:
        return [f"error: {exc}"]
    issues = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            inst = instance_from_parsed(parsed)
        except ValidationError as exc:
            return [f"error: {exc}"]
    for note in inst.warnings:
        issues.append(f"warning: {note}")
    for w in caught:
        if issubclass(w.category, InfeasibleDataWarning) and f"warning: {w.message}" not in issues:
            issues.append(f"warning: {w.message}")
    # prep time must fit inside the response window for every eligible pair
    pt = inst.derived.prep_time
    for (o, i) in sorted(inst.pairs):
        late = [k for k in range(inst.n_scenarios) if pt[i, o, k] > inst.config.tau_max]
        if late:
            issues.append(f"warning: station {inst.stations[i].id} needs longer than tau_max to prepare "
                          f"for spill {inst.spills[o].id} in scenario(s) {late}")
    return issues


def _fmt(v: float) -> str:
    return repr(float(v)) if not float(v).is_integer() else str(int(v)) if abs(v) < 1e15 else repr(float(v))


def write_bundle(instance: ProblemInstance, root: str | Path, sampling: SamplingConfig | None = None,
                 provenance: Sequence[str] | None = None, seed: int | None = None,
                 explicit_pairs: bool = True) -> InputBundle:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    res = instance.resources
    with open(root / "resources.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "name", "kind", "setup_time_per_unit", "setup_unit_size", "unit_cost", "capacity_per_unit"])
        for r in res:
            w.writerow([r.id, r.name, r.kind, _fmt(r.setup_time_per_unit), _fmt(r.setup_unit_size),
                        _fmt(r.unit_cost), _fmt(r.capacity_per_unit)])
    with open(root / "stations.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "name", "lat", "lon", "opening_cost", "base_delay", *[r.name for r in res]])
        for s in instance.stations:
            w.writerow([s.id, s.name, _fmt(s.lat), _fmt(s.lon), _fmt(s.opening_cost), _fmt(s.base_delay),
                        *[_fmt(x) for x in s.inventory]])
    with open(root / "spills.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "lat", "lon", "volume", "esi"])
        for o in instance.spills:
            w.writerow([o.id, _fmt(o.lat), _fmt(o.lon), _fmt(o.base_volume), _fmt(o.base_esi)])
    pairs = None
    if explicit_pairs:
        pairs = tuple(sorted((instance.spills[o].id, instance.stations[i].id) for o, i in instance.pairs))
    cfg = BundleConfig(instance.config, instance.weights, sampling or SamplingConfig(),
                       tuple(s.probability for s in instance.scenarios), pairs)
    (root / "config.json").write_text(json.dumps(config_to_dict(cfg), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    prov = tuple(provenance) if provenance else ("deterministic",) + ("sampled",) * (instance.n_scenarios - 1)
    ss = ScenarioSet(instance.scenarios, prov, seed)
    (root / "scenarios.json").write_text(scenarios_to_json(ss, instance.spills, instance.resources), encoding="utf-8")
    return InputBundle(root)


# -- manifest -----------------------------------------------------------------

def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: str | Path, command: str, inputs: Sequence[Path], config: dict | None = None,
                   seed: int | None = None) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    canon = json.dumps(config or {}, sort_keys=True, separators=(",", ":"))
    doc = {
        "command": command,
        "config_hash": hashlib.sha256(canon.encode()).hexdigest(),
        "inputs": {Path(p).name: sha256_file(Path(p)) for p in inputs},
        "seed": seed,
        "tool_version": __version__,
        "python": platform.python_version(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def bundled_instance_path(name: str = "north_slope") -> Path:
    """Location of a bundle shipped with the package."""
    return Path(__file__).resolve().parent / "data" / name


def load_bundled(name: str = "north_slope") -> ProblemInstance:
    return parse_inputs(bundled_instance_path(name))
