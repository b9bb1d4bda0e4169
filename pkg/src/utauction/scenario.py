"""JSON scenario files.

Layout (schema_version 1)::

    {
      "schema_version": 1,
      "name": "e3", "description": "...",
      "kind": "explicit",                      # or "ad"
      "bidders": ["A", "B"], "outcomes": [...],    # optional labels
      "values": [[1, 0], [0, 2]],              # explicit only
      "ad": {"slot_ctrs": [...], "quality": [...], "values": [...],
             "x": [...], "pi": [...]},         # ad only; x and pi optional
      "bids": {"name": [{"x": [...], "pi": 0.0}, ...]},   # optional
      "targets": {"name": [0.5, 0.5, 0.0]},                # optional
      "simulation": {"epsilon": 0.01, "axioms": "all", "target": "egalitarian",
                     "seed": 0, "max_steps": null, "winner_policy": "round-robin",
                     "initial": "caps"}                    # optional
    }

Errors carry the JSON path of the offending field.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .ads import AdSetting, AdSettingError, to_explicit_instance
from .core import Bid, BidProfile, Instance, validate_instance
from .dynamics import AXIOM_ALIASES, AXIOM_SETS, TARGETS

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Malformed or invalid scenario; `where` is a JSON path or line:col."""

    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}")
        self.where = where


@dataclass
class Scenario:
    name: str
    kind: str
    instance: Instance
    description: str = ""
    ad: AdSetting | None = None
    ad_outcomes: list | None = None
    bids: dict[str, BidProfile] = field(default_factory=dict)
    targets: dict[str, tuple[float, ...]] = field(default_factory=dict)
    simulation: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _num(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(where, f"expected a number, got {json.dumps(x)}")
    if not math.isfinite(x):
        raise ScenarioError(where, "non-finite number")
    return float(x)


def _vec(x, where, n=None):
    if not isinstance(x, list):
        raise ScenarioError(where, "expected a list of numbers")
    if n is not None and len(x) != n:
        raise ScenarioError(where, f"expected {n} entries, got {len(x)}")
    return [_num(v, f"{where}[{k}]") for k, v in enumerate(x)]


def _names(doc, key, n):
    if key not in doc:
        return None
    names = doc[key]
    if not isinstance(names, list) or not all(isinstance(s, str) for s in names) or len(names) != n:
        raise ScenarioError(f"$.{key}", f"expected {n} strings")
    return tuple(names)


def load_scenario_dict(doc: dict, source: str = "<dict>") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("$", "top level must be an object")
    ver = doc.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise ScenarioError("$.schema_version", f"unsupported schema version {ver!r} (expected {SCHEMA_VERSION})")
    kind = doc.get("kind", "explicit")
    name = doc.get("name", Path(source).stem)
    warnings: list[str] = []
    ad = outcomes = None
    if kind == "explicit":
        if "values" not in doc:
            raise ScenarioError("$.values", "missing values matrix")
        rows = doc["values"]
        if not isinstance(rows, list) or not rows:
            raise ScenarioError("$.values", "expected a non-empty list of rows")
        matrix = [_vec(r, f"$.values[{i}]") for i, r in enumerate(rows)]
        if len({len(r) for r in matrix}) != 1:
            raise ScenarioError("$.values", "rows have different lengths")
        report = validate_instance(matrix)
        if not report.valid:
            raise ScenarioError("$.values", "; ".join(report.errors))
        warnings += report.warnings
        n, m = len(matrix), len(matrix[0])
        instance = Instance(matrix, _names(doc, "bidders", n), _names(doc, "outcomes", m))
    elif kind == "ad":
        spec = doc.get("ad")
        if not isinstance(spec, dict):
            raise ScenarioError("$.ad", "missing ad setting object")
        try:
            ad = AdSetting(
                tuple(_vec(spec.get("slot_ctrs"), "$.ad.slot_ctrs")),
                tuple(_vec(spec.get("quality"), "$.ad.quality")),
                tuple(_vec(spec.get("values"), "$.ad.values")),
                None if spec.get("x") is None else tuple(_vec(spec["x"], "$.ad.x")),
                None if spec.get("pi") is None else tuple(_vec(spec["pi"], "$.ad.pi")))
        except AdSettingError as exc:
            raise ScenarioError("$.ad", str(exc)) from None
        try:
            instance, outcomes = to_explicit_instance(ad, int(spec.get("max_outcomes", 50_000)))
        except ValueError as exc:
            raise ScenarioError("$.ad", str(exc)) from None
        warnings += validate_instance(instance).warnings
        n, m = instance.num_bidders, instance.num_outcomes
    else:
        raise ScenarioError("$.kind", f"unknown kind {kind!r}; expected 'explicit' or 'ad'")

    bids = {}
    for key, entries in (doc.get("bids") or {}).items():
        where = f"$.bids.{key}"
        if not isinstance(entries, list) or len(entries) != n:
            raise ScenarioError(where, f"expected {n} bids")
        prof = []
        for i, b in enumerate(entries):
            if not isinstance(b, dict) or "x" not in b or "pi" not in b:
                raise ScenarioError(f"{where}[{i}]", "bid needs 'x' and 'pi'")
            x = _vec(b["x"], f"{where}[{i}].x", m)
            if any(v < 0 for v in x):
                raise ScenarioError(f"{where}[{i}].x", "nonnegativity violated")
            prof.append(Bid(x, _num(b["pi"], f"{where}[{i}].pi")))
        bids[key] = BidProfile(tuple(prof))

    targets = {}
    for key, vec in (doc.get("targets") or {}).items():
        t = _vec(vec, f"$.targets.{key}", n)
        if any(v < 0 for v in t):
            raise ScenarioError(f"$.targets.{key}", "utility-targets must be nonnegative")
        targets[key] = tuple(t)

    sim = dict(doc.get("simulation") or {})
    if sim:
        if "epsilon" in sim and not _num(sim["epsilon"], "$.simulation.epsilon") > 0:
            raise ScenarioError("$.simulation.epsilon", "must be positive")
        ax = sim.get("axioms")
        if ax is not None and AXIOM_ALIASES.get(ax, ax) not in AXIOM_SETS:
            raise ScenarioError("$.simulation.axioms", f"unknown axiom set {ax!r}")
        if sim.get("target") is not None and sim["target"] not in TARGETS:
            raise ScenarioError("$.simulation.target", f"unknown target {sim['target']!r}")
        init = sim.get("initial")
        if isinstance(init, list):
            _vec(init, "$.simulation.initial", n)
        elif init not in (None, "caps", "zeros"):
            raise ScenarioError("$.simulation.initial", "expected 'caps', 'zeros' or a list")

    return Scenario(name, kind, instance, doc.get("description", ""), ad, outcomes, bids, targets, sim, warnings)


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(str(path), f"cannot read file ({exc.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return load_scenario_dict(doc, str(path))
