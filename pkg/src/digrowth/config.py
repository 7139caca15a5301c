"""YAML network files and the bundled example networks.

Schema::

    name: birds_source            # optional
    sites: [north, south]         # labels, or an integer count
    params: {s: -2.0}             # optional named constants
    seasons:
      - end_fraction: 1/2         # cumulative; the last one must be 1
        growth: [s, 1]            # numbers, fractions, or [-]param names
        links: ["north->south"]   # "from->to" or "from->to:weight"
        self_drain: [0, 0]        # optional, relaxed networks only

Link endpoints are site labels or 1-based indices.  ``params`` entries can be
overridden at load time, which is how the command line changes ``r`` and
``s`` without editing files.
"""

from __future__ import annotations

import os
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ValidationError
from .network import DynamicNetwork, SeasonLayer

FIXTURE_PACKAGE = "digrowth.fixtures"


def list_fixtures() -> list[str]:
    files = resources.files(FIXTURE_PACKAGE).iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".yaml"))


def _read_source(source) -> tuple[dict, str]:
    """Return the parsed document and a description of where it came from."""
    if isinstance(source, Mapping):
        return dict(source), "<mapping>"
    path = Path(source)
    if not path.exists() and str(source) in list_fixtures():
        text = resources.files(FIXTURE_PACKAGE).joinpath(f"{source}.yaml").read_text()
        return yaml.safe_load(text), f"fixture {source}"
    text = path.read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError([f"{path}: not valid YAML ({exc})"]) from None
    return doc, str(path)


def _number(value, params: Mapping[str, float], where: str, problems: list[str]) -> float:
    if isinstance(value, bool):
        problems.append(f"{where}: expected a number, got {value!r}")
        return float("nan")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        sign = 1.0
        if text.startswith("-") and text[1:].strip() in params:
            sign, text = -1.0, text[1:].strip()
        if text in params:
            return sign * float(params[text])
        try:
            return float(Fraction(text))
        except (ValueError, ZeroDivisionError):
            pass
    problems.append(f"{where}: cannot read {value!r} as a number or parameter")
    return float("nan")


def parse_network(doc: Mapping[str, Any], overrides: Mapping[str, float] | None = None) -> DynamicNetwork:
    """Build a network from a parsed YAML document.

    Raises:
        ValidationError: listing every malformed field.
    """
    problems: list[str] = []
    if not isinstance(doc, Mapping):
        raise ValidationError(["document: expected a mapping at top level"])
    params = {}
    for key, val in dict(doc.get("params") or {}).items():
        params[str(key)] = _number(val, {}, f"params.{key}", problems)
    for key, val in dict(overrides or {}).items():
        if key not in params:
            problems.append(f"override {key}: no such parameter (known: {sorted(params)})")
        else:
            params[key] = float(val)

    sites = doc.get("sites")
    if isinstance(sites, int) and not isinstance(sites, bool):
        names = [str(i + 1) for i in range(sites)]
    elif isinstance(sites, list) and sites:
        names = [str(x) for x in sites]
    else:
        raise ValidationError(problems + ["sites: expected a list of labels or a count"])
    n = len(names)

    def site(label, where):
        text = str(label).strip()
        if text in names:
            return names.index(text)
        if text.isdigit() and 1 <= int(text) <= n:
            return int(text) - 1
        problems.append(f"{where}: unknown site {label!r}")
        return -1

    seasons = doc.get("seasons")
    if not isinstance(seasons, list) or not seasons:
        raise ValidationError(problems + ["seasons: expected a non-empty list"])
    breakpoints = [0.0]
    layers = []
    for k, season in enumerate(seasons):
        tag = f"seasons[{k}]"
        if not isinstance(season, Mapping):
            problems.append(f"{tag}: expected a mapping")
            continue
        breakpoints.append(_number(season.get("end_fraction"), params, f"{tag}.end_fraction", problems))
        growth = season.get("growth")
        if not isinstance(growth, list):
            problems.append(f"{tag}.growth: expected a list")
            growth = []
        rates = [_number(g, params, f"{tag}.growth[{i}]", problems) for i, g in enumerate(growth)]
        links = []
        for spec in season.get("links") or []:
            where = f"{tag}.links {spec!r}"
            text = str(spec)
            weight = 1.0
            if ":" in text:
                text, wtext = text.rsplit(":", 1)
                weight = _number(wtext.strip(), params, where, problems)
            parts = text.replace("→", "->").split("->")
            if len(parts) != 2:
                problems.append(f"{where}: expected 'from->to[:weight]'")
                continue
            a, b = site(parts[0], where), site(parts[1], where)
            if a >= 0 and b >= 0:
                links.append((a, b, weight))
        drain = season.get("self_drain")
        if drain is not None:
            drain = tuple(_number(d, params, f"{tag}.self_drain[{i}]", problems) for i, d in enumerate(drain))
        layers.append(SeasonLayer(tuple(rates), tuple(links), drain))
    if problems:
        raise ValidationError(problems)
    return DynamicNetwork(n, tuple(breakpoints), tuple(layers), tuple(names))


def load_network(source, overrides: Mapping[str, float] | None = None) -> DynamicNetwork:
    """Load a network from a YAML path, a fixture name or a mapping."""
    doc, _ = _read_source(source)
    return parse_network(doc, overrides)


def load_params(source) -> dict[str, float]:
    """The ``params`` block of a network document, resolved to floats."""
    doc, _ = _read_source(source)
    problems: list[str] = []
    out = {str(k): _number(v, {}, f"params.{k}", problems) for k, v in dict(doc.get("params") or {}).items()}
    if problems:
        raise ValidationError(problems)
    return out


def network_to_dict(net: DynamicNetwork, name: str | None = None) -> dict:
    """Plain-data form of a network with every number written out."""
    doc: dict[str, Any] = {}
    if name:
        doc["name"] = name
    doc["sites"] = list(net.names)
    seasons = []
    for end, layer in zip(net.breakpoints[1:], net.layers):
        season: dict[str, Any] = {
            "end_fraction": float(end),
            "growth": [float(g) for g in layer.growth],
            "links": [
                f"{net.names[a]}->{net.names[b]}" + ("" if w == 1.0 else f":{w!r}")
                for a, b, w in layer.links
            ],
        }
        if any(layer.self_drain):
            season["self_drain"] = [float(a) for a in layer.self_drain]
        seasons.append(season)
    doc["seasons"] = seasons
    return doc


def dump_network(net: DynamicNetwork, name: str | None = None) -> str:
    """YAML text that :func:`load_network` reads back to an equal network."""
    return yaml.safe_dump(network_to_dict(net, name), sort_keys=False)


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        with open(tmp, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
