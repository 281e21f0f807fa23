"""File loading and byte-stable emission (JSON, YAML text, DOT)."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path as FsPath

import jsonschema
import yaml

from .errors import InputError
from .graph import DirectedMultigraph, DivisibilitySequence, Path


def load_document(path) -> dict:
    """Read a JSON or YAML document (YAML is a superset, so one parser covers both)."""
    text = FsPath(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InputError(f"{path}: cannot parse document: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a mapping at the top level")
    return doc


def load_graph(path) -> DirectedMultigraph:
    doc = load_document(path)
    if "vertices" not in doc or "edges" not in doc:
        raise InputError(f"{path}: graph documents need 'vertices' and 'edges'")
    return DirectedMultigraph.from_mapping(doc)


def load_sequence(path) -> DivisibilitySequence:
    doc = load_document(path)
    if "prefix" not in doc:
        raise InputError(f"{path}: sequence documents need 'prefix'")
    return DivisibilitySequence.from_mapping(doc)


def parse_path(g: DirectedMultigraph, name: str) -> Path:
    """Inverse of ``Path.name``: a vertex id, or edge ids joined by '.' with the last-walked edge first."""
    if g.has_vertex(name):
        return g.vertex_path(name)
    return g.path(list(reversed(name.split("."))))


def emit_report(value, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(value, sort_keys=True, indent=2) + "\n"
    if fmt == "text":
        return yaml.safe_dump(value, sort_keys=True, default_flow_style=False)
    raise InputError(f"format {fmt!r} is not available for this report")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(g: DirectedMultigraph, name: str = "E") -> str:
    lines = [f"digraph {_quote(name)} {{"]
    for v in g.vertices:
        lines.append(f"  {_quote(v)} [label={_quote(v)}];")
    for e in g.edges:
        lines.append(f"  {_quote(e.src)} -> {_quote(e.dst)} [label={_quote(e.id)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def load_schema(command: str) -> dict:
    text = resources.files("bdgraph").joinpath("schemas", f"{command}.json").read_text()
    return json.loads(text)


def validate_report(command: str, value) -> None:
    jsonschema.validate(value, load_schema(command))
