"""Sequence files in, deterministic reports out."""

from __future__ import annotations

import csv
import io
import json
import logging
from pathlib import Path
from typing import Optional, Union

from .errors import GroupMismatch, InvalidParams, SchemaError, UnknownLabel
from .groups import GroupSpec, GroupTable, build_group
from .sequences import Sequence

log = logging.getLogger(__name__)

FORMATS = ("json", "csv", "text")


def _term_element(G: GroupTable, term: dict) -> int:
    if "label" in term:
        try:
            return G.element(str(term["label"]))
        except KeyError:
            raise UnknownLabel(f"unknown element label {term['label']!r}") from None
    e, k = term.get("e"), term.get("k", 0)
    if e not in ("y", "x", "xy") or isinstance(k, bool) or not isinstance(k, int):
        raise UnknownLabel(f"bad term {term!r}: need e in y/x/xy and an integer k")
    has_x = e != "y"
    N = G.cyclic_order
    if has_x and G.order == N:
        raise UnknownLabel(f"{G.spec} has no x")
    if not 0 <= k < N:
        log.warning("exponent %d reduced mod %d to %d", k, N, k % N)
    return G.y_x_element(has_x, k % N)


def parse_sequence(data: dict, group: Optional[GroupTable] = None) -> Sequence:
    """Validate a decoded sequence document and bind it to its group.

    ``group`` is the group the caller expects; a differing ``"group"`` field
    in the document raises GroupMismatch.
    """
    if not isinstance(data, dict) or not isinstance(data.get("terms"), list):
        raise SchemaError('sequence document needs a "terms" list')
    if "group" in data:
        try:
            spec = GroupSpec.from_json(data["group"])
        except (InvalidParams, AttributeError) as exc:
            raise SchemaError(f"bad group field: {exc}") from None
        if group is None:
            try:
                group = build_group(spec)
            except InvalidParams as exc:
                raise SchemaError(f"bad group field: {exc}") from None
        elif group.spec != spec:
            raise GroupMismatch(f"file is over {spec}, expected {group.spec}")
    elif group is None:
        raise SchemaError('no "group" field and no group given')
    mult = [0] * group.order
    for term in data["terms"]:
        if not isinstance(term, dict):
            raise SchemaError(f"term must be an object, got {term!r}")
        m = term.get("mult", 1)
        if isinstance(m, bool) or not isinstance(m, int) or m < 0:
            raise SchemaError(f"multiplicity must be a non-negative integer, got {m!r}")
        mult[_term_element(group, term)] += m
    return Sequence(group, mult)


def parse_sequence_file(path: Union[str, Path], group: Optional[GroupTable] = None) -> Sequence:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not JSON ({exc})") from None
    return parse_sequence(data, group)


def _scalars(report: dict, prefix: str = "") -> dict:
    flat = {}
    for key in sorted(report):
        value = report[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_scalars(value, name + "."))
        elif value is None or isinstance(value, (str, int, float, bool)):
            flat[name] = value
    return flat


def emit_report(report: dict, fmt: str = "json") -> str:
    """Serialize a report dict; equal inputs give byte-identical output."""
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    flat = _scalars(report)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
        writer.writeheader()
        writer.writerow(flat)
        return buf.getvalue()
    if fmt == "text":
        width = max((len(k) for k in flat), default=0)
        return "".join(f"{k.ljust(width)}  {v}\n" for k, v in flat.items())
    raise InvalidParams(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
