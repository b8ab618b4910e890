"""Deterministic on-disk formats shared by the pipeline stages.

All text artifacts are plain line-delimited records or small JSON documents.
Floats are pinned to 6 significant digits so that reruns with identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Iterator


def fmt_float(x: float) -> str:
    """Render a float with 6 significant digits (pipeline-wide pin)."""
    return format(float(x), ".6g")


def round6(x: float) -> float:
    return float(fmt_float(x))


def _round_tree(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        return round6(obj)
    if isinstance(obj, dict):
        return {k: _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v) for v in obj]
    return obj


def dump_json(obj: Any, path: Path) -> None:
    """Write a JSON document with sorted keys and rounded floats."""
    text = json.dumps(_round_tree(obj), sort_keys=True, indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")


def load_json(path: Path) -> Any:
    return json.loads(path.read_text(encoding="utf-8"))


def dump_jsonl(records: Iterable[dict], path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(_round_tree(rec), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def iter_jsonl(path: Path) -> Iterator[dict]:
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def load_jsonl(path: Path) -> list[dict]:
    return list(iter_jsonl(path))


def write_csv(path: Path, header: list[str], rows: Iterable[Iterable[Any]]) -> None:
    """CSV with unix newlines; floats formatted via fmt_float."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _cell(v: Any) -> Any:
    if isinstance(v, bool):
        return v
    if isinstance(v, float):
        return fmt_float(v)
    return v


def write_edge_list(path: Path, edges: dict[tuple[str, str], int]) -> None:
    """Edge list `u v weight`, one edge per line, sorted by endpoints."""
    with path.open("w", encoding="utf-8") as fh:
        for (u, v), w in sorted(edges.items()):
            fh.write(f"{u} {v} {w}\n")


def read_edge_list(path: Path) -> dict[tuple[str, str], int]:
    edges: dict[tuple[str, str], int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            u, v, w = line.split()
            edges[(u, v)] = int(w)
    return edges
