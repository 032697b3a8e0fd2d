"""Result tables: CSV with a ``#`` metadata header plus a JSON run summary."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .. import __version__
from .config import ExperimentConfig, parse_config


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


@dataclass
class ResultTable:
    """Rows under a declared column schema, with the config that produced them."""

    name: str
    columns: tuple[str, ...]
    config: ExperimentConfig
    rows: list[tuple] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add(self, **values) -> None:
        missing = set(self.columns) - set(values)
        extra = set(values) - set(self.columns)
        if missing or extra:
            raise ValueError(f"row mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        self.rows.append(tuple(values[c] for c in self.columns))

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]

    def header_lines(self) -> list[str]:
        lines = [f"decswitch {__version__}", f"table = {self.name}"]
        lines += [f"config: {line}" for line in self.config.to_lines()]
        return [f"# {line}" for line in lines]

    def body(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def to_csv(self) -> str:
        return "\n".join(self.header_lines()) + "\n" + self.body()

    def write(self, out_dir: str | Path, wall_time: float | None = None) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.name}.csv"
        json_path = out / f"{self.name}.json"
        csv_path.write_text(self.to_csv())
        summary = {
            "table": self.name,
            "version": __version__,
            "seed": self.config.seed,
            "config": dict(line.split(" = ", 1) for line in self.config.to_lines()),
            "wall_time_s": wall_time,
            "rows": len(self.rows),
            "headline": self.summary,
        }
        json_path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n")
        return csv_path, json_path


def _json_default(value):
    if hasattr(value, "item"):
        return value.item()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def read_table(path: str | Path) -> tuple[ExperimentConfig, list[str], list[list[str]]]:
    """Config echo, column names and raw rows of a written CSV."""
    text = Path(path).read_text()
    meta, body = [], []
    for line in text.splitlines(keepends=True):
        if line.startswith("# ") and not body:
            meta.append(line[2:].rstrip("\n"))
        else:
            body.append(line)
    cfg_text = "\n".join(m[len("config: ") :] for m in meta if m.startswith("config: "))
    rows = list(csv.reader(io.StringIO("".join(body))))
    return parse_config(cfg_text), rows[0], rows[1:]
