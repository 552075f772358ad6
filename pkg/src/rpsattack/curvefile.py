"""Read and write ``p,ent`` curve files (comma separated, LF line endings)."""

from __future__ import annotations

import os
from typing import Iterable, List, Tuple, Union

from .exact_analysis import IidCurve, SweepPoint

HEADER = "p,ent"

PathLike = Union[str, "os.PathLike[str]"]


class CurveParseError(ValueError):
    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def format_value(v: float) -> str:
    # repr gives the shortest string that round-trips a double exactly
    return repr(float(v))


def dumps_curve(points: Iterable[Tuple[float, float]]) -> str:
    lines = [HEADER]
    lines += [f"{format_value(p)},{format_value(e)}" for p, e in points]
    return "\n".join(lines) + "\n"


def write_curve(path: PathLike, points: Iterable) -> None:
    rows = [(pt.p, pt.entropy_per_round) if isinstance(pt, SweepPoint) else pt for pt in points]
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_curve(rows))


def parse_curve(text: str, path: str = "<string>") -> List[Tuple[float, float]]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].rstrip("\r") != HEADER:
        got = lines[0] if lines else ""
        raise CurveParseError(path, 1, f"expected header {HEADER!r}, got {got!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.rstrip("\r")
        fields = line.split(",")
        if len(fields) != 2:
            raise CurveParseError(path, lineno, f"expected 2 fields, got {len(fields)}")
        try:
            p, e = float(fields[0]), float(fields[1])
        except ValueError:
            raise CurveParseError(path, lineno, f"non-numeric value in {line!r}") from None
        if rows and not p > rows[-1][0]:
            raise CurveParseError(path, lineno, f"p must be strictly increasing ({rows[-1][0]} then {p})")
        rows.append((p, e))
    if len(rows) < 2:
        raise CurveParseError(path, len(lines), f"need at least 2 data rows, got {len(rows)}")
    return rows


def read_curve(path: PathLike) -> List[Tuple[float, float]]:
    with open(path, newline="") as fh:
        return parse_curve(fh.read(), str(path))


def read_iid_curve(path: PathLike) -> IidCurve:
    return IidCurve(tuple(read_curve(path)))
