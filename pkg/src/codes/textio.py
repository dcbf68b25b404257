"""Plain-text check-matrix format for CSS codes.

One record per line::

    code color-d3 n=7 d=3
    X 0 1 2 3
    Z 0 1 2 3
    LX 0 1 5
    LZ 0 1 5

Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

from pathlib import Path

from src.codes.css import CssCode
from src.exceptions import CodeError

__all__ = ["dump_code", "format_code", "load_code", "parse_code"]


def format_code(code: CssCode) -> str:
    lines = [f"code {code.label or 'unnamed'} n={code.n} d={code.d}"]
    for prefix, supports in (
        ("X", code.x_supports()),
        ("Z", code.z_supports()),
        ("LX", [code.logical_x_support(i) for i in range(code.k)]),
        ("LZ", [code.logical_z_support(i) for i in range(code.k)]),
    ):
        lines.extend(f"{prefix} " + " ".join(map(str, support)) for support in supports)
    return "\n".join(lines) + "\n"


def parse_code(text: str) -> CssCode:
    header: dict[str, str] = {}
    records: dict[str, list[list[int]]] = {"X": [], "Z": [], "LX": [], "LZ": []}
    label = ""
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "code":
            label = rest[0] if rest else ""
            for item in rest[1:]:
                key, _, value = item.partition("=")
                header[key] = value
            continue
        if head not in records:
            raise CodeError(f"Line {number}: unknown record {head!r}")
        try:
            records[head].append([int(token) for token in rest])
        except ValueError:
            raise CodeError(f"Line {number}: qubit indices must be integers") from None

    try:
        n = int(header["n"])
        d = int(header.get("d", "0"))
    except (KeyError, ValueError):
        raise CodeError("Code header must declare n=<qubits>") from None
    if len(records["LX"]) != len(records["LZ"]):
        raise CodeError("Every logical X needs a paired logical Z")
    return CssCode.from_supports(
        n=n,
        d=d,
        x_checks=records["X"],
        z_checks=records["Z"],
        logical_x=records["LX"],
        logical_z=records["LZ"],
        label=label,
    )


def dump_code(code: CssCode, path: Path) -> None:
    path.write_text(format_code(code), encoding="utf-8")


def load_code(path: Path) -> CssCode:
    return parse_code(Path(path).read_text(encoding="utf-8"))
