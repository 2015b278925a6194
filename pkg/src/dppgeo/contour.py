"""Grid evaluation of the normalizer and the triple-interaction coefficient.

Rows come out row-major over (x, y) with an explicit "outside_domain"
marker wherever the point leaves the model (a pair coordinate above 0 or
a correlation matrix that loses positive definiteness); values are never
NaN. Fixed coordinates accept log(...) expressions so figure setups can
be typed directly.
"""

from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass

import numpy as np

from . import embedding, kernel
from .errors import DomainError, ShapeError
from .lattice import pair_order

QUANTITIES = ("psi", "theta123")

OUTSIDE = "outside_domain"


def parse_value(expr: str) -> float:
    """Evaluate a numeric expression restricted to arithmetic and log()."""
    expr = expr.strip().replace("^", "**")
    try:
        node = ast.parse(expr, mode="eval").body
    except SyntaxError as exc:
        raise ShapeError(f"cannot parse value {expr!r}") from exc

    def ev(n) -> float:
        if isinstance(n, ast.Constant) and isinstance(n.value, (int, float)):
            return float(n.value)
        if isinstance(n, ast.UnaryOp) and isinstance(n.op, (ast.USub, ast.UAdd)):
            v = ev(n.operand)
            return -v if isinstance(n.op, ast.USub) else v
        if isinstance(n, ast.BinOp) and isinstance(
            n.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
        ):
            a, b = ev(n.left), ev(n.right)
            if isinstance(n.op, ast.Add):
                return a + b
            if isinstance(n.op, ast.Sub):
                return a - b
            if isinstance(n.op, ast.Mult):
                return a * b
            if isinstance(n.op, ast.Div):
                return a / b
            return a**b
        if (
            isinstance(n, ast.Call)
            and isinstance(n.func, ast.Name)
            and n.func.id == "log"
            and len(n.args) == 1
        ):
            return math.log(ev(n.args[0]))
        raise ShapeError(f"unsupported expression {expr!r}")

    return ev(node)


_COORD_RE = re.compile(r"^u(\d+)(?:_(\d+))?$")


def coord_position(name: str, m: int) -> int:
    """Flat coordinate index of 'u3' (singleton) or 'u12' / 'u1_2' (pair).

    Without a separator, each element is read as one digit, so the compact
    pair form is only available for m <= 9.
    """
    match = _COORD_RE.match(name.strip())
    if not match:
        raise ShapeError(f"cannot parse coordinate name {name!r}")
    digits, second = match.groups()
    if second is not None:
        a, b = int(digits), int(second)
    elif len(digits) == 1:
        a, b = int(digits), None
    elif len(digits) == 2 and m <= 9:
        a, b = int(digits[0]), int(digits[1])
    else:
        raise ShapeError(f"ambiguous coordinate {name!r}; use uA_B for pairs when m > 9")
    if b is None:
        if not 1 <= a <= m:
            raise ShapeError(f"singleton coordinate {name!r} outside ground set 1..{m}")
        return a - 1
    lo, hi = min(a, b), max(a, b)
    if not (1 <= lo < hi <= m):
        raise ShapeError(f"pair coordinate {name!r} outside ground set 1..{m}")
    return m + pair_order(m).index((lo - 1, hi - 1))


def parse_fixed(spec: str, m: int) -> dict[int, float]:
    """Parse 'u3=-0.1,u12=log(1-0.25)' into {coordinate position: value}."""
    out: dict[int, float] = {}
    if not spec.strip():
        return out
    for item in spec.split(","):
        if "=" not in item:
            raise ShapeError(f"fixed entry {item!r} is not name=value")
        name, _, val = item.partition("=")
        out[coord_position(name, m)] = parse_value(val)
    return out


@dataclass(frozen=True)
class ContourSpec:
    m: int
    quantity: str
    vary: tuple[int, int]
    fixed: dict[int, float]
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ShapeError(f"quantity must be one of {QUANTITIES}")
        if self.vary[0] == self.vary[1]:
            raise ShapeError("the two varied coordinates must be distinct")
        if self.count < 2:
            raise ShapeError("grid needs at least 2 points per axis")
        if self.quantity == "theta123" and self.m != 3:
            raise ShapeError("theta123 grids require m = 3")


def _evaluator(spec: ContourSpec):
    m = spec.m
    n2 = m * (m - 1) // 2
    d_prime = m + n2

    needed = set(range(d_prime))
    if spec.quantity == "theta123":
        needed = set(range(m, d_prime))  # singletons are irrelevant
    missing = needed - set(spec.vary) - set(spec.fixed)
    if missing:
        raise ShapeError(
            f"coordinates at positions {sorted(missing)} are neither varied nor fixed"
        )

    base = np.zeros(d_prime)
    for pos, val in spec.fixed.items():
        base[pos] = val

    def at(x: float, y: float) -> float | None:
        coords = base.copy()
        coords[spec.vary[0]] = x
        coords[spec.vary[1]] = y
        u2 = coords[m:]
        if np.any(u2 > 0.0):
            return None
        try:
            if spec.quantity == "theta123":
                return embedding.theta123_m3(u2[0], u2[1], u2[2])
            point = kernel.UPoint(m, coords[:m], u2, np.ones(n2))
            kernel.l_from_u(point)  # positive-definiteness gate
            return embedding.psi(point)
        except DomainError:
            return None

    return at


def contour_grid(spec: ContourSpec) -> list[tuple[float, float, float | None]]:
    """Row-major (x, y, value) rows; value None marks an out-of-domain point."""
    at = _evaluator(spec)
    axis = np.linspace(spec.start, spec.stop, spec.count)
    rows: list[tuple[float, float, float | None]] = []
    for x in axis:
        for y in axis:
            rows.append((float(x), float(y), at(float(x), float(y))))
    if all(v is None for _, _, v in rows):
        raise DomainError("every grid point is outside the model domain")
    return rows


def rows_to_csv(rows: list[tuple[float, float, float | None]]) -> str:
    """CSV text with header u_x,u_y,value and 12-significant-digit floats."""
    lines = ["u_x,u_y,value"]
    for x, y, v in rows:
        cell = OUTSIDE if v is None else f"{v:.12g}"
        lines.append(f"{x:.12g},{y:.12g},{cell}")
    return "\n".join(lines) + "\n"
