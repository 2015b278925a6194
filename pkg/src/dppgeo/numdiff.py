"""Central finite differences with one level of Richardson extrapolation.

Every routine takes f : R^n -> scalar or ndarray and differentiates with
respect to selected coordinates. The h-step estimate has O(h^2) error;
combining it with the h/2 estimate cancels that term, leaving O(h^4).
Steps can be shrunk to keep a coordinate strictly below an upper bound
(needed for the pair coordinates, which must stay negative).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

DEFAULT_H1 = 1e-5  # first derivatives
DEFAULT_H2 = 1e-3  # second derivatives (roundoff/truncation balance differs)


def step_size(
    x: np.ndarray,
    i: int,
    rel: float,
    upper: float | None = None,
) -> tuple[float, bool]:
    """Step for coordinate i: rel * max(1, |x_i|), shrunk to keep x_i + h < upper.

    Returns (h, shrunk_flag).
    """
    h = rel * max(1.0, abs(float(x[i])))
    shrunk = False
    if upper is not None and x[i] + h >= upper:
        h = 0.45 * (upper - float(x[i]))
        shrunk = True
        if h <= 0:
            raise ValueError(f"coordinate {i} is at or beyond the bound {upper}")
    return h, shrunk


def _shift(x: np.ndarray, i: int, delta: float) -> np.ndarray:
    y = np.array(x, dtype=float, copy=True)
    y[i] += delta
    return y


def first_partial(f: Callable, x, i: int, h: float) -> np.ndarray:
    """Richardson-extrapolated central difference d f / d x_i."""
    x = np.asarray(x, dtype=float)

    def central(step):
        return (np.asarray(f(_shift(x, i, step))) - np.asarray(f(_shift(x, i, -step)))) / (
            2.0 * step
        )

    d_h = central(h)
    d_h2 = central(h / 2.0)
    return (4.0 * d_h2 - d_h) / 3.0


def gradient(f: Callable, x, h: float = DEFAULT_H1, upper: Sequence[float | None] | None = None) -> np.ndarray:
    """Gradient of scalar f; ``upper`` optionally bounds each coordinate from above."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size)
    for i in range(x.size):
        hi, _ = step_size(x, i, h, None if upper is None else upper[i])
        out[i] = first_partial(f, x, i, hi)
    return out


def jacobian(f: Callable, x, h: float = DEFAULT_H1, upper: Sequence[float | None] | None = None) -> np.ndarray:
    """Jacobian of vector-valued f, shape (len(f(x)), len(x))."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        hi, _ = step_size(x, i, h, None if upper is None else upper[i])
        cols.append(first_partial(f, x, i, hi))
    return np.column_stack(cols)


def second_partial(f: Callable, x, i: int, j: int, hi: float, hj: float) -> np.ndarray:
    """Richardson-extrapolated d^2 f / dx_i dx_j (4-point stencil, 3-point on the diagonal)."""
    x = np.asarray(x, dtype=float)

    if i == j:

        def stencil(step):
            fp = np.asarray(f(_shift(x, i, step)))
            fm = np.asarray(f(_shift(x, i, -step)))
            f0 = np.asarray(f(x))
            return (fp - 2.0 * f0 + fm) / (step * step)

        s_h = stencil(hi)
        s_h2 = stencil(hi / 2.0)
        return (4.0 * s_h2 - s_h) / 3.0

    def stencil(si, sj):
        fpp = np.asarray(f(_shift(_shift(x, i, si), j, sj)))
        fpm = np.asarray(f(_shift(_shift(x, i, si), j, -sj)))
        fmp = np.asarray(f(_shift(_shift(x, i, -si), j, sj)))
        fmm = np.asarray(f(_shift(_shift(x, i, -si), j, -sj)))
        return (fpp - fpm - fmp + fmm) / (4.0 * si * sj)

    s_h = stencil(hi, hj)
    s_h2 = stencil(hi / 2.0, hj / 2.0)
    return (4.0 * s_h2 - s_h) / 3.0


def hessian(f: Callable, x, h: float = DEFAULT_H2, upper: Sequence[float | None] | None = None) -> np.ndarray:
    """Symmetric Hessian of scalar f by mixed central stencils."""
    x = np.asarray(x, dtype=float)
    n = x.size
    steps = [step_size(x, i, h, None if upper is None else upper[i])[0] for i in range(n)]
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            v = float(second_partial(f, x, i, j, steps[i], steps[j]))
            out[i, j] = v
            out[j, i] = v
    return out
