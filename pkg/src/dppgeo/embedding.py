"""Embedding of the DPP into the log-linear family over the subset lattice.

The model with coordinates u sits inside the 2^m - 1 dimensional family

    P_theta(A) = exp( sum_I theta^I * 1_{I ⊆ A} - phi(theta) ).

Singleton and pair coefficients are u1 and u2 verbatim; each higher
coefficient theta^I (|I| >= 3) is log det R_I minus everything already
contributed by the proper subsets of I with at least two elements, so
that the sums telescope to sum_{J ⊆ I} theta^J = log det L_I.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .kernel import UPoint, _freeze, correlation_matrix, logdet_pd
from .lattice import SubsetId, check_enumeration_capacity, subset_index


@dataclass(frozen=True)
class ThetaPoint:
    """Canonical coordinates of the log-linear family, (cardinality, lex) order."""

    m: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != ((1 << self.m) - 1,):
            raise ShapeError(
                f"theta must have length 2^m-1 = {(1 << self.m) - 1}, got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise DomainError("theta entries must be finite")
        object.__setattr__(self, "values", _freeze(v))

    def to_json(self) -> dict:
        return {"m": self.m, "theta": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "ThetaPoint":
        return cls(int(obj["m"]), np.asarray(obj["theta"], dtype=float))


def abs_correlation(u: UPoint) -> np.ndarray:
    """Unit-diagonal matrix of |rho| values determined by u2."""
    return correlation_matrix(u.m, u.abs_rho())


def theta_from_u(u: UPoint) -> ThetaPoint:
    """Embed u into the full canonical parameter.

    Layers are filled for k = 3..m in ascending order (lex within a layer);
    each entry reads only pair coordinates and finished lower layers. A
    nonpositive principal minor of the |rho| matrix means u left the model.
    """
    m = u.m
    check_enumeration_capacity(m)
    idx = subset_index(m)
    r_abs = abs_correlation(u)

    values = np.empty(idx.size)
    values[:m] = u.u1

    # per-mask contributions: 0 for singletons, u2 for pairs, theta for k >= 3
    contrib = np.zeros(1 << m)
    if m >= 2:
        pair_slice = idx.layer_slice(2)
        values[pair_slice] = u.u2
        for p, bits in enumerate(idx.masks[pair_slice]):
            contrib[bits] = u.u2[p]

    for k in range(3, m + 1):
        sl = idx.layer_slice(k)
        for g in range(sl.start, sl.stop):
            bits = idx.masks[g]
            rows = [i for i in range(m) if bits >> i & 1]
            ld = logdet_pd(r_abs[np.ix_(rows, rows)], f"principal minor of R for {rows}")
            # subtract contributions of all proper submasks (cardinality >= 2)
            acc = 0.0
            sub = (bits - 1) & bits
            while sub:
                acc += contrib[sub]
                sub = (sub - 1) & bits
            theta = ld - acc
            contrib[bits] = theta
            values[g] = theta
    return ThetaPoint(m, values)


def psi(u: UPoint) -> float:
    """Normalizer of the embedded model: sum(u1) + log det(R + D^{-2}) = log det(L+I)."""
    r_abs = abs_correlation(u)
    mat = r_abs + np.diag(np.exp(-u.u1))
    return float(np.sum(u.u1) + logdet_pd(mat, "R + D^-2"))


def exponent_table(theta: ThetaPoint) -> np.ndarray:
    """s(A) = sum_{I ⊆ A} theta^I for every bitmask A (subset-sum transform)."""
    m = theta.m
    check_enumeration_capacity(m)
    idx = subset_index(m)
    s = np.zeros(1 << m)
    for g, bits in enumerate(idx.masks):
        s[bits] = theta.values[g]
    for b in range(m):
        bit = 1 << b
        has = (np.arange(1 << m) & bit).astype(bool)
        s[has] += s[np.arange(1 << m)[has] ^ bit]
    return s


def phi(theta: ThetaPoint) -> float:
    """Log-partition over the power set, computed with a max-shifted log-sum-exp."""
    s = exponent_table(theta)
    mx = float(np.max(s))
    return mx + float(np.log(np.sum(np.exp(s - mx))))


def log_pmf_table(theta: ThetaPoint) -> np.ndarray:
    """log P_theta(A) for every bitmask A."""
    s = exponent_table(theta)
    mx = float(np.max(s))
    return s - (mx + np.log(np.sum(np.exp(s - mx))))


def loglinear_pmf(theta: ThetaPoint, a: SubsetId) -> float:
    """P_theta(A) = exp(s(A) - phi(theta))."""
    if a.m != theta.m:
        raise ShapeError(f"subset ground set {a.m} != theta ground set {theta.m}")
    return float(np.exp(log_pmf_table(theta)[a.bits]))


def loglinear_table(theta: ThetaPoint) -> np.ndarray:
    """P_theta(A) for every bitmask A (sums to 1)."""
    return np.exp(log_pmf_table(theta))


# -- closed forms for the smallest ground sets ------------------------------


def psi_m2(u1: float, u2: float, u12: float) -> float:
    """Two-item normalizer: u1 + u2 + log(e^u12 + e^-u1 + e^-u2 + e^-u1-u2)."""
    return u1 + u2 + np.log(np.exp(u12) + np.exp(-u1) + np.exp(-u2) + np.exp(-u1 - u2))


def k_closed_m2(u1: float, u2: float, u12: float) -> tuple[float, float, float]:
    """(K11, K22, det K) for m=2 as explicit rational functions of u."""
    z = np.exp(-u1) + np.exp(-u2) + np.exp(-u1 - u2) + np.exp(u12)
    k11 = (np.exp(-u2) + np.exp(u12)) / z
    k22 = (np.exp(-u1) + np.exp(u12)) / z
    detk = np.exp(u12) / z
    return float(k11), float(k22), float(detk)


def theta123_m3(u12: float, u13: float, u23: float) -> float:
    """Triple-interaction coefficient for m=3 in closed form.

    Equals log det R_{123} - u12 - u13 - u23 with |rho_ab| = sqrt(1 - e^{u_ab}).
    """
    p = (1.0 - np.exp(u12)) * (1.0 - np.exp(u13)) * (1.0 - np.exp(u23))
    arg = np.exp(u12) + np.exp(u13) + np.exp(u23) + 2.0 * np.sqrt(p) - 2.0
    if arg <= 0.0:
        raise DomainError("u outside model domain: det R_123 <= 0")
    return float(np.log(arg) - u12 - u13 - u23)


def psi_m3(u: UPoint) -> float:
    """Three-item normalizer in closed form (expansion of det(R + D^{-2}))."""
    if u.m != 3:
        raise ShapeError(f"psi_m3 requires m=3, got m={u.m}")
    a1, a2, a3 = np.exp(-u.u1)
    e12, e13, e23 = np.exp(u.u2)
    root = np.sqrt((1.0 - e12) * (1.0 - e13) * (1.0 - e23))
    arg = (
        (1.0 + a1) * (1.0 + a2) * (1.0 + a3)
        + 2.0 * root
        - (1.0 - e12) * (1.0 + a3)
        - (1.0 - e13) * (1.0 + a2)
        - (1.0 - e23) * (1.0 + a1)
    )
    if arg <= 0.0:
        raise DomainError("u outside model domain: det(R + D^-2) <= 0")
    return float(np.sum(u.u1) + np.log(arg))
