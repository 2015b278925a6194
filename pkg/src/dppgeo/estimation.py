"""Maximum-likelihood fitting of the curved coordinates from observed subsets.

The average log-likelihood is ascended with a natural-gradient step
(Fisher-preconditioned score) and a backtracking line search, so the
accepted log-likelihood trace never decreases. The singleton block of
the preconditioner is the closed-form Hessian of the normalizer; the
rest comes from the full B^T G_theta B matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import exponent_table, psi, theta_from_u
from .errors import DomainError, ShapeError
from .geometry import FISHER_MAX_M, fisher_u, jacobian_B
from .kernel import UPoint, _freeze, k_from_u, principal_minor_table
from .lattice import SubsetId, check_enumeration_capacity, subset_index

U1_BOX = 30.0
U2_LO = -30.0
U2_HI = -1e-8


@dataclass(frozen=True)
class Dataset:
    """Observed subsets with aggregated multiplicities (keys are bitmasks)."""

    m: int
    counts: dict[int, int]

    def __post_init__(self):
        if not self.counts:
            raise DomainError("dataset must contain at least one observation")
        top = 1 << self.m
        for bits, c in self.counts.items():
            if not 0 <= bits < top:
                raise DomainError(f"observation mask {bits} outside ground set of size {self.m}")
            if c <= 0:
                raise DomainError("multiplicities must be positive")

    @classmethod
    def from_subsets(cls, observations: list[SubsetId]) -> "Dataset":
        if not observations:
            raise DomainError("dataset must contain at least one observation")
        m = observations[0].m
        counts: dict[int, int] = {}
        for s in observations:
            if s.m != m:
                raise ShapeError("observations mix ground-set sizes")
            counts[s.bits] = counts.get(s.bits, 0) + 1
        return cls(m, counts)

    @classmethod
    def from_masks(cls, m: int, masks) -> "Dataset":
        counts: dict[int, int] = {}
        for bits in np.asarray(masks, dtype=np.int64):
            counts[int(bits)] = counts.get(int(bits), 0) + 1
        return cls(m, counts)

    @property
    def n(self) -> int:
        return sum(self.counts.values())

    def mean_sufficient_stats(self) -> np.ndarray:
        """Empirical means of all subset indicators, (cardinality, lex) order."""
        idx = subset_index(self.m)
        masks = np.asarray(idx.masks, dtype=np.int64)
        out = np.zeros(idx.size)
        for bits, c in self.counts.items():
            out += c * ((masks & bits) == masks)
        return out / self.n

    def to_json(self) -> dict:
        obs = []
        for bits in sorted(self.counts):
            elems = SubsetId(bits, self.m).to_json()
            obs.extend([elems] * self.counts[bits])
        return {"m": self.m, "observations": obs}

    @classmethod
    def from_json(cls, obj: dict) -> "Dataset":
        m = int(obj["m"])
        subs = [SubsetId.from_elements(e, m) for e in obj["observations"]]
        return cls.from_subsets(subs)


@dataclass(frozen=True)
class FitResult:
    u_hat: UPoint
    loglik: float
    iterations: int
    grad_norm: float
    fisher_at_optimum: np.ndarray
    converged: bool
    boundary_trap: bool
    trace: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "u_hat": self.u_hat.to_json(),
            "loglik": self.loglik,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "fisher_at_optimum": self.fisher_at_optimum.tolist(),
            "converged": self.converged,
            "boundary_trap": self.boundary_trap,
            "trace": list(self.trace),
        }


def log_likelihood(u: UPoint, data: Dataset) -> float:
    """Total log-likelihood sum_A count(A) log P_u(A)."""
    if u.m != data.m:
        raise ShapeError(f"ground sets differ: {u.m} != {data.m}")
    check_enumeration_capacity(u.m)
    s = exponent_table(theta_from_u(u))
    total = sum(c * s[bits] for bits, c in data.counts.items())
    return float(total - data.n * psi(u))


def score_u(u: UPoint, data: Dataset) -> np.ndarray:
    """Average score (1/n) grad_u log-likelihood = B^T (mean T - eta).

    The singleton components reduce to empirical inclusion frequency minus
    the kernel diagonal, so they vanish exactly at moment matching.
    """
    if u.m != data.m:
        raise ShapeError(f"ground sets differ: {u.m} != {data.m}")
    idx = subset_index(u.m)
    tbar = data.mean_sufficient_stats()
    eta = principal_minor_table(k_from_u(u.absolute()).entries)[
        np.asarray(idx.masks, dtype=np.int64)
    ]
    b = jacobian_B(u).matrix
    return b.T @ (tbar - eta)


def _initial_point(data: Dataset) -> UPoint:
    """Moment start: logit of (clipped) empirical inclusion frequencies; mild u2."""
    m = data.m
    tbar = data.mean_sufficient_stats()
    p_hat = np.clip(tbar[:m], 1e-3, 1.0 - 1e-3)
    u1 = np.log(p_hat / (1.0 - p_hat))
    n2 = m * (m - 1) // 2
    return UPoint(m, u1, np.full(n2, -0.1), np.ones(n2))


def _clamp(coords: np.ndarray, m: int) -> np.ndarray:
    out = coords.copy()
    out[:m] = np.clip(out[:m], -U1_BOX, U1_BOX)
    out[m:] = np.clip(out[m:], U2_LO, U2_HI)
    return out


def fit_mle(
    data: Dataset,
    max_iter: int = 200,
    tol: float = 1e-8,
    init: UPoint | None = None,
) -> FitResult:
    """Natural-gradient ascent of the log-likelihood in u coordinates.

    Converged means the sup norm of the average score dropped below ``tol``.
    Coordinates are kept inside the box u1 in [-30, 30], u2 in [-30, -1e-8];
    ``boundary_trap`` reports a fit pinned against that box (a degenerate
    MLE, e.g. from a single observed subset).
    """
    m = data.m
    check_enumeration_capacity(m, cap=FISHER_MAX_M)
    u = _initial_point(data) if init is None else init
    u = u.with_coords(_clamp(u.coords(), m)).absolute()
    ll = log_likelihood(u, data)
    trace = [ll]
    converged = False
    grad_norm = np.inf
    iterations = 0

    for iterations in range(1, max_iter + 1):
        s = score_u(u, data)
        grad_norm = float(np.max(np.abs(s)))
        if grad_norm < tol:
            converged = True
            iterations -= 1
            break
        g = fisher_u(u)
        try:
            step = np.linalg.solve(g, s)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(g, s, rcond=1e-10)[0]
        t = 1.0
        accepted = False
        while t > 1e-12:
            cand = u.with_coords(_clamp(u.coords() + t * step, m))
            try:
                ll_cand = log_likelihood(cand, data)
            except DomainError:
                t /= 2.0
                continue
            if ll_cand >= ll:
                u, ll = cand, ll_cand
                accepted = True
                break
            t /= 2.0
        if not accepted:
            break
        trace.append(ll)
    else:
        iterations = max_iter

    coords = u.coords()
    at_box = (
        bool(np.any(np.abs(coords[:m]) >= U1_BOX - 1e-9))
        or bool(np.any(coords[m:] >= U2_HI - 1e-12))
        or bool(np.any(coords[m:] <= U2_LO + 1e-9))
    )
    # a score that vanishes only because a marginal saturated is still a trap
    kdiag = np.diag(k_from_u(u.absolute()).entries)
    at_box = at_box or bool(np.any(kdiag < 1e-6)) or bool(np.any(kdiag > 1.0 - 1e-6))
    return FitResult(
        u_hat=u,
        loglik=ll,
        iterations=iterations,
        grad_norm=grad_norm,
        fisher_at_optimum=_freeze(fisher_u(u)),
        converged=converged,
        boundary_trap=at_box,
        trace=tuple(trace),
    )
