"""Marginal-kernel side of the geometry: expectation coordinates, the mixed
parameterization, the Legendre transform of the normalizer, and KL divergence.

The expectation coordinate of every subset is a principal minor of the
marginal kernel, eta_I = det K_I, and for singletons it is also the
u1-gradient of the normalizer psi. Pairing (eta_1..eta_m) with the pair
coordinates u2 gives the mixed parameterization, inverted here with a
damped Newton method whose Hessian is available in closed form
(K_aa(1-K_aa) on the diagonal, -K_ab^2 off it).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numdiff
from .embedding import log_pmf_table, psi, theta_from_u
from .errors import ConvergenceError, DomainError, PreconditionError, ShapeError
from .kernel import (
    MarginalKernel,
    UPoint,
    _freeze,
    correlation_matrix,
    k_from_u,
    principal_minor_table,
)
from .lattice import check_enumeration_capacity, subset_index

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 100


@dataclass(frozen=True)
class EtaPoint:
    """Expectation coordinates det K_I for all nonempty I, (cardinality, lex) order."""

    m: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != ((1 << self.m) - 1,):
            raise ShapeError(f"eta must have length 2^m-1, got {v.shape}")
        if np.any(v <= 0.0) or np.any(v >= 1.0):
            raise DomainError("eta entries must lie strictly inside (0, 1)")
        object.__setattr__(self, "values", _freeze(v))


@dataclass(frozen=True)
class MixedPoint:
    """Mixed coordinates: singleton expectations eta1 with pair coordinates u2."""

    m: int
    eta1: np.ndarray
    u2: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        n2 = self.m * (self.m - 1) // 2
        eta1 = np.asarray(self.eta1, dtype=float)
        u2 = np.asarray(self.u2, dtype=float)
        signs = np.asarray(self.signs, dtype=float)
        if eta1.shape != (self.m,):
            raise ShapeError(f"eta1 must have length m={self.m}")
        if u2.shape != (n2,) or signs.shape != (n2,):
            raise ShapeError(f"u2 and signs must have length m(m-1)/2={n2}")
        if np.any(eta1 <= 0.0) or np.any(eta1 >= 1.0):
            raise DomainError("eta1 entries must lie strictly inside (0, 1)")
        if np.any(u2 > 0.0):
            raise DomainError("u2 entries must be <= 0")
        object.__setattr__(self, "eta1", _freeze(eta1))
        object.__setattr__(self, "u2", _freeze(u2))
        object.__setattr__(self, "signs", _freeze(signs))

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "eta1": self.eta1.tolist(),
            "u2": self.u2.tolist(),
            "signs": [int(s) for s in self.signs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MixedPoint":
        return cls(
            int(obj["m"]),
            np.asarray(obj["eta1"], dtype=float),
            np.asarray(obj["u2"], dtype=float),
            np.asarray(obj["signs"], dtype=float),
        )


def eta_from_k(k: MarginalKernel) -> EtaPoint:
    """All expectation coordinates of a marginal kernel: eta_I = det K_I."""
    check_enumeration_capacity(k.m)
    idx = subset_index(k.m)
    dets = principal_minor_table(k.entries)
    return EtaPoint(k.m, dets[np.asarray(idx.masks, dtype=np.int64)])


def grad_psi_u1(u: UPoint) -> np.ndarray:
    """u1-gradient of the normalizer: the diagonal of the marginal kernel."""
    return np.diag(k_from_u(u.absolute()).entries).copy()


def psi_grad_u2_fd(u: UPoint) -> np.ndarray:
    """Finite-difference d psi / d u2, exposed for inspection only.

    No identity is asserted for these components in general; for m=2 the
    single entry equals det K.
    """
    if u.m < 2:
        return np.zeros(0)

    def f(u2: np.ndarray) -> float:
        return psi(UPoint(u.m, u.u1, u2, np.ones_like(u.signs)))

    n2 = u.m * (u.m - 1) // 2
    out = np.empty(n2)
    for p in range(n2):
        h, _ = numdiff.step_size(u.u2, p, numdiff.DEFAULT_H1, upper=0.0)
        out[p] = numdiff.first_partial(f, u.u2, p, h)
    return out


def laplace_check_k11(u: UPoint) -> tuple[float, float, float]:
    """K_11 two ways: directly from K, and as 1 - e^{-u1_1} * cofactor_11 / det(R + D^{-2}).

    Returns (direct, cofactor_path, |difference|).
    """
    if u.m < 2:
        raise DomainError("the cofactor identity needs m >= 2")
    direct = float(k_from_u(u.absolute()).entries[0, 0])
    r = correlation_matrix(u.m, u.abs_rho())
    mat = r + np.diag(np.exp(-u.u1))
    minor = np.delete(np.delete(mat, 0, axis=0), 0, axis=1)
    cof11 = float(np.linalg.det(minor))
    via_cofactor = 1.0 - np.exp(-u.u1[0]) * cof11 / float(np.linalg.det(mat))
    return direct, via_cofactor, abs(direct - via_cofactor)


def mixed_from_u(u: UPoint) -> MixedPoint:
    """Mixed coordinates of u: singleton expectations plus the pair block."""
    return MixedPoint(u.m, grad_psi_u1(u), u.u2, u.signs)


def _k_of_u1(u1: np.ndarray, r: np.ndarray) -> np.ndarray:
    d = np.exp(u1 / 2.0)
    l = r * np.outer(d, d)
    k = np.linalg.solve(l + np.eye(len(u1)), l)
    return (k + k.T) / 2.0


def _u1_hessian(k: np.ndarray) -> np.ndarray:
    h = -(k**2)
    np.fill_diagonal(h, np.diag(k) * (1.0 - np.diag(k)))
    return h


def u_from_mixed(omega: MixedPoint, signs: np.ndarray | None = None) -> UPoint:
    """Invert the mixed parameterization by damped Newton on u1.

    Solves grad_u1 psi(u1; u2) = eta1 from the cold start u1 = 0, halving
    the step until the sup-norm residual decreases. The normalizer is
    strictly convex in u1 for fixed u2, so the solution is unique.
    """
    m = omega.m
    signs = omega.signs if signs is None else np.asarray(signs, dtype=float)
    probe = UPoint(m, np.zeros(m), omega.u2, np.ones_like(omega.signs))
    r = correlation_matrix(m, probe.abs_rho())
    w = np.linalg.eigvalsh(r)
    if w[0] <= 1e-12 * max(abs(w[-1]), 1e-300):
        raise DomainError("u2 outside model domain: |rho| matrix not positive definite")

    u1 = np.zeros(m)
    resid_norm = np.inf
    for _ in range(NEWTON_MAX_ITER):
        k = _k_of_u1(u1, r)
        resid = np.diag(k) - omega.eta1
        resid_norm = float(np.max(np.abs(resid)))
        if resid_norm < NEWTON_TOL:
            return UPoint(m, u1, omega.u2, signs)
        step = np.linalg.solve(_u1_hessian(k), -resid)
        t = 1.0
        while t > 1e-12:
            cand = u1 + t * step
            cand_norm = float(np.max(np.abs(np.diag(_k_of_u1(cand, r)) - omega.eta1)))
            if cand_norm < resid_norm:
                u1 = cand
                break
            t /= 2.0
        else:
            raise ConvergenceError(
                f"Newton stalled at residual {resid_norm:.3e}", residual=resid_norm
            )
    raise ConvergenceError(
        f"Newton did not reach {NEWTON_TOL} in {NEWTON_MAX_ITER} iterations "
        f"(residual {resid_norm:.3e})",
        residual=resid_norm,
    )


def legendre_psi_star(omega: MixedPoint) -> float:
    """Legendre transform of psi in u1 at fixed u2:
    max_u1 { <u1, eta1> - psi(u1; u2) }, attained at the Newton solution."""
    u_star = u_from_mixed(omega)
    return float(np.dot(u_star.u1, omega.eta1) - psi(u_star))


def kl_direct(u: UPoint, u_other: UPoint) -> float:
    """KL divergence by summation over the whole power set."""
    if u.m != u_other.m:
        raise ShapeError(f"ground sets differ: {u.m} != {u_other.m}")
    check_enumeration_capacity(u.m)
    lp = log_pmf_table(theta_from_u(u))
    lq = log_pmf_table(theta_from_u(u_other))
    return float(np.sum(np.exp(lp) * (lp - lq)))


def kl_legendre(u: UPoint, u_other: UPoint) -> float:
    """KL divergence via the Legendre form, valid when the pair blocks coincide:
    psi*(omega(u)) + psi(u_other) - <u_other1, eta1(u)>."""
    if u.m != u_other.m:
        raise ShapeError(f"ground sets differ: {u.m} != {u_other.m}")
    if not np.array_equal(u.u2, u_other.u2):
        raise PreconditionError("the Legendre KL form requires identical u2 blocks")
    if not np.array_equal(u.signs, u_other.signs):
        raise PreconditionError("the Legendre KL form requires identical sign patterns")
    omega = mixed_from_u(u)
    return float(
        legendre_psi_star(omega) + psi(u_other) - np.dot(u_other.u1, omega.eta1)
    )
