"""DPP kernels and base probabilities.

An L-ensemble kernel L (symmetric positive definite) defines the point
process P(Y=A) = det(L_A)/det(L+I); the marginal kernel K = L(L+I)^-1
gives inclusion probabilities P(A ⊆ Y) = det(K_A). The diagonal scaling
L = DRD splits L into per-item weights d_a = sqrt(L_aa) and a unit-diagonal
correlation matrix R, from which the curved coordinates are

    u1_a  = log L_aa            (one per item),
    u2_ab = log(1 - rho_ab^2)   (one per pair, <= 0),

plus the recorded sign pattern of rho (u2 alone only determines |rho|).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CapacityError, DomainError, ShapeError
from .lattice import (
    MAX_KERNEL_M,
    SubsetId,
    check_enumeration_capacity,
    pair_order,
    subset_index,
)

SYM_TOL = 1e-10
PD_RTOL = 1e-12


def _as_square_sym(raw, what: str) -> np.ndarray:
    a = np.asarray(raw, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{what} must be a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ShapeError(f"{what} must be at least 1x1")
    if a.shape[0] > MAX_KERNEL_M:
        raise CapacityError(f"{what} of size {a.shape[0]} exceeds the kernel cap {MAX_KERNEL_M}")
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asym > SYM_TOL:
        raise ShapeError(f"{what} is asymmetric: max |A - A^T| = {asym:.3e} > {SYM_TOL}")
    return (a + a.T) / 2.0


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LKernel:
    """Validated L-ensemble kernel (symmetric positive definite)."""

    m: int
    entries: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.entries


@dataclass(frozen=True)
class MarginalKernel:
    """Validated marginal kernel (symmetric, eigenvalues strictly inside (0,1))."""

    m: int
    entries: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.entries


@dataclass(frozen=True)
class ScalingDecomposition:
    """Diagonal scaling L = DRD: d holds sqrt(L_aa), rho the pair correlations (lex order)."""

    m: int
    d: np.ndarray
    rho: np.ndarray

    def reconstruct(self) -> np.ndarray:
        r = correlation_matrix(self.m, self.rho)
        return r * np.outer(self.d, self.d)


@dataclass(frozen=True)
class UPoint:
    """Curved coordinates (u1, u2) plus the correlation sign pattern.

    u2 entries are log(1 - rho^2) <= 0; entry 0 means an uncorrelated pair
    (a boundary point admitted for convenience: the identity kernel lives
    there). Formulas driven by u alone see only |rho| = sqrt(1 - e^u2);
    ``signs`` records sign(rho) so the kernel is recoverable exactly.
    """

    m: int
    u1: np.ndarray
    u2: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        n2 = self.m * (self.m - 1) // 2
        u1 = np.asarray(self.u1, dtype=float)
        u2 = np.asarray(self.u2, dtype=float)
        signs = np.asarray(self.signs, dtype=float)
        if u1.shape != (self.m,):
            raise ShapeError(f"u1 must have length m={self.m}, got {u1.shape}")
        if u2.shape != (n2,):
            raise ShapeError(f"u2 must have length m(m-1)/2={n2}, got {u2.shape}")
        if signs.shape != (n2,):
            raise ShapeError(f"signs must have length m(m-1)/2={n2}, got {signs.shape}")
        if not np.all(np.isfinite(u1)) or not np.all(np.isfinite(u2)):
            raise DomainError("u coordinates must be finite")
        if np.any(u2 > 0.0):
            raise DomainError(f"u2 entries must be <= 0, got max {u2.max()}")
        if not np.all(np.isin(signs, (-1.0, 1.0))):
            raise DomainError("signs must be +1 or -1")
        object.__setattr__(self, "u1", _freeze(u1))
        object.__setattr__(self, "u2", _freeze(u2))
        object.__setattr__(self, "signs", _freeze(signs))

    @property
    def d_prime(self) -> int:
        """Dimension of the curved parameter: m + m(m-1)/2."""
        return self.m + self.m * (self.m - 1) // 2

    def coords(self) -> np.ndarray:
        """Concatenated (u1, u2) vector of length d_prime."""
        return np.concatenate([self.u1, self.u2])

    def absolute(self) -> "UPoint":
        """The same point with all correlation signs set to +1 (the |rho| convention)."""
        return replace(self, signs=np.ones_like(self.signs))

    def with_coords(self, coords: np.ndarray) -> "UPoint":
        """New point with (u1, u2) taken from a flat vector, signs kept."""
        coords = np.asarray(coords, dtype=float)
        return replace(self, u1=coords[: self.m], u2=coords[self.m :])

    def abs_rho(self) -> np.ndarray:
        """|rho| per pair: sqrt(1 - e^{u2})."""
        return np.sqrt(-np.expm1(self.u2))

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "u1": self.u1.tolist(),
            "u2": self.u2.tolist(),
            "signs": [int(s) for s in self.signs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "UPoint":
        return cls(
            int(obj["m"]),
            np.asarray(obj["u1"], dtype=float),
            np.asarray(obj["u2"], dtype=float),
            np.asarray(obj["signs"], dtype=float),
        )


def correlation_matrix(m: int, rho: np.ndarray) -> np.ndarray:
    """Unit-diagonal symmetric matrix from a lex-ordered pair vector."""
    r = np.eye(m)
    for p, (a, b) in enumerate(pair_order(m)):
        r[a, b] = r[b, a] = rho[p]
    return r


def pair_vector(m: int, mat: np.ndarray) -> np.ndarray:
    """Lex-ordered strict upper triangle of a symmetric matrix."""
    return np.array([mat[a, b] for a, b in pair_order(m)])


def validate_l(raw) -> LKernel:
    """Validate a raw matrix as an L-ensemble kernel (symmetric, positive definite)."""
    a = _as_square_sym(raw, "L kernel")
    w = np.linalg.eigvalsh(a)
    norm = max(abs(w[0]), abs(w[-1]))
    if w[0] <= PD_RTOL * max(norm, 1e-300):
        raise DomainError(
            f"L is not positive definite: min eigenvalue {w[0]:.3e} vs norm {norm:.3e}"
        )
    return LKernel(a.shape[0], _freeze(a))


def validate_k(raw) -> MarginalKernel:
    """Validate a raw matrix as a marginal kernel with eigenvalues in (0,1)."""
    a = _as_square_sym(raw, "K kernel")
    w = np.linalg.eigvalsh(a)
    if w[0] <= PD_RTOL:
        raise DomainError(f"K has an eigenvalue <= 0: {w[0]:.3e}")
    if w[-1] >= 1.0 - 1e-10:
        raise DomainError(
            f"not an L-ensemble: K has eigenvalue {w[-1]:.12f} >= 1 - 1e-10"
        )
    return MarginalKernel(a.shape[0], _freeze(a))


def l_to_k(l: LKernel) -> MarginalKernel:
    """Marginal kernel K = L (L + I)^{-1}; spectra map by lambda -> lambda/(1+lambda)."""
    a = l.entries
    k = np.linalg.solve(a + np.eye(l.m), a)
    k = (k + k.T) / 2.0
    return MarginalKernel(l.m, _freeze(k))


def k_to_l(k: MarginalKernel) -> LKernel:
    """L-ensemble kernel L = K (I - K)^{-1} (validated eigenvalues make this safe)."""
    a = k.entries
    l = np.linalg.solve(np.eye(k.m) - a, a)
    l = (l + l.T) / 2.0
    return validate_l(l)


def diagonal_scaling(l: LKernel) -> ScalingDecomposition:
    """Split L = DRD into weights d = sqrt(diag L) and pair correlations rho."""
    d = np.sqrt(np.diag(l.entries))
    r = l.entries / np.outer(d, d)
    return ScalingDecomposition(l.m, _freeze(d), _freeze(pair_vector(l.m, r)))


def u_from_l(l: LKernel) -> UPoint:
    """Curved coordinates of L: u1 = log diag L, u2 = log(1 - rho^2), signs = sign(rho)."""
    sc = diagonal_scaling(l)
    u1 = 2.0 * np.log(sc.d)
    rho2 = sc.rho**2
    if np.any(rho2 >= 1.0):
        raise DomainError("a correlation has |rho| >= 1; L cannot be positive definite")
    u2 = np.log1p(-rho2)
    signs = np.where(sc.rho >= 0.0, 1.0, -1.0)
    return UPoint(l.m, u1, u2, signs)


def l_from_u(u: UPoint) -> LKernel:
    """Kernel reconstruction D R D from (u1, u2, signs); validates positive definiteness."""
    rho = u.signs * u.abs_rho()
    r = correlation_matrix(u.m, rho)
    w = np.linalg.eigvalsh(r)
    if w[0] <= PD_RTOL * max(abs(w[-1]), 1e-300):
        raise DomainError(
            f"u outside model domain: reconstructed R has min eigenvalue {w[0]:.3e}"
        )
    d = np.exp(u.u1 / 2.0)
    return LKernel(u.m, _freeze(r * np.outer(d, d)))


def k_from_u(u: UPoint) -> MarginalKernel:
    """Marginal kernel of the reconstructed L."""
    return l_to_k(l_from_u(u))


def logdet_pd(a: np.ndarray, what: str = "matrix") -> float:
    """log det of a positive-definite matrix; DomainError if the sign is not +."""
    if a.shape[0] == 0:
        return 0.0
    sign, ld = np.linalg.slogdet(a)
    if sign <= 0:
        raise DomainError(f"{what} has nonpositive determinant")
    return float(ld)


def log_normalizer(l: LKernel) -> float:
    """log det(L + I)."""
    return logdet_pd(l.entries + np.eye(l.m), "L + I")


def pmf(l: LKernel, a: SubsetId) -> float:
    """P(Y = A) = det(L_A) / det(L + I), with det(L_[]) := 1."""
    if a.m != l.m:
        raise ShapeError(f"subset ground set {a.m} != kernel size {l.m}")
    idx = a.indices()
    sub = l.entries[np.ix_(idx, idx)]
    return float(np.exp(logdet_pd(sub, "principal minor of L") - log_normalizer(l)))


def pmf_table(l: LKernel) -> np.ndarray:
    """P(Y = A) for every bitmask A in ascending order (length 2^m)."""
    check_enumeration_capacity(l.m)
    logz = log_normalizer(l)
    out = np.empty(1 << l.m)
    out[0] = np.exp(-logz)
    for bits in range(1, 1 << l.m):
        idx = [i for i in range(l.m) if bits >> i & 1]
        sub = l.entries[np.ix_(idx, idx)]
        out[bits] = np.exp(logdet_pd(sub, "principal minor of L") - logz)
    return out


def inclusion_prob(k: MarginalKernel, a: SubsetId) -> float:
    """P(A ⊆ Y) = det(K_A); the empty set has probability 1."""
    if a.m != k.m:
        raise ShapeError(f"subset ground set {a.m} != kernel size {k.m}")
    idx = a.indices()
    if not idx:
        return 1.0
    sub = k.entries[np.ix_(idx, idx)]
    return float(np.linalg.det(sub))


def principal_minor_table(mat: np.ndarray) -> np.ndarray:
    """det of every principal submatrix, indexed by bitmask (det over [] is 1)."""
    m = mat.shape[0]
    out = np.empty(1 << m)
    out[0] = 1.0
    for bits in range(1, 1 << m):
        idx = [i for i in range(m) if bits >> i & 1]
        out[bits] = np.linalg.det(mat[np.ix_(idx, idx)])
    return out


def sample(l: LKernel, seed, n: int) -> list[SubsetId]:
    """n i.i.d. subsets by inverse-CDF over the enumerated pmf table.

    ``seed`` is an int or a numpy Generator; the draw is deterministic
    given the seed. Requires m <= 12 (the table has 2^m entries).
    """
    masks = sample_masks(l, seed, n)
    return [SubsetId(int(b), l.m) for b in masks]


def sample_masks(l: LKernel, seed, n: int) -> np.ndarray:
    """Like sample() but returns raw bitmasks (an int array of length n)."""
    if n < 0:
        raise DomainError(f"sample count must be >= 0, got {n}")
    check_enumeration_capacity(l.m)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    cdf = np.cumsum(pmf_table(l))
    cdf[-1] = 1.0
    u = rng.random(n)
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def kernel_to_json(obj: LKernel | MarginalKernel) -> dict:
    kind = "L" if isinstance(obj, LKernel) else "K"
    return {"m": obj.m, "matrix": obj.entries.tolist(), "kind": kind}


def kernel_from_json(doc: dict) -> LKernel | MarginalKernel:
    kind = doc.get("kind", "L")
    if kind == "L":
        return validate_l(doc["matrix"])
    if kind == "K":
        return validate_k(doc["matrix"])
    raise ShapeError(f"kernel kind must be 'L' or 'K', got {kind!r}")
