"""Information-geometric quantities of the embedded DPP model.

Coordinates: theta is indexed by the (cardinality, lex) subset order
(dimension d = 2^m - 1); u stacks the m singleton coordinates first and
the m(m-1)/2 pair coordinates after (dimension d' = m(m+1)/2). The
Jacobian B = d theta / d u has exact identity/zero blocks on the first
d' rows; only the block C of higher-layer rows against pair columns
needs finite differences. All u-driven quantities are evaluated on the
|rho| model (see UPoint.absolute), so they depend on (u1, u2) only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numdiff
from .embedding import ThetaPoint, loglinear_table, theta_from_u
from .errors import DegeneratePointError, DomainError
from .kernel import MarginalKernel, UPoint, _freeze, k_from_u, principal_minor_table
from .lattice import check_enumeration_capacity, subset_index

FISHER_MAX_M = 10
CROSS_MAX_M = 8
CURVATURE_MAX_M = 6

PSD_EIG_TOL = 1e-10
PINV_RTOL = 1e-10


@dataclass(frozen=True)
class FisherTheta:
    """Fisher information of the log-linear family in theta coordinates."""

    m: int
    matrix: np.ndarray


@dataclass(frozen=True)
class JacobianB:
    """d theta / d u with exact structural blocks; ``step_warnings`` lists pair
    columns whose finite-difference step had to shrink at the u2 < 0 boundary."""

    m: int
    matrix: np.ndarray
    mode: str
    step_warnings: tuple[int, ...] = ()


@dataclass(frozen=True)
class CrossBlockReport:
    """Quality-diversity Fisher cross block: published closed form vs proof-path value."""

    m: int
    claimed: np.ndarray
    ground_truth: np.ndarray
    discrepancy: np.ndarray
    max_abs_discrepancy: float


@dataclass(frozen=True)
class CurvatureTensor:
    """e-embedding curvature H[a, b, kappa] and its squared d' x d' matrix.

    Ancillary directions are Fisher-orthonormal, so the kappa metric is the
    identity and ``squared`` is sum_kappa H_k G_u^{-1} H_k^T.
    """

    m: int
    d_prime: int
    d: int
    H: np.ndarray
    squared: np.ndarray
    ancillary_basis: np.ndarray


def _check_fisher(m: int, mat: np.ndarray, what: str) -> np.ndarray:
    sym = np.max(np.abs(mat - mat.T)) if mat.size else 0.0
    if sym > 1e-12:
        raise DomainError(f"{what} asymmetric by {sym:.3e}")
    mat = (mat + mat.T) / 2.0
    if mat.size:
        w = np.linalg.eigvalsh(mat)
        norm = max(abs(w[0]), abs(w[-1]), 1e-300)
        if w[0] < -PSD_EIG_TOL * norm:
            raise DomainError(f"{what} not PSD: min eigenvalue {w[0]:.3e}")
    return _freeze(mat)


def inclusion_matrix(m: int) -> np.ndarray:
    """T[A, g] = 1 if subset at global position g is contained in bitmask A."""
    idx = subset_index(m)
    all_masks = np.arange(1 << m, dtype=np.int64)
    cols = [(all_masks & bits) == bits for bits in idx.masks]
    return np.column_stack(cols).astype(float)


def fisher_theta(theta: ThetaPoint) -> FisherTheta:
    """Covariance of the subset indicators under P_theta, by full enumeration."""
    check_enumeration_capacity(theta.m, cap=FISHER_MAX_M)
    p = loglinear_table(theta)
    t = inclusion_matrix(theta.m)
    mean = t.T @ p
    second = t.T @ (t * p[:, None])
    g = second - np.outer(mean, mean)
    return FisherTheta(theta.m, _check_fisher(theta.m, g, "Fisher(theta)"))


def fisher_theta_dpp(k: MarginalKernel) -> FisherTheta:
    """Fisher matrix at a DPP point from principal minors of the marginal kernel:
    g[I, J] = det K_{I∪J} - det K_I det K_J."""
    check_enumeration_capacity(k.m, cap=FISHER_MAX_M)
    idx = subset_index(k.m)
    dets = principal_minor_table(k.entries)
    masks = np.asarray(idx.masks, dtype=np.int64)
    detvec = dets[masks]
    g = dets[masks[:, None] | masks[None, :]] - np.outer(detvec, detvec)
    return FisherTheta(k.m, _check_fisher(k.m, g, "Fisher(theta) at DPP"))


def _require_interior(u: UPoint) -> None:
    if np.any(u.u2 >= 0.0):
        raise DomainError("u must be interior: every pair coordinate strictly negative")


def _theta_of_pair_coords(u: UPoint):
    """theta values as a function of the pair coordinates alone (u1 is fixed)."""

    def f(u2: np.ndarray) -> np.ndarray:
        return theta_from_u(UPoint(u.m, u.u1, u2, np.ones_like(u.signs))).values

    return f


def jacobian_B(u: UPoint, mode: str = "analytic-blocks+FD") -> JacobianB:
    """Jacobian of the embedding, d theta / d u, shape (2^m - 1, m(m+1)/2).

    The default mode sets the identity/zero blocks exactly and fills the
    higher-layer block C by Richardson-extrapolated central differences in
    the pair coordinates (step 1e-5 * max(1, |u2|), shrunk at the boundary).
    Mode "full-FD" differentiates every entry numerically; it exists to
    validate the structural blocks.
    """
    m = u.m
    check_enumeration_capacity(m)
    idx = subset_index(m)
    n2 = m * (m - 1) // 2
    d = idx.size
    d_prime = m + n2

    if mode == "full-FD":
        _require_interior(u)

        def f(coords: np.ndarray) -> np.ndarray:
            return theta_from_u(u.with_coords(coords).absolute()).values

        upper = [None] * m + [0.0] * n2
        mat = numdiff.jacobian(f, u.coords(), h=numdiff.DEFAULT_H1, upper=upper)
        return JacobianB(m, _freeze(mat), mode)

    if mode != "analytic-blocks+FD":
        raise DomainError(f"unknown jacobian mode {mode!r}")

    mat = np.zeros((d, d_prime))
    mat[:m, :m] = np.eye(m)
    if m >= 2:
        mat[idx.layer_slice(2), m:] = np.eye(n2)
    warnings: list[int] = []
    if m >= 3:
        _require_interior(u)
        f = _theta_of_pair_coords(u)
        pair_masks = list(idx.masks[idx.layer_slice(2)])
        high = slice(d_prime, d)
        for p in range(n2):
            h, shrunk = numdiff.step_size(u.u2, p, numdiff.DEFAULT_H1, upper=0.0)
            if shrunk:
                warnings.append(p)
            col = numdiff.first_partial(f, u.u2, p, h)[high]
            # theta^I depends on u2_p only when the pair is inside I
            pmask = pair_masks[p]
            for r, bits in enumerate(idx.masks[high]):
                if bits & pmask != pmask:
                    col[r] = 0.0
            mat[high, m + p] = col
    return JacobianB(m, _freeze(mat), mode, tuple(warnings))


def fisher_u(u: UPoint) -> np.ndarray:
    """Fisher information in u coordinates: B^T G_theta B (symmetric PSD, d' x d')."""
    check_enumeration_capacity(u.m, cap=FISHER_MAX_M)
    b = jacobian_B(u).matrix
    g_theta = fisher_theta_dpp(k_from_u(u.absolute())).matrix
    g = b.T @ g_theta @ b
    return _check_fisher(u.m, g, "Fisher(u)")


def fisher_u_cross_claimed(u: UPoint) -> CrossBlockReport:
    """Evaluate the published closed form for the (singleton, pair) Fisher block
    alongside the proof-path value (M_sp + M_sh C), with their discrepancy.

    The two disagree in general; the proof-path block is the one consistent
    with B^T G_theta B (see fisher_u), so it is reported as ground truth.
    """
    m = u.m
    check_enumeration_capacity(m, cap=CROSS_MAX_M)
    idx = subset_index(m)
    n2 = m * (m - 1) // 2
    d_prime = m + n2
    km = k_from_u(u.absolute())
    dets = principal_minor_table(km.entries)
    b = jacobian_B(u)
    c = b.matrix[d_prime:, m:]

    single_masks = np.asarray(idx.masks[:m], dtype=np.int64)
    pair_masks = np.asarray(idx.masks[idx.layer_slice(2)], dtype=np.int64)
    high_masks = np.asarray(idx.masks[d_prime:], dtype=np.int64)

    m_sp = dets[single_masks[:, None] | pair_masks[None, :]] - np.outer(
        dets[single_masks], dets[pair_masks]
    )
    if high_masks.size:
        m_sh = dets[single_masks[:, None] | high_masks[None, :]] - np.outer(
            dets[single_masks], dets[high_masks]
        )
        ground = m_sp + m_sh @ c
    else:
        ground = m_sp.copy()

    claimed = m_sp.copy()
    for p in range(n2):
        pmask = pair_masks[p]
        for r, bits in enumerate(high_masks):
            if bits & pmask == pmask:
                claimed[:, p] += dets[pmask] * (1.0 - dets[bits]) * c[r, p]

    disc = claimed - ground
    return CrossBlockReport(
        m,
        _freeze(claimed),
        _freeze(ground),
        _freeze(disc),
        float(np.max(np.abs(disc))) if disc.size else 0.0,
    )


def theta_second_derivatives(u: UPoint) -> np.ndarray:
    """d^2 theta^i / du^a du^b as an array (d, d', d').

    Rows for singletons and pairs are linear in u, and nothing depends on
    u1, so the only nonzero block is (higher rows) x (pair, pair); that
    block is filled by Richardson-extrapolated second-difference stencils.
    """
    m = u.m
    idx = subset_index(m)
    n2 = m * (m - 1) // 2
    d_prime = m + n2
    d = idx.size
    out = np.zeros((d, d_prime, d_prime))
    if m < 3:
        return out
    _require_interior(u)
    f = _theta_of_pair_coords(u)
    steps = [numdiff.step_size(u.u2, p, numdiff.DEFAULT_H2, upper=0.0)[0] for p in range(n2)]
    for p in range(n2):
        for q in range(p, n2):
            block = numdiff.second_partial(f, u.u2, p, q, steps[p], steps[q])[d_prime:]
            out[d_prime:, m + p, m + q] = block
            out[d_prime:, m + q, m + p] = block
    return out


def e_connection(u: UPoint) -> np.ndarray:
    """Exponential-connection coefficients in u coordinates,
    Gamma[a,b,c] = sum_ij (d B^i_b / d u^a) B^j_c g_ij(theta(u))."""
    check_enumeration_capacity(u.m, cap=CURVATURE_MAX_M)
    d2 = theta_second_derivatives(u)
    b = jacobian_B(u).matrix
    g_theta = fisher_theta_dpp(k_from_u(u.absolute())).matrix
    return np.einsum("iab,ic->abc", d2, g_theta @ b)


def eta_values(u: UPoint) -> np.ndarray:
    """Expectation coordinates at u: det K_I per global subset position."""
    idx = subset_index(u.m)
    dets = principal_minor_table(k_from_u(u.absolute()).entries)
    return dets[np.asarray(idx.masks, dtype=np.int64)]


def m_connection(u: UPoint) -> np.ndarray:
    """Mixture-connection coefficients in u coordinates,
    Gamma[a,b,c] = sum_ij (d B_ib / d u^a) B_jc g^ij(eta(u))."""
    m = u.m
    check_enumeration_capacity(m, cap=CURVATURE_MAX_M)
    _require_interior(u)
    idx = subset_index(m)
    n2 = m * (m - 1) // 2
    d_prime = m + n2
    masks = np.asarray(idx.masks, dtype=np.int64)

    def eta_of(coords: np.ndarray) -> np.ndarray:
        point = u.with_coords(coords).absolute()
        return principal_minor_table(k_from_u(point).entries)[masks]

    x = u.coords()
    upper = [None] * m + [0.0] * n2
    b_eta = numdiff.jacobian(eta_of, x, h=numdiff.DEFAULT_H1, upper=upper)
    steps = [numdiff.step_size(x, a, numdiff.DEFAULT_H2, upper[a])[0] for a in range(d_prime)]
    d2 = np.empty((idx.size, d_prime, d_prime))
    for a in range(d_prime):
        for bb in range(a, d_prime):
            blk = numdiff.second_partial(eta_of, x, a, bb, steps[a], steps[bb])
            d2[:, a, bb] = blk
            d2[:, bb, a] = blk
    g_theta = fisher_theta_dpp(k_from_u(u.absolute())).matrix
    ginv = pinv_psd(g_theta, what="Fisher(theta)")
    return np.einsum("iab,ic->abc", d2, ginv @ b_eta)


def pinv_psd(mat: np.ndarray, rtol: float = PINV_RTOL, what: str = "matrix") -> np.ndarray:
    """Inverse via eigendecomposition; eigenvalues below rtol*norm raise rather
    than being dropped silently."""
    w, v = np.linalg.eigh((mat + mat.T) / 2.0)
    norm = max(abs(w[0]), abs(w[-1]), 1e-300)
    bad = w <= rtol * norm
    if np.any(bad):
        raise DegeneratePointError(
            f"{what} is degenerate: {int(bad.sum())} eigenvalue(s) below {rtol:.1e} * norm"
        )
    return (v / w) @ v.T


def ancillary_basis(u: UPoint) -> np.ndarray:
    """Theta-tangent directions completing the embedding, shape (d, d - d').

    Columns A_k span the G_theta-orthogonal complement of the column span
    of B and are orthonormal in the Fisher metric: B^T G A = 0, A^T G A = I.
    """
    m = u.m
    check_enumeration_capacity(m, cap=FISHER_MAX_M)
    b = jacobian_B(u).matrix
    g_theta = fisher_theta_dpp(k_from_u(u.absolute())).matrix
    d, d_prime = b.shape
    if d == d_prime:
        return np.zeros((d, 0))
    btg = b.T @ g_theta
    _, s, vh = np.linalg.svd(btg)
    if s.size and s[-1] <= 1e-10 * s[0]:
        raise DegeneratePointError(
            f"B^T G_theta is rank-deficient (singular values {s[-1]:.3e} / {s[0]:.3e})"
        )
    q = vh[d_prime:].T
    w = q.T @ g_theta @ q
    try:
        chol = np.linalg.cholesky((w + w.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise DegeneratePointError("ancillary Gram matrix not positive definite") from exc
    return q @ np.linalg.inv(chol).T


def e_curvature(u: UPoint) -> CurvatureTensor:
    """e-embedding curvature H[a,b,kappa] = sum_i (d^2 theta^i/du^a du^b) (G_theta A_kappa)_i
    and its square in the Fisher metric of u."""
    m = u.m
    check_enumeration_capacity(m, cap=CURVATURE_MAX_M)
    idx = subset_index(m)
    d = idx.size
    d_prime = m * (m + 1) // 2
    basis = ancillary_basis(u)
    d2 = theta_second_derivatives(u)
    g_theta = fisher_theta_dpp(k_from_u(u.absolute())).matrix
    eta_v = g_theta @ basis
    h = np.einsum("iab,ik->abk", d2, eta_v)
    gu = fisher_u(u)
    ginv_u = pinv_psd(gu, what="Fisher(u)")
    squared = np.einsum("ack,cd,bdk->ab", h, ginv_u, h)
    squared = (squared + squared.T) / 2.0
    return CurvatureTensor(m, d_prime, d, _freeze(h), _freeze(squared), _freeze(basis))


def curvature_block_report(t: CurvatureTensor) -> str:
    """Human-readable summary of which curvature blocks vanish."""
    m = t.m
    n1 = m
    lines = [
        f"e-embedding curvature structure, m={m} "
        f"(d'={t.d_prime}, ancillary directions: {t.H.shape[2] if t.H.ndim == 3 else 0})"
    ]
    if t.H.size == 0:
        lines.append("model is an exponential family at this size: tensor is empty, square is 0")
        return "\n".join(lines)
    max_single_rows = float(np.max(np.abs(t.H[:n1, :, :])))
    lines.append(f"max |H[singleton, *, *]|            = {max_single_rows:.3e} (expected ~0)")
    sq = t.squared
    lines.append(f"max |[H]^2[singleton, singleton]|   = {float(np.max(np.abs(sq[:n1, :n1]))):.3e} (expected ~0)")
    lines.append(f"max |[H]^2[singleton, pair]|        = {float(np.max(np.abs(sq[:n1, n1:]))):.3e} (expected ~0)")
    pair_block = sq[n1:, n1:]
    lines.append(f"max |[H]^2[pair, pair]|             = {float(np.max(np.abs(pair_block))):.3e}")
    lines.append(f"largest eigenvalue of [H]^2         = {float(np.max(np.linalg.eigvalsh(sq))):.6e}")
    return "\n".join(lines)
