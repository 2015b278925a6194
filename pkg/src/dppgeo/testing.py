"""Seeded random model points and the cross-module invariant battery.

Random points are drawn on the nonnegative-correlation orbit by default
(Gram matrices of componentwise-positive vectors stay entrywise positive
and positive definite), which is the orbit on which the u-driven and
kernel-driven evaluation paths must agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import duality, embedding, geometry, kernel, lattice


def random_correlations(m: int, rng: np.random.Generator, scale: float = 0.7) -> np.ndarray:
    """Entrywise-nonnegative correlation matrix, PD by construction.

    A convex blend (1-s) I + s G of the identity with the normalized Gram
    matrix of |N(0,1)| vectors; off-diagonal entries land in [0, scale).
    """
    g = np.abs(rng.normal(size=(m, m + 3)))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    gram = g @ g.T
    return (1.0 - scale) * np.eye(m) + scale * gram


def random_u_point(
    m: int,
    rng: np.random.Generator,
    rho_scale: float = 0.7,
    u1_scale: float = 1.0,
) -> kernel.UPoint:
    """Random interior model point with nonnegative correlation signs."""
    r = random_correlations(m, rng, rho_scale)
    rho = kernel.pair_vector(m, r)
    rho = np.maximum(rho, 1e-4)  # keep the point interior (u2 strictly < 0)
    u1 = rng.uniform(-u1_scale, u1_scale, size=m)
    return kernel.UPoint(m, u1, np.log1p(-(rho**2)), np.ones(len(rho)))


def random_l_kernel(m: int, rng: np.random.Generator) -> kernel.LKernel:
    """Random positive-definite kernel with signed correlations."""
    a = rng.normal(size=(m, m + 2))
    l = a @ a.T + 0.25 * m * np.eye(m)
    return kernel.validate_l(l)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _max_err(fn: Callable[[np.random.Generator], float], rng, trials: int) -> float:
    return max(fn(rng) for _ in range(trials))


def run_selftest(m: int, trials: int, seed: int) -> list[CheckResult]:
    """Run the invariant battery at ground-set size m; returns one row per check."""
    lattice.check_enumeration_capacity(m)
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []

    def record(name: str, tol: float, worst: float):
        results.append(CheckResult(name, worst < tol, f"max err {worst:.3e} (tol {tol:.0e})"))

    # subset index round trip
    idx = lattice.subset_index(m)
    ok = all(
        idx.backward(*idx.forward(bits)[:2]).bits == bits for bits in idx.masks
    ) and sorted(idx.position(b) for b in idx.masks) == list(range(idx.size))
    results.append(CheckResult("lattice round trip", ok, f"{idx.size} subsets"))

    # kernel round trips and spectral duality
    def kernel_check(rng):
        l = random_l_kernel(m, rng)
        k = kernel.l_to_k(l)
        back = kernel.k_to_l(k)
        e1 = np.max(np.abs(back.entries - l.entries)) / np.max(np.abs(l.entries))
        ev_l = np.sort(np.linalg.eigvalsh(l.entries))
        ev_k = np.sort(np.linalg.eigvalsh(k.entries))
        e2 = np.max(np.abs(ev_k - ev_l / (1.0 + ev_l)))
        u = kernel.u_from_l(l)
        e3 = np.max(np.abs(kernel.l_from_u(u).entries - l.entries))
        return max(e1, e2, e3)

    record("kernel round trips + spectral map", 1e-9, _max_err(kernel_check, rng, trials))

    def pmf_check(rng):
        l = random_l_kernel(m, rng)
        table = kernel.pmf_table(l)
        e1 = abs(table.sum() - 1.0)
        k = kernel.l_to_k(l)
        t = geometry.inclusion_matrix(m)
        marg = t.T @ table
        eta = duality.eta_from_k(k).values
        return max(e1, float(np.max(np.abs(marg - eta))))

    record("pmf normalization + inclusion marginals", 1e-10, _max_err(pmf_check, rng, trials))

    def embed_check(rng):
        u = random_u_point(m, rng)
        l = kernel.l_from_u(u)
        th = embedding.theta_from_u(u)
        e1 = np.max(np.abs(embedding.loglinear_table(th) - kernel.pmf_table(l)))
        e2 = abs(embedding.psi(u) - kernel.log_normalizer(l))
        e3 = abs(embedding.psi(u) - embedding.phi(th))
        # telescoping: subset sums of theta reproduce log det L_I
        s = embedding.exponent_table(th)
        worst = 0.0
        dets = kernel.principal_minor_table(l.entries)
        for bits in idx.masks:
            worst = max(worst, abs(s[bits] - np.log(dets[bits])))
        return max(e1, e2, e3, worst)

    record("embedding round trip + telescoping", 1e-9, _max_err(embed_check, rng, trials))

    def duality_check(rng):
        u = random_u_point(m, rng)
        e1 = np.max(np.abs(duality.grad_psi_u1(u) - np.diag(kernel.k_from_u(u).entries)))
        lhs, rhs, diff = duality.laplace_check_k11(u) if m >= 2 else (0.0, 0.0, 0.0)
        om = duality.mixed_from_u(u)
        u_back = duality.u_from_mixed(om)
        e2 = np.max(np.abs(u_back.u1 - u.u1))
        return max(e1, diff, e2)

    record("duality: gradient, cofactor, mixed round trip", 1e-8, _max_err(duality_check, rng, trials))

    def kl_check(rng):
        u = random_u_point(m, rng)
        other = kernel.UPoint(
            m, u.u1 + rng.uniform(-0.5, 0.5, m), u.u2, u.signs
        )
        d1 = duality.kl_direct(u, other)
        d2 = duality.kl_legendre(u, other)
        return max(abs(d1 - d2), -min(d1, 0.0), -min(d2, 0.0))

    record("KL direct vs Legendre form", 1e-8, _max_err(kl_check, rng, trials))

    if m <= geometry.CURVATURE_MAX_M:

        def fisher_check(rng):
            u = random_u_point(m, rng)
            th = embedding.theta_from_u(u)
            g1 = geometry.fisher_theta(th).matrix
            g2 = geometry.fisher_theta_dpp(kernel.k_from_u(u)).matrix
            e1 = np.max(np.abs(g1 - g2))
            gu = geometry.fisher_u(u)
            k = kernel.k_from_u(u).entries
            block = -(k**2)
            np.fill_diagonal(block, np.diag(k) * (1.0 - np.diag(k)))
            e2 = np.max(np.abs(gu[:m, :m] - block))
            return max(e1, e2)

        record("Fisher: covariance vs minors, quality block", 1e-10, _max_err(fisher_check, rng, max(1, trials // 5)))

    if 3 <= m <= geometry.CURVATURE_MAX_M:

        def curvature_check(rng):
            u = random_u_point(m, rng)
            t = geometry.e_curvature(u)
            e1 = float(np.max(np.abs(t.H[:m, :, :])))
            e2 = float(np.max(np.abs(t.squared[:m, :])))
            return max(e1, e2)

        record("curvature: flat quality directions", 1e-6, _max_err(curvature_check, rng, max(1, trials // 10)))

    return results
