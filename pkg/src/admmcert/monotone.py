"""Convex pieces with exact subdifferential oracles, and the KKT operator.

The separable objective is built from three closed-form piece classes:
quadratic, scaled l1 norm, and the zero function. Each piece knows how to
evaluate itself, select a subgradient, test eps-subdifferential
membership exactly, and measure the distance from a candidate to its
subdifferential. The KKT operator of the linearly constrained problem
    minimize f(y) + g(s)  subject to  C y + D s = c
is T(s, y, x) = (dg(s) - D*x, df(y) - C*x, C y + D s - c).
"""

from __future__ import annotations

import numpy as np

from .linalg import ProductVector, PsdOperator, as_vector

__all__ = [
    "ConvexPiece",
    "Quadratic",
    "L1",
    "Zero",
    "soft_threshold",
    "KktOperator",
    "kkt_distance",
    "enlargement_probe",
]


def soft_threshold(v, kappa):
    """Componentwise shrinkage: sign(v) * max(|v| - kappa, 0)."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


class ConvexPiece:
    """One separable block of the objective (proper closed convex)."""

    dim: int

    def value(self, v):
        raise NotImplementedError

    def subgrad(self, v):
        """One element of the subdifferential at v."""
        raise NotImplementedError

    def in_eps_subdiff(self, v, u, eps, tol=1e-12):
        """Exact test of u in the eps-subdifferential at v (up to tol)."""
        raise NotImplementedError

    def subdiff_distance(self, v, u):
        """Euclidean distance from u to the subdifferential at v."""
        raise NotImplementedError


class Quadratic(ConvexPiece):
    """(1/2)<Pv, v> + <q, v> with P positive semidefinite."""

    def __init__(self, P, q):
        self.P = P if isinstance(P, PsdOperator) else PsdOperator(P)
        self.q = as_vector(q, self.P.dim)
        self.dim = self.P.dim

    def value(self, v):
        v = as_vector(v, self.dim)
        return 0.5 * float(v @ (self.P.mat @ v)) + float(self.q @ v)

    def subgrad(self, v):
        return self.P.mat @ as_vector(v, self.dim) + self.q

    def in_eps_subdiff(self, v, u, eps, tol=1e-12):
        # u in d_eps f(v)  iff  u - q in Im(P) and (1/2)||u - Pv - q||_{P^+}^2 <= eps
        a = as_vector(u, self.dim) - self.subgrad(v)
        dual = self.P.dual_seminorm(a)
        if dual is None:
            return False
        return 0.5 * dual * dual <= eps + tol

    def subdiff_distance(self, v, u):
        return float(np.linalg.norm(as_vector(u, self.dim) - self.subgrad(v)))


class L1(ConvexPiece):
    """mu * ||v||_1 with mu > 0."""

    def __init__(self, mu, dim):
        mu = float(mu)
        if mu <= 0:
            raise ValueError(f"mu must be positive, got {mu}")
        self.mu = mu
        self.dim = int(dim)

    def value(self, v):
        return self.mu * float(np.sum(np.abs(as_vector(v, self.dim))))

    def subgrad(self, v):
        # sign selection: picks 0 at zero entries
        return self.mu * np.sign(as_vector(v, self.dim))

    def prox(self, v, t):
        """argmin_u mu*||u||_1 + (1/2t)||u - v||^2 = soft_threshold(v, t*mu)."""
        return soft_threshold(as_vector(v, self.dim), t * self.mu)

    def in_eps_subdiff(self, v, u, eps, tol=1e-12):
        # separable Fenchel gap: u must lie in the dual box [-mu, mu]^n and
        # sum_i (mu|v_i| - u_i v_i) <= eps
        v = as_vector(v, self.dim)
        u = as_vector(u, self.dim)
        if np.max(np.abs(u), initial=0.0) > self.mu + tol:
            return False
        gap = float(np.sum(self.mu * np.abs(v) - u * v))
        return gap <= eps + tol

    def subdiff_distance(self, v, u):
        v = as_vector(v, self.dim)
        u = as_vector(u, self.dim)
        on = v != 0.0
        d = np.zeros(self.dim)
        d[on] = u[on] - self.mu * np.sign(v[on])
        d[~on] = np.maximum(np.abs(u[~on]) - self.mu, 0.0)
        return float(np.linalg.norm(d))


class Zero(ConvexPiece):
    """The zero function; its (eps-)subdifferential is {0} everywhere."""

    def __init__(self, dim):
        self.dim = int(dim)

    def value(self, v):
        as_vector(v, self.dim)
        return 0.0

    def subgrad(self, v):
        as_vector(v, self.dim)
        return np.zeros(self.dim)

    def in_eps_subdiff(self, v, u, eps, tol=1e-12):
        as_vector(v, self.dim)
        return float(np.max(np.abs(as_vector(u, self.dim)), initial=0.0)) <= tol

    def subdiff_distance(self, v, u):
        as_vector(v, self.dim)
        return float(np.linalg.norm(as_vector(u, self.dim)))


def membership_slack_many(piece, V, U, eps, tol=1e-12):
    """Vectorized eps-subdifferential membership over row pairs.

    ``V``/``U`` are (k, n) arrays of points and candidate subgradients,
    ``eps`` a scalar or (k,) array. Returns ``(ok, slack)`` where
    ``slack[i] <= 0`` pinpoints by how much row i failed (domain failures
    get -inf for quadratic pieces).
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    eps = np.broadcast_to(np.asarray(eps, dtype=float), (V.shape[0],))
    if isinstance(piece, Quadratic):
        A = U - (V @ piece.P.mat + piece.q)
        val_sq, dom = piece.P.dual_sq_many(A)
        gap = 0.5 * val_sq
        slack = eps + tol - gap
        slack = np.where(dom, slack, -np.inf)
        return dom & (gap <= eps + tol), slack
    if isinstance(piece, L1):
        box_excess = np.max(np.abs(U), axis=1, initial=0.0) - piece.mu
        gap = np.sum(piece.mu * np.abs(V) - U * V, axis=1)
        ok = (box_excess <= tol) & (gap <= eps + tol)
        slack = np.minimum(eps + tol - gap, tol - box_excess)
        return ok, slack
    if isinstance(piece, Zero):
        dev = np.max(np.abs(U), axis=1, initial=0.0)
        return dev <= tol, tol - dev
    raise TypeError(f"no vectorized membership for {type(piece).__name__}")


class KktOperator:
    """KKT operator T(s, y, x) = (dg(s) - D*x, df(y) - C*x, Cy + Ds - c).

    `problem` must expose pieces f (on Y), g (on S), matrices C, D and the
    right-hand side c. The operator is set-valued through the f/g blocks;
    `select` returns the selection given by the pieces' `subgrad`.
    """

    def __init__(self, problem):
        self.problem = problem

    def select(self, z):
        p = self.problem
        dtx = p.D.T @ z.x
        ctx = p.C.T @ z.x
        return ProductVector(
            p.g.subgrad(z.s) - dtx,
            p.f.subgrad(z.y) - ctx,
            p.C @ z.y + p.D @ z.s - p.c,
        )


def kkt_distance(problem, z):
    """Distance from 0 to T(z): exact inclusion residual of a candidate solution."""
    dtx = problem.D.T @ z.x
    ctx = problem.C.T @ z.x
    r_s = problem.g.subdiff_distance(z.s, dtx)
    r_y = problem.f.subdiff_distance(z.y, ctx)
    r_x = float(np.linalg.norm(problem.C @ z.y + problem.D @ z.s - problem.c))
    return float(np.sqrt(r_s ** 2 + r_y ** 2 + r_x ** 2))


def enlargement_probe(T, v, vp, eps, n_samples, seed, anchors=()):
    """Necessary-condition test of vp in T^[eps](v) by graph sampling.

    Draws graph points (v1, v2) with v2 = T.select(v1), at the probe point
    itself, at the supplied anchors (trajectory points, reference
    solution), and at random perturbations of those on three length
    scales. Returns the worst value of <vp - v2, v - v1> + eps over the
    sample; a nonnegative result is consistent with membership (this is a
    sampled test, not a proof).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    rng = np.random.default_rng(seed)
    bases = [v, *anchors]
    scales = (1e-2, 1.0, 1e2)
    worst = np.inf
    samples = []
    for base in bases:
        samples.append(base)
    i = 0
    while len(samples) < len(bases) + int(n_samples):
        base = bases[i % len(bases)]
        scale = scales[(i // len(bases)) % len(scales)]
        samples.append(base + ProductVector.standard_normal(rng, base.dims, scale))
        i += 1
    for v1 in samples:
        v2 = T.select(v1)
        gap = (vp - v2).dot(v - v1) + eps
        worst = min(worst, gap)
    return float(worst)
