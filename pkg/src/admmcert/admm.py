"""Proximal ADMM for linearly constrained separable problems.

Solves  minimize f(y) + g(s)  subject to  C y + D s = c  by alternating
the two regularized subproblems and the multiplier update

    s_k  = argmin_s g(s) - <D*x_{k-1}, s> + (beta/2)||C y_{k-1} + D s - c||^2
                    + (1/2)||s - s_{k-1}||_H^2
    y_k  = argmin_y f(y) - <C*x_{k-1}, y> + (beta/2)||C y + D s_k - c||^2
                    + (1/2)||y - y_{k-1}||_G^2
    x_k  = x_{k-1} - theta*beta*(C y_k + D s_k - c)

with stepsize theta in (0, (1+sqrt(5))/2]. Each iteration is re-expressed
as one step of the inexact proximal-point engine in `hpe` through the
auxiliary multiplier x~_k = x_{k-1} - beta*(C y_{k-1} + D s_k - c): the
quadruple (lambda=1, z~_k=(s_k,y_k,x~_k), z_k=(s_k,y_k,x_k), eps=0,
eta_k) satisfies the engine's error condition with sigma = sigma_theta
under the product seminorm Q(s,y,x) = (Hs, (G+beta C*C)y, x/(beta*theta)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .bregman import QuadraticDGF
from .hpe import INEQ_TOL, HpeQuadruple, HpeState
from .linalg import ProductSeminormOp, ProductVector, PsdOperator, as_vector
from .monotone import ConvexPiece, KktOperator, L1, Quadratic, Zero, soft_threshold

__all__ = [
    "GOLDEN_STEPSIZE",
    "ConfigurationError",
    "sigma_theta",
    "tau_theta",
    "m_theta",
    "m_theta_props",
    "RateConstants",
    "ProblemSpec",
    "ProxParams",
    "product_operator",
    "ProxAdmm",
    "AdmmRun",
]

#: largest admissible stepsize, (1 + sqrt(5))/2
GOLDEN_STEPSIZE = (1.0 + math.sqrt(5.0)) / 2.0
_THETA_SLACK = 1e-12


class ConfigurationError(ValueError):
    """Problem/parameter combination outside the supported closed-form classes."""


def sigma_theta(theta):
    """Relative error factor sigma_theta of the stepsize theta.

    Closed form
    ``(3t^2-7t+5 + sqrt((3t^2-7t+5)^2 - 4(2-t)(3-t)(t-1)^2)) / (2(3-t))``,
    clamped to [0, 1] against roundoff at the endpoint. Equals 1/2 at
    theta=1 and 1 at the golden-ratio endpoint; always in (1/3, 1].
    """
    theta = float(theta)
    if not 0.0 < theta <= GOLDEN_STEPSIZE + _THETA_SLACK:
        raise ValueError(f"theta must be in (0, (1+sqrt(5))/2], got {theta}")
    a = 3.0 * theta * theta - 7.0 * theta + 5.0
    disc = a * a - 4.0 * (2.0 - theta) * (3.0 - theta) * (theta - 1.0) ** 2
    val = (a + math.sqrt(max(disc, 0.0))) / (2.0 * (3.0 - theta))
    return min(max(val, 0.0), 1.0)


def tau_theta(theta):
    """Initial error-budget factor 4*max(1/sqrt(t), sqrt(t)/(2-t)); pole at t=2."""
    theta = float(theta)
    if not 0.0 < theta < 2.0:
        raise ValueError(f"theta must be in (0, 2), got {theta}")
    rt = math.sqrt(theta)
    return 4.0 * max(1.0 / rt, rt / (2.0 - theta))


def m_theta(theta, sigma):
    """2x2 symmetric matrix whose PSD-ness certifies the per-step error condition."""
    theta = float(theta)
    sigma = float(sigma)
    off = (sigma + theta - 1.0) * (1.0 - theta)
    return np.array(
        [
            [sigma * (1.0 + theta) - 1.0, off],
            [off, sigma - (1.0 - theta) ** 2],
        ]
    )


def m_theta_props(theta, sigma):
    """Determinant and minimum eigenvalue of ``m_theta(theta, sigma)``."""
    mat = m_theta(theta, sigma)
    det = float(np.linalg.det(mat))
    min_eig = float(np.linalg.eigvalsh(mat)[0])
    return det, min_eig


@dataclass
class RateConstants:
    """Per-run closed-form constants: sigma_theta, tau_theta, d0 and eta0 = tau*d0.

    ``d0`` is the upper estimate of the initial distance to the solution
    set evaluated at a computed reference solution; all certified bounds
    are monotone increasing in d0, so they remain valid.
    """

    sigma_theta: float
    tau_theta: float
    d0: float
    eta0: float

    def __post_init__(self):
        if self.d0 < 0 or self.eta0 < 0:
            raise ValueError("d0 and eta0 must be nonnegative")

    @classmethod
    def for_run(cls, theta, d0):
        s, t = sigma_theta(theta), tau_theta(theta)
        return cls(sigma_theta=s, tau_theta=t, d0=float(d0), eta0=t * float(d0))


@dataclass
class ProblemSpec:
    """Problem data (f, g, C, D, c) of  min f(y) + g(s)  s.t.  C y + D s = c."""

    f: ConvexPiece
    g: ConvexPiece
    C: np.ndarray
    D: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.D = np.atleast_2d(np.asarray(self.D, dtype=float))
        self.c = as_vector(self.c)
        if not (np.all(np.isfinite(self.C)) and np.all(np.isfinite(self.D))):
            raise ValueError("constraint matrices have non-finite entries")
        if self.C.shape[0] != self.D.shape[0] or self.C.shape[0] != self.c.shape[0]:
            raise ValueError("row dimensions of C, D and c must agree")
        if self.f.dim != self.C.shape[1]:
            raise ValueError(f"f acts on dim {self.f.dim} but C has {self.C.shape[1]} columns")
        if self.g.dim != self.D.shape[1]:
            raise ValueError(f"g acts on dim {self.g.dim} but D has {self.D.shape[1]} columns")

    @property
    def n_s(self):
        return self.D.shape[1]

    @property
    def n_y(self):
        return self.C.shape[1]

    @property
    def n_x(self):
        return self.c.shape[0]

    @property
    def dims(self):
        return (self.n_s, self.n_y, self.n_x)

    def kkt(self):
        return KktOperator(self)

    def data_norm(self):
        return max(
            float(np.linalg.norm(self.C)),
            float(np.linalg.norm(self.D)),
            float(np.linalg.norm(self.c)),
            1.0,
        )


@dataclass
class ProxParams:
    """Penalty beta, stepsize theta and the proximal PSD operators H (on S), G (on Y)."""

    beta: float
    theta: float
    H: PsdOperator
    G: PsdOperator

    def __post_init__(self):
        self.beta = float(self.beta)
        self.theta = float(self.theta)
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0.0 < self.theta <= GOLDEN_STEPSIZE + _THETA_SLACK:
            raise ValueError(
                f"theta must be in (0, (1+sqrt(5))/2], got {self.theta}"
            )


def product_operator(problem, params):
    """The block operator Q(s,y,x) = (H s, (G + beta C*C) y, x/(beta*theta))."""
    Gc = PsdOperator(params.G.mat + params.beta * (problem.C.T @ problem.C))
    return ProductSeminormOp(params.H, Gc, 1.0 / (params.beta * params.theta), problem.n_x)


def _subproblem_solver(piece, M_quad, side):
    """Closed-form subproblem solver for one block.

    Quadratic/Zero piece: direct SPD solve with cached Cholesky factor of
    ``P + M_quad``. L1 piece: requires ``M_quad`` to be a positive
    multiple of the identity (linearized configuration) and returns the
    soft-threshold step. Anything else is rejected here, at construction.
    """
    if isinstance(piece, (Quadratic, Zero)):
        P = piece.P.mat if isinstance(piece, Quadratic) else 0.0
        q = piece.q if isinstance(piece, Quadratic) else np.zeros(piece.dim)
        A = P + M_quad
        try:
            factor = sla.cho_factor(A)
        except np.linalg.LinAlgError as exc:
            raise ConfigurationError(
                f"{side}-subproblem matrix is not positive definite: {exc}"
            ) from exc
        except sla.LinAlgError as exc:  # scipy raises its own
            raise ConfigurationError(
                f"{side}-subproblem matrix is not positive definite: {exc}"
            ) from exc

        def solve(rhs):
            return sla.cho_solve(factor, rhs - q, check_finite=False)

        return solve, A
    if isinstance(piece, L1):
        tau = float(np.trace(M_quad)) / piece.dim
        if tau <= 0 or np.max(np.abs(M_quad - tau * np.eye(piece.dim))) > 1e-10 * (1.0 + tau):
            raise ConfigurationError(
                f"{side}-subproblem with an l1 piece needs beta*A^T A + prox operator "
                "equal to a positive multiple of the identity (linearized setup)"
            )
        mu = piece.mu

        def solve(rhs):
            return soft_threshold(rhs, mu) / tau

        return solve, M_quad
    raise ConfigurationError(f"unsupported piece type {type(piece).__name__} on the {side} block")


class AdmmRun:
    """Trajectory and per-step ledger of one proximal ADMM run.

    Rows 0..k of ``S``, ``Y``, ``X`` hold the iterates (row 0 is the
    start), ``XT[k-1]`` holds x~_k, and the per-step arrays (res, eta,
    lhs, rhs, ...) are indexed by k-1. The embedded `HpeState` carries the
    ergodic aggregates and the error-condition ledger.
    """

    def __init__(self, problem, params, Q, w, engine, S, Y, X, XT, eta0):
        self.problem = problem
        self.params = params
        self.Q = Q
        self.w = w
        self.engine = engine
        self.S, self.Y, self.X, self.XT = S, Y, X, XT
        self.eta0 = eta0
        recs = engine.records
        self.n_iter = len(recs)
        self.res = np.array([r.res_dual for r in recs])
        self.eta = np.array([r.eta for r in recs])
        self.lhs = np.array([r.lhs for r in recs])
        self.rhs = np.array([r.rhs for r in recs])
        self.passed = np.array([r.passed for r in recs], dtype=bool)
        self.dw_prev_tilde = np.array([r.dw_prev_tilde for r in recs])
        self.dw_new_tilde = np.array([r.dw_new_tilde for r in recs])

    @property
    def theta(self):
        return self.params.theta

    @property
    def beta(self):
        return self.params.beta

    @property
    def sigma(self):
        return self.engine.sigma

    @property
    def certified(self):
        return bool(self.engine.certified)

    @property
    def z0(self):
        return ProductVector(self.S[0], self.Y[0], self.X[0])

    def z(self, k):
        return ProductVector(self.S[k], self.Y[k], self.X[k])

    def z_tilde(self, k):
        if k < 1:
            raise IndexError("z_tilde is defined for k >= 1")
        return ProductVector(self.S[k], self.Y[k], self.XT[k - 1])

    def quadruple(self, k):
        """Re-emit the engine quadruple of step k (1-based)."""
        return HpeQuadruple(
            lam=1.0,
            z_tilde=self.z_tilde(k),
            z_new=self.z(k),
            eps=0.0,
            eta_new=float(self.eta[k - 1]),
        )

    def deltas(self):
        """(dS, dY, dX) difference arrays, row k-1 = z_k - z_{k-1}."""
        return (
            np.diff(self.S, axis=0),
            np.diff(self.Y, axis=0),
            np.diff(self.X, axis=0),
        )


class ProxAdmm:
    """Proximal ADMM solver with a built-in per-step error-condition ledger.

    Construction validates that both subproblems fall in a supported
    closed-form class (direct SPD solve for quadratic pieces,
    soft-threshold for l1 pieces under a scaled-identity quadratic term)
    and caches the factorizations; `run` then iterates and streams every
    step through an `HpeState` with sigma = sigma_theta(theta).
    """

    def __init__(self, problem, params):
        if params.H.dim != problem.n_s:
            raise ConfigurationError(
                f"H acts on dim {params.H.dim}, expected n_s={problem.n_s}"
            )
        if params.G.dim != problem.n_y:
            raise ConfigurationError(
                f"G acts on dim {params.G.dim}, expected n_y={problem.n_y}"
            )
        self.problem = problem
        self.params = params
        beta, theta = params.beta, params.theta
        self.sigma = sigma_theta(theta)
        self.tau = tau_theta(theta)
        # per-step error budget eta_k = c_dx ||dx||^2 + c_dy ||dy||_G^2
        num_dx = self.sigma - (theta - 1.0) ** 2
        num_dy = self.sigma + theta - 1.0
        if num_dx < -1e-12 or num_dy < -1e-12:
            raise ConfigurationError(
                f"negative error-budget coefficient (sigma={self.sigma}, theta={theta})"
            )
        self._c_dx = max(num_dx, 0.0) / (2.0 * beta * theta ** 3)
        self._c_dy = max(num_dy, 0.0) / (2.0 * theta)

        C, D = problem.C, problem.D
        self.Q = product_operator(problem, params)
        self.w = QuadraticDGF(self.Q)
        self._solve_s, self._mat_s = _subproblem_solver(
            problem.g, beta * D.T @ D + params.H.mat, "s"
        )
        self._solve_y, self._mat_y = _subproblem_solver(
            problem.f, beta * C.T @ C + params.G.mat, "y"
        )
        # cached iteration-independent products
        self._Dt = np.ascontiguousarray(D.T)
        self._Ct = np.ascontiguousarray(C.T)
        self._bDtC = beta * D.T @ C
        self._bCtD = beta * C.T @ D
        self._bDtc = beta * (D.T @ problem.c)
        self._bCtc = beta * (C.T @ problem.c)
        self._Hm = params.H.mat
        self._Gm = params.G.mat

    def subproblem_matrices(self):
        """The quadratic-term matrices of the (s, y) subproblems."""
        return self._mat_s, self._mat_y

    def run(self, z0, eta0, max_iter, res_tol=None):
        """Iterate from `z0` with initial error budget `eta0` (= tau_theta * d0).

        Stops after `max_iter` steps or once the dual residual norm drops
        to `res_tol`. Returns an `AdmmRun`.
        """
        prob, params = self.problem, self.params
        beta, theta = params.beta, params.theta
        n_s, n_y, n_x = prob.dims
        if max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        s = as_vector(z0.s, n_s).copy()
        y = as_vector(z0.y, n_y).copy()
        x = as_vector(z0.x, n_x).copy()
        engine = HpeState(self.w, ProductVector(s, y, x), eta0, self.sigma)

        S = np.empty((max_iter + 1, n_s))
        Y = np.empty((max_iter + 1, n_y))
        X = np.empty((max_iter + 1, n_x))
        XT = np.empty((max_iter, n_x))
        S[0], Y[0], X[0] = s, y, x

        C, D, c = prob.C, prob.D, prob.c
        Cy = C @ y
        theta_beta = theta * beta
        n_done = 0
        for k in range(1, max_iter + 1):
            rhs_s = self._Dt @ x - self._bDtC @ y + self._bDtc + self._Hm @ s
            s1 = self._solve_s(rhs_s)
            Ds1 = D @ s1
            rhs_y = self._Ct @ x - self._bCtD @ s1 + self._bCtc + self._Gm @ y
            y1 = self._solve_y(rhs_y)
            Cy1 = C @ y1
            gap = Cy1 + Ds1 - c
            x1 = x - theta_beta * gap
            xt = x - beta * (Cy + Ds1 - c)

            dx = x1 - x
            dy = y1 - y
            eta = self._c_dx * float(dx @ dx) + self._c_dy * float(dy @ (self._Gm @ dy))
            rec = engine.push(
                HpeQuadruple(
                    lam=1.0,
                    z_tilde=ProductVector(s1, y1, xt),
                    z_new=ProductVector(s1, y1, x1),
                    eps=0.0,
                    eta_new=eta,
                )
            )
            S[k], Y[k], X[k], XT[k - 1] = s1, y1, x1, xt
            s, y, x, Cy = s1, y1, x1, Cy1
            n_done = k
            if res_tol is not None and rec.res_dual <= res_tol:
                break

        return AdmmRun(
            prob,
            params,
            self.Q,
            self.w,
            engine,
            S[: n_done + 1],
            Y[: n_done + 1],
            X[: n_done + 1],
            XT[:n_done],
            eta0,
        )
