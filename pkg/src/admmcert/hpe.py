"""Generic inexact proximal-point engine with a relative error condition.

The engine consumes a stream of candidate quadruples
``(lambda_k, z_tilde_k, z_k, eps_k, eta_k)`` produced by an iteration
oracle (the proximal ADMM adapter, or a test oracle), checks the per-step
error condition

    dw_{z_k}(z_tilde_k) + lambda_k eps_k + eta_k
        <= sigma * dw_{z_{k-1}}(z_tilde_k) + eta_{k-1},

maintains the ergodic aggregates, and evaluates the pointwise/ergodic
rate bounds of the framework. The engine validates quadruples but never
produces them; how to find them is the oracle's job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HpeQuadruple",
    "StepRecord",
    "HpeState",
    "RateParams",
    "step_residual",
    "pointwise_bound",
    "ergodic_bound",
]

#: inequalities pass when lhs <= rhs + INEQ_TOL * (1 + |lhs| + |rhs|)
INEQ_TOL = 1e-9


@dataclass
class HpeQuadruple:
    """One candidate step: stepsize, extragradient point, new point, errors."""

    lam: float
    z_tilde: object
    z_new: object
    eps: float
    eta_new: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.eps < 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")
        if self.eta_new < 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta_new}")


@dataclass
class StepRecord:
    """Per-step ledger entry: residual norm and error-condition sides."""

    k: int
    lam: float
    eps: float
    eta: float
    res_dual: float
    lhs: float
    rhs: float
    passed: bool
    dw_prev_tilde: float
    dw_new_tilde: float


def step_residual(w, z_prev, z_new, lam):
    """Residual r = (1/lambda) * grad dw_{z_new}(z_prev) = (1/lambda) Q(z_prev - z_new)."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return w.dist_grad(z_new, z_prev) * (1.0 / lam)


class HpeState:
    """Running state of one engine run (exclusively owned by that run).

    Parameters
    ----------
    w : QuadraticDGF
        Distance generating function (supplies dist / dist_grad / Q).
    z0 : point
        Initial point.
    eta0 : float
        Initial error budget (nonnegative).
    sigma : float
        Relative error factor in [0, 1].
    tol : float, optional
        Relative tolerance of the error-condition check.
    """

    def __init__(self, w, z0, eta0, sigma, tol=INEQ_TOL):
        if eta0 < 0:
            raise ValueError(f"eta0 must be nonnegative, got {eta0}")
        if not 0.0 <= sigma <= 1.0:
            raise ValueError(f"sigma must be in [0, 1], got {sigma}")
        self.w = w
        self.z0 = z0
        self.eta0 = float(eta0)
        self.sigma = float(sigma)
        self.tol = float(tol)
        self.z_prev = z0
        self.eta_prev = float(eta0)
        self.k = 0
        self.Lambda = 0.0
        self.sum_lambda_r = z0 * 0.0
        self.sum_lambda_ztilde = z0 * 0.0
        self.sum_lambda_inner = 0.0
        self.rho = 0.0
        self.records: list[StepRecord] = []
        self.certified = True

    # -- per-step operations -------------------------------------------------

    def validate_step(self, quad):
        """Evaluate the error condition for `quad` against the current state.

        Returns a dict with keys ``pass``, ``lhs``, ``rhs``; does not
        advance the state.
        """
        lhs = self.w.dist(quad.z_new, quad.z_tilde) + quad.lam * quad.eps + quad.eta_new
        rhs = self.sigma * self.w.dist(self.z_prev, quad.z_tilde) + self.eta_prev
        passed = lhs <= rhs + self.tol * (1.0 + abs(lhs) + abs(rhs))
        return {"pass": bool(passed), "lhs": lhs, "rhs": rhs}

    def accumulate(self, quad, r):
        """Fold an (already validated) step into the ergodic aggregates."""
        lam = quad.lam
        self.Lambda += lam
        self.sum_lambda_r = self.sum_lambda_r + lam * r
        self.sum_lambda_ztilde = self.sum_lambda_ztilde + lam * quad.z_tilde
        self.sum_lambda_inner += lam * (quad.eps + r.dot(quad.z_tilde))
        self.rho = max(self.rho, self.w.dist(self.z_prev, quad.z_tilde))

    def push(self, quad):
        """Validate, accumulate and advance by one step; returns the StepRecord."""
        d = self.z_prev - quad.z_new
        qd = self.w.Q.apply(d)
        inv_lam = 1.0 / quad.lam
        r = qd * inv_lam
        res_dual = math.sqrt(max(d.dot(qd), 0.0)) * inv_lam
        dw_new = self.w.dist(quad.z_new, quad.z_tilde)
        dw_prev = self.w.dist(self.z_prev, quad.z_tilde)
        lhs = dw_new + quad.lam * quad.eps + quad.eta_new
        rhs = self.sigma * dw_prev + self.eta_prev
        passed = lhs <= rhs + self.tol * (1.0 + abs(lhs) + abs(rhs))
        if not passed:
            self.certified = False
        # accumulate (regardless of pass/fail; failures are flagged)
        self.Lambda += quad.lam
        self.sum_lambda_r = self.sum_lambda_r + quad.lam * r
        self.sum_lambda_ztilde = self.sum_lambda_ztilde + quad.lam * quad.z_tilde
        self.sum_lambda_inner += quad.lam * (quad.eps + r.dot(quad.z_tilde))
        self.rho = max(self.rho, dw_prev)
        self.k += 1
        rec = StepRecord(
            k=self.k,
            lam=quad.lam,
            eps=quad.eps,
            eta=quad.eta_new,
            res_dual=res_dual,
            lhs=lhs,
            rhs=rhs,
            passed=bool(passed),
            dw_prev_tilde=dw_prev,
            dw_new_tilde=dw_new,
        )
        self.records.append(rec)
        self.z_prev = quad.z_new
        self.eta_prev = quad.eta_new
        return rec

    # -- ergodic readouts ------------------------------------------------------

    def _require_steps(self):
        if self.Lambda <= 0.0:
            raise ValueError("no accepted steps: ergodic quantities undefined")

    @property
    def z_tilde_avg(self):
        self._require_steps()
        return self.sum_lambda_ztilde / self.Lambda

    @property
    def r_avg(self):
        self._require_steps()
        return self.sum_lambda_r / self.Lambda

    @property
    def eps_avg(self):
        # sum lambda_i (eps_i + <r_i, z~_i>)/Lambda - <r_avg, z~_avg>, identical to
        # the definition with z~_i - z~_avg inside but single-pass
        self._require_steps()
        return self.sum_lambda_inner / self.Lambda - self.r_avg.dot(self.z_tilde_avg)


@dataclass
class RateParams:
    """Inputs of the rate bounds.

    ``dw0`` is an upper estimate of the initial Bregman distance to the
    solution set (evaluated at a computed reference solution); every
    bound is monotone increasing in ``dw0``, so certified bounds remain
    valid.
    """

    dw0: float
    eta0: float
    sigma: float
    m: float = 1.0
    M: float = 1.0
    diameter: float | None = None

    def __post_init__(self):
        if self.dw0 < 0 or self.eta0 < 0:
            raise ValueError("dw0 and eta0 must be nonnegative")
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma must be in [0, 1], got {self.sigma}")
        if not 0 < self.m <= self.M:
            raise ValueError("require 0 < m <= M")


def pointwise_bound(params, lambdas, t, i):
    """Pointwise bounds on (||r_i||*, eps_i) valid for the best index i <= k.

    For any real t, some i <= k satisfies both
    ``r_bound = (2M/sqrt(m)) * sqrt(A/(1-sigma) * lambda_i^(t-2)/sum_j lambda_j^t)``
    and ``eps_bound = A/(1-sigma) * lambda_i^(t-1)/sum_j lambda_j^t`` with
    A = (1+sigma) dw0 + 2 eta0. t=1 and t=2 give the two standard
    specializations. Requires sigma < 1. `i` is a 0-based index.
    """
    if params.sigma >= 1.0:
        raise ValueError("pointwise bound undefined for sigma >= 1")
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise ValueError("lambdas must be nonempty")
    if np.any(lambdas <= 0):
        raise ValueError("lambdas must be positive")
    lam_i = float(lambdas[i])
    denom = float(np.sum(lambdas ** t))
    A = (1.0 + params.sigma) * params.dw0 + 2.0 * params.eta0
    scale = A / (1.0 - params.sigma)
    r_bound = (2.0 * params.M / math.sqrt(params.m)) * math.sqrt(
        scale * lam_i ** (t - 2.0) / denom
    )
    eps_bound = scale * lam_i ** (t - 1.0) / denom
    return {"r_bound": r_bound, "eps_bound": eps_bound}


def ergodic_bound(params, state):
    """Ergodic bounds on (||r_avg||*, eps_avg) after the steps recorded in `state`.

    Uses the observed running maximum rho of dw_{z_{k-1}}(z_tilde_k). When
    sigma < 1 the a-priori cap rho <= (dw0 + eta0)/(1 - sigma) is also
    reported; when a domain diameter D is supplied, so is the cap
    (2M/m)(dw0 + eta0 + D). The bounds themselves hold for every sigma in
    [0, 1] - at sigma = 1 they stay finite through the observed rho.
    """
    if state.Lambda <= 0.0:
        raise ValueError("no steps accumulated: ergodic bound undefined")
    base = params.dw0 + params.eta0
    rho = state.rho
    r_bound = 2.0 * math.sqrt(2.0) * params.M * math.sqrt(base) / (
        math.sqrt(params.m) * state.Lambda
    )
    eps_bound = (3.0 * params.M / params.m) * (3.0 * base + params.sigma * rho) / state.Lambda
    out = {"r_bound": r_bound, "eps_bound": eps_bound, "rho_used": rho}
    if params.sigma < 1.0:
        out["rho_cap_sigma"] = base / (1.0 - params.sigma)
    if params.diameter is not None:
        out["rho_cap_diameter"] = (2.0 * params.M / params.m) * (base + params.diameter)
    return out
