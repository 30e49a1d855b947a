"""Numerical certificates for a finished proximal ADMM run.

Each function turns one family of closed-form guarantees into per-k
pass/fail checks against the observed trajectory: the pointwise
residual bound (stepsize below the golden-ratio endpoint), the ergodic
residual/eps bounds (including the endpoint), and the battery of
per-iteration identities, inclusions and auxiliary inequalities the
analysis relies on.
"""

from __future__ import annotations

import numpy as np

from .admm import GOLDEN_STEPSIZE
from .hpe import INEQ_TOL
from .monotone import membership_slack_many
from .report import CertificateReport, CheckResult

__all__ = [
    "MEMBERSHIP_TOL",
    "pointwise_certificate",
    "ergodic_certificate",
    "lemma_battery",
    "error_condition_report",
]

#: tolerance of exact subdifferential membership checks
MEMBERSHIP_TOL = 1e-8
#: tolerance of algebraic identity checks (relative)
IDENTITY_TOL = 1e-10


def _ineq_check(name, lhs, rhs, k_lo=1, tol=INEQ_TOL, note=""):
    """Per-k check of lhs <= rhs with the standard relative tolerance."""
    lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    ok = lhs <= rhs + tol * (1.0 + np.abs(lhs) + np.abs(rhs))
    slack = rhs - lhs
    return CheckResult(
        name=name,
        passed=bool(np.all(ok)),
        worst_slack=float(np.min(slack)) if slack.size else 0.0,
        k_range=(k_lo, k_lo + lhs.shape[0] - 1) if lhs.size else None,
        note=note,
    )


def _identity_check(name, deviation_rows, scale, k_lo=1, tol=IDENTITY_TOL):
    """Per-k check that row norms of `deviation_rows` vanish up to tol*scale."""
    dev = np.linalg.norm(np.atleast_2d(deviation_rows), axis=1)
    ok = dev <= tol * scale
    return CheckResult(
        name=name,
        passed=bool(np.all(ok)),
        worst_slack=float(-np.max(dev)) if dev.size else 0.0,
        k_range=(k_lo, k_lo + dev.shape[0] - 1) if dev.size else None,
        note=f"max |deviation| vs tol {tol * scale:.2e}",
    )


def _membership_check(name, piece, V, U, eps, k_lo=1, tol=MEMBERSHIP_TOL):
    ok, slack = membership_slack_many(piece, V, U, eps, tol)
    return CheckResult(
        name=name,
        passed=bool(np.all(ok)),
        worst_slack=float(np.min(slack)) if slack.size else 0.0,
        k_range=(k_lo, k_lo + len(slack) - 1) if len(slack) else None,
    )


def _block_residuals(run):
    """Rowwise residual blocks r_{k,s} = H(s_{k-1}-s_k), r_{k,y} = Gc(y_{k-1}-y_k)."""
    dS, dY, _ = run.deltas()
    Hm = run.Q.H.mat
    Gcm = run.Q.Gc.mat
    return -(dS @ Hm), -(dY @ Gcm)


def _feasibility_identity(run, name="feasibility_gap_identity"):
    prob = run.problem
    lhs = (run.X[:-1] - run.X[1:]) / (run.beta * run.theta)
    rhs = run.Y[1:] @ prob.C.T + run.S[1:] @ prob.D.T - prob.c
    scale = 1.0 + np.max(np.abs(lhs), initial=0.0) + np.max(np.abs(rhs), initial=0.0)
    return _identity_check(name, lhs - rhs, scale)


def pointwise_certificate(run, consts):
    """Best-iterate residual bound and the exact per-iterate inclusion.

    Checks, for every k: min_{i<=k} ||r_i||* against
    ``2 sqrt(d0/k) sqrt((1+sigma+2tau)/(1-sigma))``, and that the residual
    triple (H ds_k, Gc dy_k, dx_k/(beta*theta)) lies in the KKT operator
    at (s_k, y_k, x~_k) via exact subdifferential membership. Only
    applicable for stepsizes below the golden-ratio endpoint (the bound
    has a 1/(1-sigma) factor); at the endpoint a NotApplicable report is
    returned.
    """
    if run.theta >= GOLDEN_STEPSIZE - 1e-9:
        return CertificateReport(
            name="pointwise",
            not_applicable=True,
            note="stepsize at the golden-ratio endpoint: pointwise bound not applicable",
        )
    K = run.n_iter
    k_arr = np.arange(1, K + 1, dtype=float)
    sig, tau, d0 = consts.sigma_theta, consts.tau_theta, consts.d0
    bound = 2.0 * np.sqrt(d0 / k_arr) * np.sqrt((1.0 + sig + 2.0 * tau) / (1.0 - sig))
    res_min = np.minimum.accumulate(run.res)

    RS, RY = _block_residuals(run)
    US = RS + run.XT @ run.problem.D
    UY = RY + run.XT @ run.problem.C
    checks = [
        _ineq_check("pointwise_residual_bound", res_min, bound),
        _membership_check("s_subgradient_inclusion", run.problem.g, run.S[1:], US, 0.0),
        _membership_check("y_subgradient_inclusion", run.problem.f, run.Y[1:], UY, 0.0),
        _feasibility_identity(run),
    ]
    return CertificateReport(
        name="pointwise",
        checks=checks,
        series={"res_pointwise": res_min, "bound_pointwise": bound},
    )


def ergodic_certificate(run, consts):
    """Ergodic residual/eps bounds and eps-subdifferential inclusions.

    Valid for every admissible stepsize including the golden-ratio
    endpoint. For each k the averaged iterates (1/k) sum_{i<=k} are formed
    and checked against ``2 sqrt(2(1+tau) d0)/k`` (residual) and
    ``3(1+tau)(3 theta^2 + 4 sigma (theta^2+theta+1)) d0/(theta^2 k)``
    (sum of the two eps values); the averaged residual uses the
    telescoped form (1/k) Q(z_0 - z_k). The averaged subgradients are
    tested for eps-subdifferential membership at the averaged points.
    """
    K = run.n_iter
    prob = run.problem
    k_arr = np.arange(1, K + 1, dtype=float)
    kcol = k_arr[:, None]
    sig, tau, d0 = consts.sigma_theta, consts.tau_theta, consts.d0
    theta, beta = run.theta, run.beta
    Hm, Gcm = run.Q.H.mat, run.Q.Gc.mat

    SA = np.cumsum(run.S[1:], axis=0) / kcol
    YA = np.cumsum(run.Y[1:], axis=0) / kcol
    XTA = np.cumsum(run.XT, axis=0) / kcol

    # telescoped averaged residual: (1/k) Q(z0 - z_k)
    Z0S = run.S[0][None, :] - run.S[1:]
    Z0Y = run.Y[0][None, :] - run.Y[1:]
    Z0X = run.X[0][None, :] - run.X[1:]
    HZ0S = Z0S @ Hm
    GZ0Y = Z0Y @ Gcm
    quad_rows = (
        np.einsum("ij,ij->i", HZ0S, Z0S)
        + np.einsum("ij,ij->i", GZ0Y, Z0Y)
        + np.einsum("ij,ij->i", Z0X, Z0X) / (beta * theta)
    )
    res_erg = np.sqrt(np.maximum(quad_rows, 0.0)) / k_arr
    bound_res = 2.0 * np.sqrt(2.0 * (1.0 + tau) * d0) / k_arr

    # eps_s(k) = (1/k) sum_i <r_{i,s}, s_i> - <rbar_s(k), sbar(k)>
    RS, RY = _block_residuals(run)
    eps_s = np.cumsum(np.einsum("ij,ij->i", RS, run.S[1:])) / k_arr - np.einsum(
        "ij,ij->i", HZ0S / kcol, SA
    )
    eps_y = np.cumsum(np.einsum("ij,ij->i", RY, run.Y[1:])) / k_arr - np.einsum(
        "ij,ij->i", GZ0Y / kcol, YA
    )
    eps_sum = eps_s + eps_y
    bound_eps = (
        3.0
        * (1.0 + tau)
        * (3.0 * theta ** 2 + 4.0 * sig * (theta ** 2 + theta + 1.0))
        * d0
        / (theta ** 2 * k_arr)
    )

    UAS = HZ0S / kcol + XTA @ prob.D
    UAY = GZ0Y / kcol + XTA @ prob.C
    gap_lhs = Z0X / (kcol * beta * theta)
    gap_rhs = YA @ prob.C.T + SA @ prob.D.T - prob.c
    scale = 1.0 + np.max(np.abs(gap_lhs), initial=0.0) + np.max(np.abs(gap_rhs), initial=0.0)

    eps_floor = CheckResult(
        name="ergodic_eps_nonneg",
        passed=bool(np.all(eps_sum >= -1e-9)),
        worst_slack=float(np.min(eps_sum)) if eps_sum.size else 0.0,
        k_range=(1, K),
        note="eps_s + eps_y >= -1e-9",
    )
    checks = [
        _ineq_check("ergodic_residual_bound", res_erg, bound_res),
        _ineq_check("ergodic_eps_bound", eps_sum, bound_eps),
        eps_floor,
        _membership_check("ergodic_s_inclusion", prob.g, SA, UAS, eps_s),
        _membership_check("ergodic_y_inclusion", prob.f, YA, UAY, eps_y),
        _identity_check("ergodic_feasibility_identity", gap_lhs - gap_rhs, scale),
    ]
    return CertificateReport(
        name="ergodic",
        checks=checks,
        series={
            "res_ergodic": res_erg,
            "bound_ergodic_res": bound_res,
            "eps_a_s": eps_s,
            "eps_a_y": eps_y,
            "bound_ergodic_eps": bound_eps,
        },
    )


def lemma_battery(run, consts):
    """Per-iteration identities, inclusions and auxiliary inequalities.

    Covers: the auxiliary-multiplier identity
    x~_k - x_{k-1} = beta C dy_k + dx_k/theta, the two exact subgradient
    inclusions and the feasibility identity behind the KKT residual
    triple, the first-step cross bound
    (1/sqrt(t))((1/2)||dy_1||_G^2 - (1/sqrt(t))<C dy_1, dx_1>) <= tau*d0,
    the cross-term recursion for k >= 2, and the uniform bound
    dw_{z_{k-1}}(z~_k) <= 4(1+tau)(t^2+t+1) d0 / t^2.
    """
    prob = run.problem
    theta, beta = run.theta, run.beta
    tau, d0 = consts.tau_theta, consts.d0
    dS, dY, dX = run.deltas()
    Gm = run.params.G.mat

    # auxiliary multiplier identity
    aux_dev = run.XT - run.X[:-1] - (beta * (dY @ prob.C.T) + dX / theta)
    aux_scale = 1.0 + np.max(np.abs(run.XT), initial=0.0) + np.max(np.abs(run.X), initial=0.0)

    RS, RY = _block_residuals(run)
    US = RS + run.XT @ prob.D
    UY = RY + run.XT @ prob.C

    # first-step cross bound
    cdy1 = prob.C @ dY[0]
    g_dy1 = float(dY[0] @ (Gm @ dY[0]))
    rt = np.sqrt(theta)
    first_lhs = (0.5 * g_dy1 - float(cdy1 @ dX[0]) / rt) / rt

    checks = [
        _identity_check("multiplier_update_identity", aux_dev, aux_scale),
        _membership_check("s_subgradient_inclusion", prob.g, run.S[1:], US, 0.0),
        _membership_check("y_subgradient_inclusion", prob.f, run.Y[1:], UY, 0.0),
        _feasibility_identity(run),
        _ineq_check("first_step_cross_bound", first_lhs, tau * d0),
        _ineq_check(
            "step_bregman_gap_bound",
            run.dw_prev_tilde,
            4.0 * (1.0 + tau) * (theta ** 2 + theta + 1.0) * d0 / theta ** 2,
        ),
    ]
    if run.n_iter >= 2:
        CdY = dY @ prob.C.T
        ip_cur = np.einsum("ij,ij->i", CdY[1:], dX[1:])
        ip_prev = np.einsum("ij,ij->i", CdY[1:], dX[:-1])
        GdY = dY @ Gm
        g_sq = np.einsum("ij,ij->i", GdY, dY)
        rec_lhs = ((1.0 - theta) / theta) * ip_prev + 0.5 * g_sq[1:] - 0.5 * g_sq[:-1]
        rec_rhs = ip_cur / theta
        checks.append(_ineq_check("cross_term_recursion", rec_lhs, rec_rhs, k_lo=2))
    return CertificateReport(name="lemma_battery", checks=checks)


def error_condition_report(run):
    """Ledger of the per-step relative error condition lhs <= sigma*dw + eta_prev."""
    check = CheckResult(
        name="relative_error_condition",
        passed=bool(np.all(run.passed)),
        worst_slack=float(np.min(run.rhs - run.lhs)) if run.n_iter else 0.0,
        k_range=(1, run.n_iter),
        note=f"sigma={run.sigma:.12g}",
    )
    return CertificateReport(name="error_condition", checks=[check])
