"""Quadratic distance generating functions and regularity probes.

The solver only ever needs the quadratic distance generating function
w(z) = (1/2)<Qz, z> for a PSD operator Q, whose Bregman distance has the
closed form dw_z(z') = (1/2)||z' - z||_Q^2. The proximal engine consumes
the function through `dist`/`dist_grad`, so a non-quadratic w could be
plugged in later without engine changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import ProductSeminormOp, ProductVector, PsdOperator

__all__ = [
    "QuadraticDGF",
    "RegularityCert",
    "regularity_probe",
    "gradient_chain_probe",
    "gaussian_sampler",
]

#: violations below PROBE_TOL * (1 + |lhs| + |rhs|) count as zero
PROBE_TOL = 1e-9


class QuadraticDGF:
    """w(z) = (1/2)<Qz, z> with Bregman distance (1/2)||z' - z||_Q^2.

    Q may be a `PsdOperator` (flat vectors) or a `ProductSeminormOp`
    (product-space points); both expose apply/quad/seminorm. This w is
    (1, 1)-regular with respect to the seminorm induced by Q.
    """

    def __init__(self, Q):
        self.Q = Q

    def value(self, z):
        return 0.5 * self.Q.quad(z)

    def grad_w(self, z):
        return self.Q.apply(z)

    def dist(self, z, zp):
        """Bregman distance dw_z(zp), centered at z. Symmetric for quadratic w."""
        return 0.5 * self.Q.quad(zp - z)

    def dist_grad(self, z, zp):
        """Gradient of dw_z at zp: Q(zp - z). Antisymmetric in (z, zp)."""
        return self.Q.apply(zp - z)

    def __repr__(self):
        return f"QuadraticDGF({self.Q!r})"


def gaussian_sampler(Q, scale=1.0):
    """Standard-normal point sampler matching the shape Q acts on."""
    if isinstance(Q, ProductSeminormOp):
        dims = Q.dims
        return lambda rng: ProductVector.standard_normal(rng, dims, scale)
    if isinstance(Q, PsdOperator):
        return lambda rng: scale * rng.standard_normal(Q.dim)
    raise TypeError(f"no default sampler for {type(Q).__name__}")


def _seminorm_sq(Q, d):
    return max(Q.quad(d), 0.0)


def _dual_norm(Q, v):
    d = Q.dual_seminorm(v)
    return math.inf if d is None else d


@dataclass
class RegularityCert:
    """Outcome of a sampling probe of the (m, M)-regularity axioms."""

    m: float
    M: float
    samples: int
    max_violation: float

    @property
    def passed(self):
        return self.max_violation <= 0.0


def _effective_violation(lhs, rhs):
    """Signed violation of lhs <= rhs, zeroed below the probe tolerance."""
    viol = lhs - rhs
    if viol <= PROBE_TOL * (1.0 + abs(lhs) + abs(rhs)):
        return 0.0
    return viol


def regularity_probe(w, m, M, n_samples, seed, sampler=None):
    """Sample the (m, M)-regularity inequalities of `w` and report the worst violation.

    Checks, on random pairs (z, z'):
    the lower bound dw_z(z') >= (m/2)||z - z'||^2, the Lipschitz bound
    ||grad w(z) - grad w(z')||* <= M ||z - z'||, and the two-sided
    consequence dw_z(z') <= (M/2)||z - z'||^2. A certificate with
    ``max_violation <= 0`` passes; violations below the probe tolerance
    count as zero.
    """
    if m <= 0 or M <= 0:
        raise ValueError("m and M must be positive")
    sampler = sampler or gaussian_sampler(w.Q)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(int(n_samples)):
        z, zp = sampler(rng), sampler(rng)
        sq = _seminorm_sq(w.Q, z - zp)
        for a, b in ((z, zp), (zp, z)):
            d = w.dist(a, b)
            worst = max(worst, _effective_violation(0.5 * m * sq, d))
            worst = max(worst, _effective_violation(d, 0.5 * M * sq))
        grad_diff = _dual_norm(w.Q, w.grad_w(z) - w.grad_w(zp))
        worst = max(worst, _effective_violation(grad_diff, M * math.sqrt(sq)))
    return RegularityCert(m=m, M=M, samples=int(n_samples), max_violation=worst)


def gradient_chain_probe(w, n_samples, chain_len, seed, m=1.0, M=1.0, sampler=None):
    """Probe the gradient-vs-distance bound and the chain distance bound.

    On random pairs: (||grad dw_{z'}(z)||*)^2 <= (2 M^2 / m) min{dw_z(z'),
    dw_{z'}(z)}. On random chains u_0..u_l: dw_{u_0}(u_l) <= (l M / m) *
    sum_i min{dw_{u_{i-1}}(u_i), dw_{u_i}(u_{i-1})}. Returns worst signed
    slacks (nonnegative means the inequality held).
    """
    if chain_len < 1:
        raise ValueError("chain_len must be >= 1")
    sampler = sampler or gaussian_sampler(w.Q)
    rng = np.random.default_rng(seed)
    pair_worst = math.inf
    chain_worst = math.inf
    for _ in range(int(n_samples)):
        z, zp = sampler(rng), sampler(rng)
        lhs = _dual_norm(w.Q, w.dist_grad(zp, z)) ** 2
        rhs = (2.0 * M * M / m) * min(w.dist(z, zp), w.dist(zp, z))
        pair_worst = min(pair_worst, rhs - lhs + PROBE_TOL * (1.0 + lhs + rhs))

        chain = [sampler(rng) for _ in range(chain_len + 1)]
        lhs = w.dist(chain[0], chain[-1])
        total = sum(
            min(w.dist(chain[i - 1], chain[i]), w.dist(chain[i], chain[i - 1]))
            for i in range(1, chain_len + 1)
        )
        rhs = (chain_len * M / m) * total
        chain_worst = min(chain_worst, rhs - lhs + PROBE_TOL * (1.0 + lhs + rhs))
    if n_samples == 0:
        pair_worst = chain_worst = 0.0
    return {
        "samples": int(n_samples),
        "chain_len": int(chain_len),
        "pair_worst_slack": pair_worst,
        "chain_worst_slack": chain_worst,
        "passed": pair_worst >= 0.0 and chain_worst >= 0.0,
    }
