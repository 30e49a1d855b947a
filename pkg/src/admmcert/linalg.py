"""Dense vectors, PSD operators, induced seminorms and their duals.

All data is float64 numpy. Operators are immutable after construction and
safe to share read-only across concurrent tasks. Dimensions are desk scale
(a few hundred per block), so everything is dense and eigendecompositions
are computed eagerly.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "as_vector",
    "PsdOperator",
    "ProductVector",
    "ProductSeminormOp",
]


def as_vector(v, dim=None):
    """Coerce `v` to a finite 1-D float64 array, checking `dim` if given."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite entries")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    return arr


class PsdOperator:
    """Self-adjoint positive semidefinite operator with (dual) seminorm evaluation.

    The matrix is symmetrized on construction (so ``A[i, j] == A[j, i]``
    bit-exactly) and eigendecomposed once. The decomposition drives the PSD
    check, the image-membership test and the dual seminorm.

    Parameters
    ----------
    matrix : array_like
        Dense symmetric n x n array. Symmetrized as (A + A.T)/2.
    rank_tol : float, optional
        Relative tolerance: eigenvalues below ``rank_tol * lambda_max``
        count as zero, and a vector r belongs to Im(A) when its
        least-squares residual is at most ``rank_tol * max(1, ||r||)``.
        Construction fails when the smallest eigenvalue is below
        ``-rank_tol * ||A||``.
    """

    def __init__(self, matrix, rank_tol=1e-10):
        mat = np.asarray(matrix, dtype=float)
        if mat.ndim == 0:
            mat = mat.reshape(1, 1)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("operator matrix has non-finite entries")
        mat = (mat + mat.T) / 2.0
        self.dim = mat.shape[0]
        self.rank_tol = float(rank_tol)
        if self.dim:
            evals, evecs = np.linalg.eigh(mat)
        else:
            evals, evecs = np.zeros(0), np.zeros((0, 0))
        spectral = float(np.max(np.abs(evals))) if self.dim else 0.0
        if self.dim and evals[0] < -self.rank_tol * spectral:
            raise ValueError(
                f"matrix is not PSD: min eigenvalue {evals[0]:.3e} < "
                f"-rank_tol*||A|| = {-self.rank_tol * spectral:.3e}"
            )
        self.mat = mat
        self.mat.setflags(write=False)
        self._evals = np.maximum(evals, 0.0)
        self._evecs = evecs
        self._eigmax = float(self._evals[-1]) if self.dim else 0.0
        cut = self.rank_tol * self._eigmax
        self._keep = self._evals > cut
        self._inv_evals = np.zeros_like(self._evals)
        self._inv_evals[self._keep] = 1.0 / self._evals[self._keep]

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, dim, rank_tol=1e-10):
        return cls(np.eye(dim), rank_tol)

    @classmethod
    def zeros(cls, dim, rank_tol=1e-10):
        return cls(np.zeros((dim, dim)), rank_tol)

    @classmethod
    def diag(cls, entries, rank_tol=1e-10):
        return cls(np.diag(as_vector(entries)), rank_tol)

    @classmethod
    def scaled_identity(cls, dim, scale, rank_tol=1e-10):
        return cls(scale * np.eye(dim), rank_tol)

    # -- basic queries -----------------------------------------------------

    @property
    def spectral_norm(self):
        return self._eigmax

    def apply(self, v):
        """Return A @ v."""
        return self.mat @ as_vector(v, self.dim)

    def quad(self, v):
        """Return <Av, v> (may be a tiny negative roundoff value)."""
        v = as_vector(v, self.dim)
        return float(v @ (self.mat @ v))

    def seminorm(self, v):
        """Return sqrt(<Av, v>); 0 on the kernel of A."""
        v = as_vector(v, self.dim)
        q = float(v @ (self.mat @ v))
        neg_tol = self.rank_tol * max(1.0, self._eigmax) * max(1.0, float(v @ v))
        if q < -neg_tol:
            raise ValueError(f"<Av, v> = {q:.3e} < 0: operator data is not PSD")
        return np.sqrt(max(q, 0.0))

    # -- dual seminorm -----------------------------------------------------

    def in_image(self, r):
        """Whether r lies in Im(A) up to the rank tolerance."""
        return self.dual_seminorm(r) is not None

    def dual_seminorm(self, r):
        """Dual seminorm of r, or None when r is outside Im(A).

        For r = A v the result equals ``seminorm(v)``. The value is
        sqrt(<r, u>) where u is the least-squares solution of A u = r.
        """
        r = as_vector(r, self.dim)
        coeffs = self._evecs.T @ r
        resid = np.linalg.norm(coeffs[~self._keep])
        if resid > self.rank_tol * max(1.0, float(np.linalg.norm(r))):
            return None
        val_sq = float(np.sum(coeffs[self._keep] ** 2 * self._inv_evals[self._keep]))
        return np.sqrt(max(val_sq, 0.0))

    def dual_sq_many(self, R):
        """Row-wise squared dual seminorm of a (k, n) array.

        Returns ``(val_sq, in_image)`` where rows outside Im(A) get
        ``in_image[i] = False`` (their ``val_sq`` is still the on-image
        part and should be ignored).
        """
        R = np.atleast_2d(np.asarray(R, dtype=float))
        if R.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: expected {self.dim}, got {R.shape[1]}")
        W = R @ self._evecs
        resid = np.linalg.norm(W[:, ~self._keep], axis=1)
        ok = resid <= self.rank_tol * np.maximum(1.0, np.linalg.norm(R, axis=1))
        val_sq = (W[:, self._keep] ** 2) @ self._inv_evals[self._keep]
        return val_sq, ok

    def pseudo_solve(self, r):
        """Least-squares solution u of A u = r (min-norm)."""
        r = as_vector(r, self.dim)
        coeffs = self._evecs.T @ r
        return self._evecs @ (coeffs * self._inv_evals)

    def __repr__(self):
        return f"PsdOperator(dim={self.dim}, rank_tol={self.rank_tol:g})"


class ProductVector:
    """Element (s, y, x) of the product space S x Y x X.

    Treated as immutable: blocks are never mutated in place by this
    library. Supports the vector-space operations needed by the solver
    and the proximal framework.
    """

    __slots__ = ("s", "y", "x")

    def __init__(self, s, y, x):
        self.s = as_vector(s)
        self.y = as_vector(y)
        self.x = as_vector(x)

    @classmethod
    def zeros(cls, dims):
        n_s, n_y, n_x = dims
        return cls(np.zeros(n_s), np.zeros(n_y), np.zeros(n_x))

    @classmethod
    def standard_normal(cls, rng, dims, scale=1.0):
        n_s, n_y, n_x = dims
        return cls(
            scale * rng.standard_normal(n_s),
            scale * rng.standard_normal(n_y),
            scale * rng.standard_normal(n_x),
        )

    @property
    def dims(self):
        return (self.s.shape[0], self.y.shape[0], self.x.shape[0])

    def copy(self):
        return ProductVector(self.s.copy(), self.y.copy(), self.x.copy())

    def concat(self):
        return np.concatenate([self.s, self.y, self.x])

    def dot(self, other):
        return float(self.s @ other.s + self.y @ other.y + self.x @ other.x)

    def norm2(self):
        return float(np.sqrt(self.dot(self)))

    def allclose(self, other, rtol=1e-12, atol=1e-12):
        return (
            np.allclose(self.s, other.s, rtol=rtol, atol=atol)
            and np.allclose(self.y, other.y, rtol=rtol, atol=atol)
            and np.allclose(self.x, other.x, rtol=rtol, atol=atol)
        )

    def __add__(self, other):
        return ProductVector(self.s + other.s, self.y + other.y, self.x + other.x)

    def __sub__(self, other):
        return ProductVector(self.s - other.s, self.y - other.y, self.x - other.x)

    def __neg__(self):
        return ProductVector(-self.s, -self.y, -self.x)

    def __mul__(self, scalar):
        scalar = float(scalar)
        return ProductVector(scalar * self.s, scalar * self.y, scalar * self.x)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def __repr__(self):
        return f"ProductVector(dims={self.dims})"


class ProductSeminormOp:
    """Block-diagonal PSD operator on S x Y x X: z -> (H s, Gc y, x_scale * x).

    Induces the product seminorm
    ``(||s||ـH^2 + ||y||_Gc^2 + x_scale*||x||^2)^(1/2)``. The x block is a
    positive multiple of the identity, so the operator is degenerate only
    through H and Gc.
    """

    def __init__(self, H, Gc, x_scale, x_dim):
        if not isinstance(H, PsdOperator) or not isinstance(Gc, PsdOperator):
            raise TypeError("H and Gc must be PsdOperator instances")
        x_scale = float(x_scale)
        if x_scale <= 0.0:
            raise ValueError(f"x_scale must be positive, got {x_scale}")
        if x_dim < 0:
            raise ValueError("x_dim must be nonnegative")
        self.H = H
        self.Gc = Gc
        self.x_scale = x_scale
        self.x_dim = int(x_dim)

    @property
    def dims(self):
        return (self.H.dim, self.Gc.dim, self.x_dim)

    def _check(self, z):
        if z.dims != self.dims:
            raise ValueError(f"dimension mismatch: expected {self.dims}, got {z.dims}")

    def apply(self, z):
        self._check(z)
        return ProductVector(self.H.mat @ z.s, self.Gc.mat @ z.y, self.x_scale * z.x)

    def quad(self, z):
        self._check(z)
        return (
            float(z.s @ (self.H.mat @ z.s))
            + float(z.y @ (self.Gc.mat @ z.y))
            + self.x_scale * float(z.x @ z.x)
        )

    def seminorm(self, z):
        q = self.quad(z)
        neg_tol = 1e-10 * max(1.0, self.H.spectral_norm, self.Gc.spectral_norm, self.x_scale)
        if q < -neg_tol * max(1.0, z.dot(z)):
            raise ValueError(f"<Qz, z> = {q:.3e} < 0: operator data is not PSD")
        return float(np.sqrt(max(q, 0.0)))

    def dual_seminorm(self, z):
        """Blockwise dual seminorm; None when any block is out of its image."""
        self._check(z)
        ds = self.H.dual_seminorm(z.s)
        if ds is None:
            return None
        dy = self.Gc.dual_seminorm(z.y)
        if dy is None:
            return None
        dx_sq = float(z.x @ z.x) / self.x_scale
        return float(np.sqrt(ds * ds + dy * dy + dx_sq))

    def to_dense(self):
        """Assemble the dense block-diagonal PsdOperator (for cross-checks)."""
        n_s, n_y, n_x = self.dims
        n = n_s + n_y + n_x
        mat = np.zeros((n, n))
        mat[:n_s, :n_s] = self.H.mat
        mat[n_s:n_s + n_y, n_s:n_s + n_y] = self.Gc.mat
        mat[n_s + n_y:, n_s + n_y:] = self.x_scale * np.eye(n_x)
        return PsdOperator(mat, max(self.H.rank_tol, self.Gc.rank_tol))

    def __repr__(self):
        return f"ProductSeminormOp(dims={self.dims}, x_scale={self.x_scale:g})"
