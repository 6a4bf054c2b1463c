"""Eigenpairs of the connection Laplacian, the heat semigroup and heat kernel embeddings."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bundle import chern_number, face_curvature, pancharatnam_pullback
from .errors import ConvergenceError, EmbeddingTooCoarseError, NonQuantizedError, TruncationError

__all__ = [
    "SpectralData",
    "CPnImmersion",
    "eigensolve",
    "truncation_rank",
    "heat_apply",
    "heat_kernel",
    "heat_kernel_embedding",
    "fubini_study_distance",
    "ConvergenceRow",
    "curvature_convergence_report",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 2000


@dataclass(frozen=True)
class SpectralData:
    """Lowest ``k`` eigenpairs of ``A x = lambda M x``.

    ``eigenvectors[:, i]`` is the vertex vector of eigensection ``i``;
    columns are orthonormal in the lumped mass inner product.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mass: np.ndarray
    mesh: object = None

    @property
    def k(self):
        return len(self.eigenvalues)

    def coefficients(self, psi):
        """``<psi_i, psi>_M`` for every retained ``i`` (last axis of ``psi`` is vertices)."""
        psi = np.asarray(psi)
        return (psi * self.mass) @ np.conj(self.eigenvectors)

    def synthesize(self, coeffs):
        return np.asarray(coeffs) @ self.eigenvectors.T

    def truncate(self, k):
        k = int(k)
        if not 1 <= k <= self.k:
            raise ValueError(f"cannot truncate {self.k} eigenpairs to {k}")
        return SpectralData(self.eigenvalues[:k], self.eigenvectors[:, :k], self.mass, self.mesh)

    def ground_indices(self, rtol=1e-8):
        """Indices of the ground eigenspace, ``lambda_i <= lambda_0 + rtol (1 + lambda_0)``."""
        lam0 = self.eigenvalues[0]
        return np.flatnonzero(self.eigenvalues <= lam0 + rtol * (1.0 + abs(lam0)))

    def residuals(self, pair):
        A = pair.stiffness
        X = self.eigenvectors
        R = A @ X - (self.mass[:, None] * X) * self.eigenvalues
        return np.linalg.norm(R, axis=0)

    def orthonormality_error(self):
        X = self.eigenvectors
        G = np.conj(X.T) @ (self.mass[:, None] * X)
        return float(np.max(np.abs(G - np.eye(self.k))))


@dataclass(frozen=True)
class CPnImmersion:
    """Unit vector ``h_p`` in ``C^(n+1)`` per vertex, representing a map into ``CP^n``."""

    mesh: object
    vectors: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.vectors, dtype=complex)
        if h.ndim != 2 or h.shape[0] != self.mesh.n_vertices:
            raise ValueError("need one vector per vertex")
        norms = np.linalg.norm(h, axis=1)
        if not np.allclose(norms, 1.0, rtol=0, atol=1e-10):
            raise ValueError("immersion vectors must have unit norm")
        h.setflags(write=False)
        object.__setattr__(self, "vectors", h)

    @property
    def n(self):
        return self.vectors.shape[1] - 1

    def transformed(self, U):
        """Compose with a unitary ``U`` of ``C^(n+1)``."""
        return CPnImmersion(self.mesh, self.vectors @ np.asarray(U).T)


def _operator_norm_bound(A):
    return float(abs(A).sum(axis=1).max())


def eigensolve(pair, k, rtol=1e-8, orth_tol=1e-10, dense_limit=DENSE_LIMIT):
    """Lowest ``k`` eigenpairs of the generalized problem ``A x = lambda M x``.

    Dense Hermitian decomposition up to ``dense_limit`` vertices (or when
    nearly the full spectrum is requested), shift-invert Lanczos above. Either path must meet ``|A x - lambda M x| <= rtol ||A||``
    and M-orthonormality to ``orth_tol``.
    """
    A = pair.stiffness
    M = pair.mass
    V = A.shape[0]
    k = int(k)
    if not 1 <= k <= V:
        raise ValueError(f"k must be in [1, {V}], got {k}")
    # ARPACK cannot return (almost) the whole spectrum, so fall back to dense there
    if V <= dense_limit or k >= V - 1:
        subset = None if k == V else [0, k - 1]
        lam, X = sla.eigh(A.toarray(), np.diag(M), subset_by_index=subset)
    else:
        lam, X = _iterative_lowest(A, M, k)

    spec = SpectralData(lam, X, np.asarray(M, dtype=float), pair.mesh)
    scale = _operator_norm_bound(A)
    res = spec.residuals(pair)
    worst = float(res.max())
    if worst > rtol * scale:
        raise ConvergenceError(
            f"eigen residual {worst:.3g} exceeds {rtol:g} * ||A|| = {rtol * scale:.3g}", worst
        )
    orth = spec.orthonormality_error()
    if orth > orth_tol:
        raise ConvergenceError(f"M-orthonormality error {orth:.3g} exceeds {orth_tol:g}", orth)
    if lam[0] < -1e-8:
        warnings.warn(
            f"lowest eigenvalue {lam[0]:.3g} is negative (negative cotangent weights?)",
            RuntimeWarning,
            stacklevel=2,
        )
    return spec


def _iterative_lowest(A, M, k):
    Mm = sp.diags(M).tocsc()
    sigma = -1e-3 * float(abs(A.diagonal()).max() / M.max())
    lam, X = spla.eigsh(A.tocsc(), k=k, M=Mm, sigma=sigma, which="LM", tol=1e-13)
    order = np.argsort(lam)
    lam, X = lam[order], X[:, order]
    # Rayleigh-Ritz in the returned basis restores M-orthonormality to round-off
    G = np.conj(X.T) @ (M[:, None] * X)
    L = np.linalg.cholesky(G)
    X = np.linalg.solve(L.conj(), X.T).T
    H = np.conj(X.T) @ (A @ X)
    H = 0.5 * (H + np.conj(H.T))
    lam, Q = np.linalg.eigh(H)
    return lam, X @ Q


def truncation_rank(eigenvalues, t_min, tol=1e-12):
    """Number of eigenpairs with ``exp(-t_min (lambda_i - lambda_0)) > tol``."""
    lam = np.asarray(eigenvalues)
    keep = np.exp(-t_min * (lam - lam[0])) > tol
    return max(1, int(np.count_nonzero(keep)))


def _heat_weights(spec, t, shift=0.0):
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t!r}")
    return np.exp(-t * (spec.eigenvalues - shift))


def heat_apply(spec, t, psi):
    """``S_t psi = sum_i exp(-t lambda_i) <psi_i, psi>_M psi_i`` on the retained span."""
    w = _heat_weights(spec, t)
    return spec.synthesize(spec.coefficients(psi) * w)


def heat_kernel(spec, t):
    """Dense kernel ``K_t[q, p] = sum_i exp(-t lambda_i) psi_i(q) conj(psi_i(p))``."""
    w = _heat_weights(spec, t)
    X = spec.eigenvectors
    return (X * w) @ np.conj(X.T)


def heat_kernel_embedding(spec, t, floor=1e-14):
    """Projective class of the smoothed Dirac delta at every vertex.

    ``h_p`` is the normalized coefficient vector
    ``(exp(-t lambda_i) conj(psi_i(p)))_i``. The weights are shifted by
    ``lambda_0`` before normalization, which leaves the projective point
    unchanged and avoids underflow at large ``t``.
    """
    if t <= 0:
        raise ValueError(f"embedding time must be positive, got {t!r}")
    w = _heat_weights(spec, t, shift=spec.eigenvalues[0])
    H = np.conj(spec.eigenvectors) * w
    norms = np.linalg.norm(H, axis=1)
    if np.any(norms < floor):
        p = int(np.argmin(norms))
        raise TruncationError(f"heat kernel column at vertex {p} vanishes (norm {norms[p]:.3g})")
    return CPnImmersion(spec.mesh, H / norms[:, None])


def fubini_study_distance(a, b):
    """Geodesic distance between ``[a]`` and ``[b]`` in ``CP^n`` (diameter pi/2)."""
    a = np.asarray(a)
    b = np.asarray(b)
    c = np.abs(np.sum(a * np.conj(b), axis=-1)) / (np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1))
    return np.arccos(np.clip(c, 0.0, 1.0))


@dataclass(frozen=True)
class ConvergenceRow:
    t: float
    sup_err: float
    chern: int | None
    reliable: bool
    note: str = ""


def curvature_convergence_report(bundle, spec, t_list, c_floor=1.0):
    """Compare the pullback curvature of the heat kernel embedding with the bundle's.

    The tautological pullback is used (not its dual), so ``Omega^t`` converges to
    the bundle curvature itself. Rows below ``t_min = c_floor * h_max^2`` or with
    a failed pullback are marked unreliable.
    """
    omega = face_curvature(bundle)
    t_min = c_floor * bundle.mesh.max_edge_length**2
    rows = []
    for t in t_list:
        t = float(t)
        note = "" if t >= t_min else f"below mesh floor {t_min:.3g}"
        try:
            emb = heat_kernel_embedding(spec, t)
            omega_t = face_curvature(pancharatnam_pullback(emb, dual=False))
        except (EmbeddingTooCoarseError, TruncationError) as exc:
            rows.append(ConvergenceRow(t, float("nan"), None, False, str(exc)))
            continue
        try:
            c = chern_number(omega_t)
        except NonQuantizedError as exc:
            c, note = None, str(exc)
        err = float(np.max(np.abs(omega_t - omega)))
        rows.append(ConvergenceRow(t, err, c, not note, note))
    return rows
