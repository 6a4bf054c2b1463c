"""Signed zero currents by phase winding.

Every face gets the integer

    n_f = (delta_ij + delta_jk + delta_ki + omega_f) / (2 pi),

where ``delta_ij = arg(psi_j conj(r_ij psi_i))`` is the covariant phase
increment along a half-edge and ``omega_f`` the face holonomy. Edge increments
cancel pairwise across faces, so the total index equals the Chern number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundle import face_curvature, pancharatnam_pullback
from .errors import DegenerateSectionError, NumericalContractError

__all__ = [
    "ZeroCurrent",
    "Hyperplane",
    "zero_current",
    "winding_indices",
    "intersection_current",
    "intersection_indices",
    "hyperplane_values",
    "pair",
    "lemma_check",
]

EPS_ZERO = 1e-12
EPS_BRANCH = 1e-9


@dataclass(frozen=True)
class ZeroCurrent:
    """Sparse map from face index to nonzero winding index."""

    indices: dict = field(default_factory=dict)
    n_faces: int | None = None

    @classmethod
    def from_dense(cls, dense):
        dense = np.asarray(dense)
        nz = np.flatnonzero(dense)
        return cls({int(f): int(dense[f]) for f in nz}, len(dense))

    def to_dense(self, n_faces=None):
        n = self.n_faces if n_faces is None else n_faces
        out = np.zeros(n, dtype=np.int64)
        for f, v in self.indices.items():
            out[f] = v
        return out

    @property
    def total(self):
        return sum(self.indices.values())

    @property
    def n_plus(self):
        return sum(v for v in self.indices.values() if v > 0)

    @property
    def n_minus(self):
        return -sum(v for v in self.indices.values() if v < 0)

    def __neg__(self):
        return ZeroCurrent({f: -v for f, v in self.indices.items()}, self.n_faces)


@dataclass(frozen=True)
class Hyperplane:
    """Projective hyperplane ``[psi^perp]`` given by a nonzero normal vector."""

    psi: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.ndim != 1 or not np.linalg.norm(psi) > 0:
            raise ValueError("hyperplane normal must be a nonzero vector")
        object.__setattr__(self, "psi", psi)


def winding_indices(bundle, values, omega=None, eps_zero=EPS_ZERO, eps_branch=EPS_BRANCH):
    """Batched zero extraction.

    Parameters
    ----------
    bundle : HermitianLineBundle
    values : ndarray, shape (B, V) or (V,)
        Section values at the vertices.
    omega : ndarray, optional
        Precomputed face curvature of ``bundle``.

    Returns
    -------
    indices : ndarray of int8, shape (B, F)
    degenerate : ndarray of bool, shape (B,)
        Rows that vanish at a vertex or have an edge increment at the branch
        cut; their indices are zeroed.
    """
    mesh = bundle.mesh
    psi = np.atleast_2d(np.asarray(values, dtype=complex))
    if psi.shape[1] != mesh.n_vertices:
        raise ValueError("section length does not match the mesh")
    if omega is None:
        omega = face_curvature(bundle)
    i, j = mesh.edges.T
    z = psi[:, j] * np.conj(bundle.transports * psi[:, i])
    delta = np.angle(z)

    mag = np.abs(psi)
    degenerate = np.any(mag < eps_zero * mag.max(axis=1, keepdims=True), axis=1)
    degenerate |= np.any(np.abs(delta) > np.pi - eps_branch, axis=1)
    degenerate |= ~np.all(np.isfinite(psi), axis=1)

    s = np.sum(delta[:, mesh.face_edges] * mesh.face_edge_signs, axis=2) + omega
    n = s / (2.0 * np.pi)
    rounded = np.rint(n)
    off = np.abs(n - rounded)
    off[degenerate] = 0.0
    if off.max(initial=0.0) > 1e-6:
        raise NumericalContractError(f"face index not integral (off by {off.max():.3g})")
    rounded[degenerate] = 0
    return rounded.astype(np.int8), degenerate


def zero_current(bundle, psi):
    """Zero current of one section; raises :class:`DegenerateSectionError` on degenerate input."""
    idx, degenerate = winding_indices(bundle, psi)
    if degenerate[0]:
        raise DegenerateSectionError("section vanishes at a vertex or has a phase jump of pi")
    return ZeroCurrent.from_dense(idx[0])


def hyperplane_values(immersion, normals):
    """``g_p = <h_p, psi> = sum_a h_pa conj(psi_a)`` for each normal (rows of ``normals``)."""
    normals = np.atleast_2d(np.asarray(normals, dtype=complex))
    return np.conj(normals) @ immersion.vectors.T


def intersection_indices(immersion, normals, pullback=None):
    """Batched intersection currents with hyperplanes ``[psi^perp]``.

    ``g`` is wound against the Pancharatnam transports of the immersion, which
    makes the result independent of the choice of unit lifts ``h_p``.
    """
    if pullback is None:
        pullback = pancharatnam_pullback(immersion)
    g = hyperplane_values(immersion, normals)
    return winding_indices(pullback, g)


def intersection_current(immersion, H, pullback=None):
    psi = H.psi if isinstance(H, Hyperplane) else np.asarray(H)
    if psi.shape[-1] != immersion.vectors.shape[1]:
        raise ValueError("hyperplane dimension does not match the immersion")
    idx, degenerate = intersection_indices(immersion, psi, pullback)
    if degenerate[0]:
        raise DegenerateSectionError("hyperplane passes through a vertex or is not transverse")
    return ZeroCurrent.from_dense(idx[0])


def pair(current, eta):
    """``<current | eta> = sum_f n_f eta_f``."""
    eta = np.asarray(eta, dtype=float)
    if current.n_faces is not None and current.n_faces != len(eta):
        raise ValueError("test form and current live on different meshes")
    return float(sum(v * eta[f] for f, v in sorted(current.indices.items())))


def lemma_check(bundle, spec, t, psi):
    """Compare the intersection current of the heat kernel embedding with ``-zeta(S_t psi)``.

    Returns ``(sigma, zeta)``; the identity holds when ``sigma == -zeta``.
    """
    from .spectral import heat_apply, heat_kernel_embedding

    emb = heat_kernel_embedding(spec, t)
    sigma = intersection_current(emb, spec.coefficients(psi))
    zeta = zero_current(bundle, heat_apply(spec, t, psi))
    return sigma, zeta
