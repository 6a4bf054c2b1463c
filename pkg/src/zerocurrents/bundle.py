"""Discrete Hermitian line bundles with unitary connection.

A bundle stores one unit complex number per mesh edge: ``transports[e]`` maps
the fiber over ``edges[e, 0]`` to the fiber over ``edges[e, 1]``; the reverse
transport is its conjugate. Sections are complex vertex vectors written in the
implicit unit frame of each fiber.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    BranchOverflowError,
    EmbeddingTooCoarseError,
    NonQuantizedError,
    QuantizationError,
)
from .mesh import periodic_offsets

__all__ = [
    "HermitianLineBundle",
    "LaplacianPair",
    "trivial_bundle",
    "flat_torus_bundle",
    "prescribed_curvature_bundle",
    "bump_curvature",
    "pancharatnam_pullback",
    "face_curvature",
    "chern_number",
    "connection_laplacian",
    "gauge_transform",
    "conjugate_bundle",
]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class HermitianLineBundle:
    mesh: object
    transports: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.transports, dtype=complex)
        if r.shape != (self.mesh.n_edges,):
            raise ValueError(f"need {self.mesh.n_edges} transports, got shape {r.shape}")
        if not np.allclose(np.abs(r), 1.0, rtol=0, atol=1e-12):
            raise ValueError("transports must be unit complex numbers")
        r.setflags(write=False)
        object.__setattr__(self, "transports", r)

    def halfedge_transports(self):
        """Transport along each face half-edge, shape (F, 3)."""
        r = self.transports[self.mesh.face_edges]
        return np.where(self.mesh.face_edge_signs > 0, r, np.conj(r))


@dataclass(frozen=True)
class LaplacianPair:
    """Stiffness ``A`` (Hermitian, sparse) and diagonal mass ``M``; ``Delta ~ M^-1 A``."""

    stiffness: sp.csr_matrix
    mass: np.ndarray
    mesh: object = None


def trivial_bundle(mesh):
    return HermitianLineBundle(mesh, np.ones(mesh.n_edges, dtype=complex))


def gauge_transform(bundle, u):
    """Rescale fibers by unit numbers ``u``: ``r_ij -> u_j r_ij conj(u_i)``."""
    u = np.asarray(u, dtype=complex)
    i, j = bundle.mesh.edges.T
    return HermitianLineBundle(bundle.mesh, u[j] * bundle.transports * np.conj(u[i]))


def conjugate_bundle(bundle):
    return HermitianLineBundle(bundle.mesh, np.conj(bundle.transports))


def face_curvature(bundle):
    """Holonomy angle of every positively oriented face, in ``(-pi, pi]``."""
    return np.angle(np.prod(bundle.halfedge_transports(), axis=1))


def chern_number(curv, atol=1e-6):
    s = float(np.sum(curv)) / TWO_PI
    d = round(s)
    if abs(s - d) > atol:
        raise NonQuantizedError(f"total curvature / 2pi = {s!r} is not an integer")
    return int(d)


def flat_torus_bundle(mesh, d):
    """Constant-curvature bundle of degree ``d`` on :func:`make_flat_torus` output.

    Landau gauge ``A = B x dy`` with ``B = 2 pi d`` integrated along each edge
    in the covering plane. Edges that leave the unit square in ``x`` pick up the
    magnetic translation phase ``exp(-i B y sx)`` of their far endpoint, which
    is single valued because ``B`` is a multiple of ``2 pi``. Every triangle
    receives flux ``B h^2 / 2 = pi d / N^2``.
    """
    N = mesh.grid_size
    if N is None or mesh.n_vertices != N * N or mesh.n_faces != 2 * N * N:
        raise ValueError("flat_torus_bundle needs a mesh from make_flat_torus")
    d = int(d)
    if abs(np.pi * d / N**2) >= np.pi:
        raise BranchOverflowError(f"face flux pi*{d}/{N}^2 exceeds the principal branch")
    B = TWO_PI * d
    i, j = mesh.edges.T
    x_i = mesh.vertices[i, 0]
    y_j = mesh.vertices[j, 1]
    v = mesh.edge_vectors()
    # integer wrap count of the far endpoint in x
    sx = np.round(mesh.vertices[i, 0] + v[:, 0] - mesh.vertices[j, 0])
    phase = B * v[:, 1] * (x_i + 0.5 * v[:, 0]) - B * y_j * sx
    return HermitianLineBundle(mesh, np.exp(1j * phase))


def bump_curvature(mesh, d, width, center=(0.25, 0.5, 0.0)):
    """Face curvature of a Gaussian flux bump with total flux ``2 pi d``."""
    r2 = np.sum(periodic_offsets(mesh, center) ** 2, axis=1)
    density = np.exp(-0.5 * r2 / width**2) * mesh.face_areas()
    return TWO_PI * d * density / density.sum()


def _spanning_tree(mesh):
    """BFS spanning tree of the vertex graph; returns a boolean edge mask."""
    V = mesh.n_vertices
    adj = [[] for _ in range(V)]
    for e, (a, b) in enumerate(mesh.edges):
        adj[a].append((b, e))
        adj[b].append((a, e))
    in_tree = np.zeros(mesh.n_edges, dtype=bool)
    seen = np.zeros(V, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        a = queue.popleft()
        for b, e in adj[a]:
            if not seen[b]:
                seen[b] = True
                in_tree[e] = True
                queue.append(b)
    if not seen.all():
        raise ValueError("mesh is not connected")
    return in_tree


def prescribed_curvature_bundle(mesh, target, harmonic_phases=None, atol_flux=1e-6):
    """Bundle whose face holonomies equal ``target``.

    Tree-cotree construction: transports on a vertex spanning tree are 1, and
    the remaining edges are solved face by face from the leaves of a dual
    spanning tree toward its root. The ``2 * genus`` edges outside both trees
    carry the global holonomy freedoms; they default to 1 or are set from
    ``harmonic_phases``.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (mesh.n_faces,):
        raise ValueError("target needs one value per face")
    flux = target.sum() / TWO_PI
    if abs(flux - round(flux)) > atol_flux:
        raise QuantizationError(f"total flux / 2pi = {flux!r} is not an integer")
    if np.any(np.abs(target) >= np.pi):
        raise BranchOverflowError(
            f"face curvature reaches pi at face {int(np.argmax(np.abs(target)))}"
        )

    in_tree = _spanning_tree(mesh)
    r = np.ones(mesh.n_edges, dtype=complex)

    # dual BFS over edges not in the primal tree
    F = mesh.n_faces
    parent_edge = np.full(F, -1)
    order = [0]
    seen = np.zeros(F, dtype=bool)
    seen[0] = True
    dual_tree = np.zeros(mesh.n_edges, dtype=bool)
    queue = deque([0])
    while queue:
        f = queue.popleft()
        for e in mesh.face_edges[f]:
            if in_tree[e]:
                continue
            g = mesh.edge_faces[e, 0] if mesh.edge_faces[e, 1] == f else mesh.edge_faces[e, 1]
            if not seen[g]:
                seen[g] = True
                parent_edge[g] = e
                dual_tree[e] = True
                order.append(g)
                queue.append(g)

    generators = np.flatnonzero(~in_tree & ~dual_tree)
    if harmonic_phases is not None:
        phases = np.asarray(harmonic_phases, dtype=float)
        if phases.shape != generators.shape:
            raise ValueError(f"need {len(generators)} harmonic phases, got {phases.shape}")
        r[generators] = np.exp(1j * phases)

    for f in reversed(order[1:]):
        e = parent_edge[f]
        k = int(np.flatnonzero(mesh.face_edges[f] == e)[0])
        known = 1.0 + 0j
        for kk in range(3):
            if kk == k:
                continue
            ee = mesh.face_edges[f, kk]
            known *= r[ee] if mesh.face_edge_signs[f, kk] > 0 else np.conj(r[ee])
        want = np.exp(1j * target[f]) / known
        r[e] = want if mesh.face_edge_signs[f, k] > 0 else np.conj(want)
    r /= np.abs(r)
    return HermitianLineBundle(mesh, r)


def pancharatnam_pullback(immersion, eps=1e-8, dual=True):
    """Pull back the connection of a projective immersion to the mesh.

    With ``dual=True`` (the default) the transport along edge ``i -> j`` is
    ``<h_j, h_i> / |<h_j, h_i>|``, the connection on the dual of the
    tautological bundle in the frame ``h``. ``dual=False`` returns the
    tautological bundle itself (conjugate transports).
    """
    mesh = immersion.mesh
    h = immersion.vectors
    i, j = mesh.edges.T
    ip = np.einsum("ea,ea->e", h[j], np.conj(h[i]))
    mag = np.abs(ip)
    bad = mag < eps
    if np.any(bad):
        e = int(np.argmax(bad))
        raise EmbeddingTooCoarseError(
            f"edge {e} ({int(i[e])}, {int(j[e])}) has |<h_i, h_j>| = {mag[e]:.3g} < {eps:g}",
            edge=e,
        )
    r = ip / mag
    return HermitianLineBundle(mesh, r if dual else np.conj(r))


def connection_laplacian(bundle, weights):
    """Cotangent connection Laplacian ``(A psi)_i = sum_j w_ij (psi_i - conj(r_ij) psi_j)``."""
    if weights.mesh is not bundle.mesh:
        raise ValueError("Laplacian weights were built for a different mesh")
    mesh = bundle.mesh
    V = mesh.n_vertices
    i, j = mesh.edges.T
    w = weights.edge_weights
    r = bundle.transports
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([-w * np.conj(r), -w * r, w.astype(complex), w.astype(complex)])
    A = sp.coo_matrix((vals, (rows, cols)), shape=(V, V)).tocsr()
    A.sum_duplicates()
    return LaplacianPair(A, weights.vertex_masses.copy(), mesh)
