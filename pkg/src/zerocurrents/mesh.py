"""Closed oriented triangle meshes and their cotangent geometry.

A :class:`TriangleMesh` is a list of vertex positions and positively oriented
faces. Periodic meshes (the flat torus) carry per-corner translation offsets so
that every face has an honest embedded shape in a covering space; edges are
therefore keyed by their endpoints *and* the relative offset, which keeps
multi-edges on coarse tori (``N = 2``) distinct.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometryError, MeshTopologyError

__all__ = [
    "TriangleMesh",
    "LaplacianWeights",
    "make_flat_torus",
    "make_sphere",
    "laplacian_weights",
    "read_obj",
    "constant_form",
    "half_indicator",
    "bump_form",
    "as_test_form",
]


class TriangleMesh:
    """Oriented closed triangulated surface.

    Parameters
    ----------
    vertices : array_like, shape (V, 3)
        Vertex positions.
    faces : array_like, shape (F, 3)
        Vertex indices of each face, counter-clockwise seen from outside.
    corner_offsets : array_like, shape (F, 3, 3), optional
        Translation added to ``vertices[faces[f, k]]`` to obtain the position
        of corner ``k`` of face ``f`` in a covering space. Zero for embedded
        meshes.
    grid_size : int, optional
        Set by :func:`make_flat_torus`; identifies the regular torus grid.

    Attributes
    ----------
    edges : ndarray, shape (E, 2)
        Edge endpoints ``(i, j)``, stored with ``i < j``.
    edge_faces : ndarray, shape (E, 2)
        Face on the left (traversing ``i -> j``) and face on the right.
    face_edges : ndarray, shape (F, 3)
        Edge of half-edge ``k`` of each face (corner ``k`` to ``k + 1``).
    face_edge_signs : ndarray, shape (F, 3)
        ``+1`` when the half-edge runs along the stored edge direction.
    """

    def __init__(self, vertices, faces, corner_offsets=None, grid_size=None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.faces = np.asarray(faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must have shape (V, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ValueError("faces must have shape (F, 3)")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face index out of range")
        if corner_offsets is None:
            corner_offsets = np.zeros(self.faces.shape + (3,))
        self.corner_offsets = np.asarray(corner_offsets, dtype=float)
        self.grid_size = grid_size
        self._build_edges()
        for arr in (self.vertices, self.faces, self.corner_offsets):
            arr.setflags(write=False)

    def _build_edges(self):
        F = len(self.faces)
        a = self.faces
        b = np.roll(self.faces, -1, axis=1)
        shift = np.roll(self.corner_offsets, -1, axis=1) - self.corner_offsets
        a, b, shift = a.ravel(), b.ravel(), shift.reshape(-1, 3)
        if np.any(a == b):
            raise MeshTopologyError("self-loop edges", [(int(x), int(x)) for x in a[a == b]])
        sign = np.where(a < b, 1, -1)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        key_shift = np.round(shift * sign[:, None], 9)
        keys = np.column_stack([lo, hi, key_shift])
        uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.ravel()

        bad = counts != 2
        if np.any(bad):
            offending = [(int(u[0]), int(u[1])) for u in uniq[bad]]
            kind = "boundary" if np.all(counts[bad] == 1) else "non-manifold"
            raise MeshTopologyError(f"mesh has {kind} edges", offending)

        halfedge_face = np.repeat(np.arange(F), 3)
        E = len(uniq)
        edge_faces = np.full((E, 2), -1, dtype=np.int64)
        plus = sign > 0
        edge_faces[inverse[plus], 0] = halfedge_face[plus]
        edge_faces[inverse[~plus], 1] = halfedge_face[~plus]
        if np.any(edge_faces < 0):
            offending = [(int(u[0]), int(u[1])) for u in uniq[np.any(edge_faces < 0, axis=1)]]
            raise MeshTopologyError("inconsistent face orientation", offending)

        self.edges = uniq[:, :2].astype(np.int64)
        self.edges.setflags(write=False)
        self.edge_faces = edge_faces
        self.face_edges = inverse.reshape(F, 3)
        self.face_edge_signs = sign.reshape(F, 3)
        for arr in (self.edge_faces, self.face_edges, self.face_edge_signs):
            arr.setflags(write=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def corner_positions(self):
        """Positions of the three corners of every face, shape (F, 3, 3)."""
        return self.vertices[self.faces] + self.corner_offsets

    def edge_vectors(self):
        """Vector from ``edges[e, 0]`` to ``edges[e, 1]`` in the covering space."""
        P = self.corner_positions()
        vec = np.empty((self.n_edges, 3))
        f = self.face_edges
        tip = np.roll(P, -1, axis=1) - P
        vec[f[self.face_edge_signs > 0]] = tip[self.face_edge_signs > 0]
        vec[f[self.face_edge_signs < 0]] = -tip[self.face_edge_signs < 0]
        return vec

    def edge_lengths(self):
        return np.linalg.norm(self.edge_vectors(), axis=1)

    @property
    def max_edge_length(self):
        return float(self.edge_lengths().max())

    @property
    def spacing(self):
        """Median edge length; the grid spacing ``1/N`` on the flat torus."""
        return float(np.median(self.edge_lengths()))

    def face_areas(self):
        P = self.corner_positions()
        cross = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def face_centroids(self):
        """Face barycenters; wrapped into the unit square on the torus."""
        c = self.corner_positions().mean(axis=1)
        if self.grid_size is not None:
            c[:, :2] = np.mod(c[:, :2], 1.0)
        return c

    def valences(self):
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices)

    def __repr__(self):
        return f"TriangleMesh(V={self.n_vertices}, E={self.n_edges}, F={self.n_faces})"


@dataclass(frozen=True)
class LaplacianWeights:
    """Cotangent edge weights and lumped (barycentric) vertex masses."""

    mesh: TriangleMesh
    edge_weights: np.ndarray
    vertex_masses: np.ndarray


def make_flat_torus(N):
    """Regular ``N x N`` triangulation of the unit square torus.

    Vertex ``(i, j)`` sits at ``(i/N, j/N, 0)`` and has index ``i + N*j``.
    Every square is split along its ``(i, j) -> (i+1, j+1)`` diagonal.
    """
    if int(N) != N or N < 2:
        raise ValueError(f"flat torus needs N >= 2, got {N!r}")
    N = int(N)
    ii, jj = np.meshgrid(np.arange(N), np.arange(N), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    verts = np.column_stack([ii / N, jj / N, np.zeros(N * N)])

    def vid(i, j):
        return (i % N) + N * (j % N)

    def wrap(i, j):
        return np.column_stack([(i // N).astype(float), (j // N).astype(float), np.zeros(len(i))])

    a = (ii, jj)
    b = (ii + 1, jj)
    c = (ii + 1, jj + 1)
    d = (ii, jj + 1)
    faces, offsets = [], []
    for tri in ((a, b, c), (a, c, d)):
        faces.append(np.column_stack([vid(*p) for p in tri]))
        offsets.append(np.stack([wrap(*p) for p in tri], axis=1))
    faces = np.concatenate(faces)
    offsets = np.concatenate(offsets)
    return TriangleMesh(verts, faces, corner_offsets=offsets, grid_size=N)


_PHI = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
    [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
    [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
])
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


def make_sphere(s):
    """Icosahedron subdivided ``s`` times, projected to the unit sphere."""
    if int(s) != s or s < 0:
        raise ValueError(f"subdivision level must be a non-negative integer, got {s!r}")
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS.astype(float)]
    faces = _ICO_FACES.tolist()
    for _ in range(int(s)):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for i, j, k in faces:
            a, b, c = midpoint(i, j), midpoint(j, k), midpoint(k, i)
            new_faces += [[i, a, c], [j, b, a], [k, c, b], [a, b, c]]
        faces = new_faces
    verts = np.array(verts)
    faces = np.array(faces)
    # outward orientation
    P = verts[faces]
    normal = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
    flip = np.einsum("ij,ij->i", normal, P.mean(axis=1)) < 0
    faces[flip] = faces[flip][:, ::-1]
    return TriangleMesh(verts, faces)


def laplacian_weights(mesh, rtol=1e-12):
    """Cotangent weights ``w_ij = (cot a + cot b) / 2`` and lumped masses.

    Negative weights (obtuse opposite angles) are kept.
    """
    P = mesh.corner_positions()
    e1 = P[:, 1] - P[:, 0]
    e2 = P[:, 2] - P[:, 0]
    cross = np.linalg.norm(np.cross(e1, e2), axis=1)
    scale = np.max(np.linalg.norm(P - np.roll(P, 1, axis=1), axis=2), axis=1) ** 2
    degenerate = cross <= rtol * scale
    if np.any(degenerate):
        raise DegenerateGeometryError(
            f"{int(degenerate.sum())} degenerate face(s), first at index {int(np.argmax(degenerate))}"
        )
    area = 0.5 * cross

    weights = np.zeros(mesh.n_edges)
    for k in range(3):
        # angle at corner k is opposite half-edge (k+1 -> k+2)
        u = P[:, (k + 1) % 3] - P[:, k]
        v = P[:, (k + 2) % 3] - P[:, k]
        cot = np.einsum("ij,ij->i", u, v) / cross
        np.add.at(weights, mesh.face_edges[:, (k + 1) % 3], 0.5 * cot)

    masses = np.zeros(mesh.n_vertices)
    np.add.at(masses, mesh.faces.ravel(), np.repeat(area / 3.0, 3))
    return LaplacianWeights(mesh, weights, masses)


def read_obj(path):
    """Read a closed triangle mesh from a Wavefront OBJ file.

    Only ``v`` and ``f`` records are used. Polygons with more than three
    vertices are rejected, as are meshes with boundary edges.
    """
    verts, faces = [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) for p in parts[1:]]
            if len(idx) != 3:
                raise ValueError(f"{path}:{lineno}: non-triangular face with {len(idx)} vertices")
            faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
    if not faces:
        raise ValueError(f"{path}: no faces")
    return TriangleMesh(np.array(verts), np.array(faces))


# -- test forms (functions on faces) --------------------------------------


def as_test_form(mesh, values):
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_faces,):
        raise ValueError(f"test form needs {mesh.n_faces} face values, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("test form has non-finite values")
    return values


def constant_form(mesh, value=1.0):
    return np.full(mesh.n_faces, float(value))


def half_indicator(mesh, atol=1e-12):
    """Left half ``x < 1/2`` on the torus; northern hemisphere ``z > 0`` otherwise.

    Faces whose centroid lies on the dividing plane get weight 1/2, which keeps
    the form exactly complementary to its mirror image.
    """
    c = mesh.face_centroids()
    side = 0.5 - c[:, 0] if mesh.grid_size is not None else c[:, 2]
    return np.where(np.abs(side) <= atol, 0.5, (side > 0).astype(float))


def periodic_offsets(mesh, center):
    """Displacement of each face centroid from ``center`` (minimum image on the torus)."""
    diff = mesh.face_centroids() - np.asarray(center, dtype=float)
    if mesh.grid_size is not None:
        diff[:, :2] -= np.round(diff[:, :2])
    return diff


def bump_form(mesh, center, width):
    """Gaussian bump ``exp(-|x - c|^2 / (2 width^2))`` sampled at face centroids."""
    r2 = np.sum(periodic_offsets(mesh, center) ** 2, axis=1)
    return np.exp(-0.5 * r2 / width**2)
