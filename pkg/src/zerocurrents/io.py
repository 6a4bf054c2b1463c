"""Plain-text serialization: bundles, CSV tables, JSON estimates and PLY density meshes.

Floats are written with ``repr`` so that files round-trip exactly and are
byte-identical across runs with the same inputs.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .bundle import HermitianLineBundle
from .zeros import ZeroCurrent

__all__ = [
    "write_bundle",
    "read_bundle",
    "write_curvature_csv",
    "read_curvature_csv",
    "write_eigenvalues_csv",
    "write_convergence_csv",
    "write_samples_csv",
    "write_current_csv",
    "read_current_csv",
    "write_estimate_json",
    "write_ply",
    "fmt",
]


def fmt(x):
    """Deterministic text for a scalar; ``nan`` and ``None`` become empty fields."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if np.isnan(x) else repr(x)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_bundle(path, bundle):
    """One line ``i j re im`` per stored edge, in mesh edge order."""
    i, j = bundle.mesh.edges.T
    r = bundle.transports
    with open(path, "w") as fh:
        for a, b, z in zip(i, j, r):
            fh.write(f"{a} {b} {fmt(z.real)} {fmt(z.imag)}\n")


def read_bundle(path, mesh):
    """Inverse of :func:`write_bundle`.

    Lines are matched to mesh edges by position; a line written as ``j i``
    for the stored edge ``(i, j)`` is accepted and conjugated.
    """
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if len(rows) != mesh.n_edges:
        raise ValueError(f"{path}: expected {mesh.n_edges} edge lines, got {len(rows)}")
    r = np.empty(mesh.n_edges, dtype=complex)
    for e, parts in enumerate(rows):
        if len(parts) != 4:
            raise ValueError(f"{path}:{e + 1}: expected 'i j re im'")
        a, b = int(parts[0]), int(parts[1])
        z = complex(float(parts[2]), float(parts[3]))
        i, j = mesh.edges[e]
        if (a, b) == (i, j):
            r[e] = z
        elif (a, b) == (j, i):
            r[e] = np.conj(z)
        else:
            raise ValueError(f"{path}:{e + 1}: edge ({a}, {b}) does not match mesh edge ({i}, {j})")
    return HermitianLineBundle(mesh, r)


def write_curvature_csv(path, omega):
    _write_rows(path, ["face_id", "omega"], enumerate(np.asarray(omega, dtype=float)))


def read_curvature_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    omega = np.zeros(len(rows))
    for r in rows:
        omega[int(r["face_id"])] = float(r["omega"])
    return omega


def write_eigenvalues_csv(path, eigenvalues):
    _write_rows(path, ["index", "lambda"], enumerate(np.asarray(eigenvalues, dtype=float)))


def write_convergence_csv(path, rows):
    _write_rows(path, ["t", "sup_err", "chern", "reliable"], ((r.t, r.sup_err, r.chern, r.reliable) for r in rows))


def write_samples_csv(path, estimates):
    """Per-sample table for one or more ``(label, CurrentEstimate)`` pairs.

    A leading ``row`` column names the report row each sample belongs to.
    """
    def rows():
        for label, est in estimates:
            for s in range(est.n_samples):
                yield label, s, est.pairings[s], est.n_plus[s], est.n_minus[s]

    _write_rows(path, ["row", "sample_index", "pairing", "n_zeros_plus", "n_zeros_minus"], rows())


def write_current_csv(path, current):
    _write_rows(path, ["face_id", "index"], sorted(current.indices.items()))


def read_current_csv(path, n_faces=None):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return ZeroCurrent({int(r["face_id"]): int(r["index"]) for r in rows if int(r["index"])}, n_faces)


def write_estimate_json(path, estimate):
    Path(path).write_text(json.dumps(estimate.to_json(), indent=2) + "\n")


def write_ply(path, mesh, face_density):
    """ASCII PLY with a per-face ``density`` property (positions taken from ``mesh.vertices``)."""
    density = np.asarray(face_density, dtype=float)
    if density.shape != (mesh.n_faces,):
        raise ValueError("need one density value per face")
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {mesh.n_vertices}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {mesh.n_faces}",
        "property list uchar int vertex_indices",
        "property double density",
        "end_header",
    ]
    lines += [" ".join(repr(float(c)) for c in v) for v in mesh.vertices]
    lines += [f"3 {a} {b} {c} {dens!r}" for (a, b, c), dens in zip(mesh.faces, density.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")
