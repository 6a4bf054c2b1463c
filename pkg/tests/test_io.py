import csv
import json

import numpy as np
import pytest

from zerocurrents.bundle import face_curvature, flat_torus_bundle
from zerocurrents.io import (
    fmt,
    read_bundle,
    read_curvature_csv,
    read_current_csv,
    write_bundle,
    write_curvature_csv,
    write_current_csv,
    write_eigenvalues_csv,
    write_estimate_json,
    write_ply,
    write_samples_csv,
)
from zerocurrents.mesh import make_flat_torus
from zerocurrents.sampling import estimate_zero_current
from zerocurrents.zeros import ZeroCurrent


def _header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


def test_fmt():
    assert fmt(None) == "" and fmt(float("nan")) == ""
    assert fmt(True) == "true" and fmt(np.bool_(False)) == "false"
    assert fmt(np.int64(3)) == "3"
    assert fmt(0.1) == "0.1"
    assert float(fmt(1 / 3)) == 1 / 3
    assert fmt("lemma") == "lemma"


def test_bundle_roundtrip(tmp_path):
    m = make_flat_torus(5)
    b = flat_torus_bundle(m, 2)
    write_bundle(tmp_path / "b.txt", b)
    back = read_bundle(tmp_path / "b.txt", m)
    np.testing.assert_array_equal(back.transports, b.transports)


def test_bundle_reversed_lines_conjugate(tmp_path):
    m = make_flat_torus(3)
    b = flat_torus_bundle(m, 1)
    lines = []
    for (i, j), z in zip(m.edges, b.transports):
        w = np.conj(z)
        lines.append(f"{j} {i} {float(w.real)!r} {float(w.imag)!r}")
    (tmp_path / "b.txt").write_text("\n".join(lines) + "\n")
    np.testing.assert_array_equal(read_bundle(tmp_path / "b.txt", m).transports, b.transports)


def test_bundle_errors(tmp_path):
    m = make_flat_torus(3)
    (tmp_path / "short.txt").write_text("0 1 1.0 0.0\n")
    with pytest.raises(ValueError):
        read_bundle(tmp_path / "short.txt", m)
    write_bundle(tmp_path / "b.txt", flat_torus_bundle(m, 0))
    lines = (tmp_path / "b.txt").read_text().splitlines()
    lines[0] = "7 7 1.0 0.0"
    (tmp_path / "bad.txt").write_text("\n".join(lines))
    with pytest.raises(ValueError, match=":1:"):
        read_bundle(tmp_path / "bad.txt", m)


def test_curvature_roundtrip(tmp_path):
    m = make_flat_torus(4)
    om = face_curvature(flat_torus_bundle(m, 1))
    write_curvature_csv(tmp_path / "c.csv", om)
    assert _header(tmp_path / "c.csv") == ["face_id", "omega"]
    np.testing.assert_array_equal(read_curvature_csv(tmp_path / "c.csv"), om)


def test_current_roundtrip(tmp_path):
    z = ZeroCurrent({3: 1, 7: -2}, 10)
    write_current_csv(tmp_path / "z.csv", z)
    assert _header(tmp_path / "z.csv") == ["face_id", "index"]
    assert read_current_csv(tmp_path / "z.csv", 10) == z


def test_eigenvalues_and_estimate(tmp_path):
    write_eigenvalues_csv(tmp_path / "e.csv", [0.5, 1.25])
    rows = list(csv.reader(open(tmp_path / "e.csv")))
    assert rows == [["index", "lambda"], ["0", "0.5"], ["1", "1.25"]]

    m = make_flat_torus(6)
    b = flat_torus_bundle(m, 1)
    from zerocurrents.bundle import connection_laplacian
    from zerocurrents.mesh import laplacian_weights
    from zerocurrents.spectral import eigensolve

    spec = eigensolve(connection_laplacian(b, laplacian_weights(m)), 20)
    est = estimate_zero_current(b, spec, 0.05, np.ones(m.n_faces), 10, 0)
    write_estimate_json(tmp_path / "est.json", est)
    js = json.loads((tmp_path / "est.json").read_text())
    assert js == {"mean": 1.0, "stderr": 0.0, "n": 10, "degenerate_resamples": 0}

    write_samples_csv(tmp_path / "s.csv", [("a", est), ("b", est)])
    rows = list(csv.DictReader(open(tmp_path / "s.csv")))
    assert list(rows[0]) == ["row", "sample_index", "pairing", "n_zeros_plus", "n_zeros_minus"]
    assert len(rows) == 20
    assert all(int(r["n_zeros_plus"]) - int(r["n_zeros_minus"]) == 1 for r in rows)


def test_ply(tmp_path):
    m = make_flat_torus(3)
    write_ply(tmp_path / "d.ply", m, np.arange(m.n_faces, dtype=float))
    lines = (tmp_path / "d.ply").read_text().splitlines()
    end = lines.index("end_header")
    assert lines[0] == "ply" and f"element face {m.n_faces}" in lines
    assert len(lines) == end + 1 + m.n_vertices + m.n_faces
    assert lines[-1].split()[-1] == repr(float(m.n_faces - 1))
    with pytest.raises(ValueError):
        write_ply(tmp_path / "x.ply", m, np.ones(3))
