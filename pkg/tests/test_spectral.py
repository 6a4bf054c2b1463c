import numpy as np
import pytest

from zerocurrents.bundle import flat_torus_bundle, gauge_transform, prescribed_curvature_bundle, bump_curvature
from zerocurrents.errors import TruncationError
from zerocurrents.mesh import make_flat_torus
from zerocurrents.spectral import (
    curvature_convergence_report,
    eigensolve,
    fubini_study_distance,
    heat_apply,
    heat_kernel,
    heat_kernel_embedding,
    truncation_rank,
)

from conftest import solve


def test_trivial_ground_state(sphere2_trivial):
    _, _, spec = sphere2_trivial
    assert abs(spec.eigenvalues[0]) < 1e-8
    psi0 = spec.eigenvectors[:, 0]
    np.testing.assert_allclose(np.abs(psi0), np.abs(psi0).mean(), rtol=1e-8)


def test_contracts(torus16_d1):
    _, pair, spec = torus16_d1
    A = pair.stiffness
    scale = abs(A).sum(axis=1).max()
    assert spec.residuals(pair).max() <= 1e-8 * scale
    assert spec.orthonormality_error() <= 1e-10
    assert spec.eigenvalues[0] >= -1e-8
    assert np.all(np.diff(spec.eigenvalues) >= -1e-12)


def test_landau_levels(torus16_d1):
    # lowest level of B = 2 pi on the unit torus sits near B; record the gap
    _, _, spec = torus16_d1
    lam = spec.eigenvalues
    assert 0 < lam[0] < 2 * np.pi
    assert lam[1] / lam[0] > 2.5


def test_gauge_invariant_eigenvalues(rng):
    b = flat_torus_bundle(make_flat_torus(8), 2)
    u = np.exp(2j * np.pi * rng.random(b.mesh.n_vertices))
    _, s1 = solve(b, k=10)
    _, s2 = solve(gauge_transform(b, u), k=10)
    np.testing.assert_allclose(s1.eigenvalues, s2.eigenvalues, atol=1e-10)


def test_iterative_matches_dense():
    b = prescribed_curvature_bundle(make_flat_torus(12), bump_curvature(make_flat_torus(12), 1, 0.2))
    pair, dense = solve(b, k=12)
    it = eigensolve(pair, 12, dense_limit=10)
    np.testing.assert_allclose(it.eigenvalues, dense.eigenvalues, rtol=1e-9, atol=1e-9)
    assert it.orthonormality_error() <= 1e-10


def test_eigensolve_rejects_bad_k(torus16_d1):
    _, pair, _ = torus16_d1
    with pytest.raises(ValueError):
        eigensolve(pair, 0)
    with pytest.raises(ValueError):
        eigensolve(pair, pair.stiffness.shape[0] + 1)


def test_heat_identity_at_zero(torus16_d1, rng):
    _, _, spec = torus16_d1
    psi = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    np.testing.assert_allclose(heat_apply(spec, 0.0, psi), psi, atol=1e-10)


def test_heat_on_eigenvector(torus16_d1):
    _, _, spec = torus16_d1
    t = 0.03
    for i in (0, 5, 40):
        psi = spec.eigenvectors[:, i]
        np.testing.assert_allclose(heat_apply(spec, t, psi), np.exp(-t * spec.eigenvalues[i]) * psi, atol=1e-12)


def test_heat_rejects_negative_time(torus16_d1):
    _, _, spec = torus16_d1
    with pytest.raises(ValueError):
        heat_apply(spec, -1.0, spec.eigenvectors[:, 0])


def test_embedding_gram_is_heat_kernel(torus16_d1, rng):
    _, _, spec = torus16_d1
    t = 0.02
    emb = heat_kernel_embedding(spec, t)
    np.testing.assert_allclose(np.linalg.norm(emb.vectors, axis=1), 1.0, atol=1e-12)
    K2 = heat_kernel(spec, 2 * t)
    p = rng.integers(0, 256, 50)
    q = rng.integers(0, 256, 50)
    gram = np.einsum("ka,ka->k", emb.vectors[p], np.conj(emb.vectors[q]))
    # <h_p, h_q> = K_2t(q, p) / sqrt(K_2t(p, p) K_2t(q, q))
    expect = K2[q, p] / np.sqrt(K2[p, p].real * K2[q, q].real)
    np.testing.assert_allclose(gram, expect, rtol=1e-10, atol=1e-12)


def test_embedding_collapses_at_large_t():
    b = prescribed_curvature_bundle(make_flat_torus(10), bump_curvature(make_flat_torus(10), 1, 0.15))
    _, spec = solve(b)
    lam = spec.eigenvalues
    t = np.log(1e11) / (lam[1] - lam[0])
    h = heat_kernel_embedding(spec, t).vectors
    assert fubini_study_distance(h[:, None, :], h[None, :, :]).max() < 1e-4


def test_embedding_truncation_error(torus16_d1):
    _, _, spec = torus16_d1
    narrow = spec.truncate(1)
    # the ground state alone vanishes nowhere on the magnetic torus, so force a zero
    X = narrow.eigenvectors.copy()
    X[3] = 0
    from zerocurrents.spectral import SpectralData

    with pytest.raises(TruncationError):
        heat_kernel_embedding(SpectralData(narrow.eigenvalues, X, narrow.mass, narrow.mesh), 0.1)


def test_trivial_bundle_pullback_flat(sphere2_trivial):
    b, _, spec = sphere2_trivial
    rows = curvature_convergence_report(b, spec, [0.5, 0.1, 0.02])
    for r in rows:
        assert r.sup_err < 1e-10
        assert r.chern == 0


def test_convergence_trend(torus16_d1):
    b, _, spec = torus16_d1
    h = b.mesh.spacing
    ts = [0.5, 0.25, 0.1, 0.05, 8 * h * h, 0.025, 4 * h * h]
    rows = curvature_convergence_report(b, spec, ts)
    errs = [r.sup_err for r in rows]
    assert all(b_ <= 1.05 * a for a, b_ in zip(errs, errs[1:]))
    assert all(r.chern == 1 for r in rows if r.reliable)


def test_convergence_marks_floor(torus16_d1):
    b, _, spec = torus16_d1
    h = b.mesh.spacing
    (row,) = curvature_convergence_report(b, spec, [0.5 * h * h])
    assert not row.reliable
    assert "floor" in row.note


def test_truncation_rank():
    lam = np.array([1.0, 2.0, 10.0, 40.0])
    assert truncation_rank(lam, 1.0) == 3
    assert truncation_rank(lam, 0.1) == 4
    assert truncation_rank(lam, 1.0, tol=np.exp(-5)) == 2
