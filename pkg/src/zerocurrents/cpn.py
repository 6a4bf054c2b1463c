"""Integral geometry in finite-dimensional complex projective space.

Random hyperplanes are drawn from the standard complex Gaussian on ``C^(n+1)``,
whose projective class is uniform on ``CP^n``. Intersection currents of an
immersed mesh with those hyperplanes are compared with the pulled back
Fubini-Study area, which is read off the Pancharatnam phase of every face
(half the face holonomy of the dual tautological connection).
"""

from __future__ import annotations

import math

import numpy as np

from .bundle import face_curvature, pancharatnam_pullback
from .sampling import MAX_RESAMPLES, _complex_normal, _draw_zero_samples, estimate_from_samples
from .spectral import CPnImmersion
from .zeros import Hyperplane, winding_indices

__all__ = [
    "cpn_volume",
    "uniform_hyperplane",
    "veronese_immersion",
    "spinor_power_map",
    "constant_immersion",
    "fs_area_integral",
    "sample_intersections",
    "mc_intersection_expectation",
    "degree_via_preimages",
    "random_unitary",
]


def cpn_volume(n):
    """Fubini-Study volume ``pi^n / n!`` of ``CP^n``."""
    return math.pi**n / math.factorial(n)


def uniform_hyperplane(n, rng):
    """Hyperplane with standard complex Gaussian normal in ``C^(n+1)``."""
    if n < 1:
        raise ValueError(f"ambient dimension must be >= 1, got {n}")
    while True:
        psi = _complex_normal(rng, n + 1)
        if np.linalg.norm(psi) > 1e-300:
            return Hyperplane(psi)


def _spinors(mesh):
    x, y, z = (mesh.vertices / np.linalg.norm(mesh.vertices, axis=1, keepdims=True)).T
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    return np.cos(theta / 2), np.sin(theta / 2) * np.exp(1j * phi)


def veronese_immersion(mesh, d):
    """Degree ``d`` rational normal curve ``S^2 = CP^1 -> CP^d``.

    Components ``sqrt(binom(d, k)) z0^(d-k) z1^k`` of the spinor
    ``(cos(theta/2), sin(theta/2) e^(i phi))``; unit norm by the binomial theorem.
    """
    if int(d) != d or d < 1:
        raise ValueError(f"degree must be a positive integer, got {d!r}")
    d = int(d)
    z0, z1 = _spinors(mesh)
    k = np.arange(d + 1)
    coef = np.sqrt([math.comb(d, kk) for kk in k])
    h = coef * z0[:, None] ** (d - k) * z1[:, None] ** k
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    return CPnImmersion(mesh, h)


def spinor_power_map(mesh, d):
    """Map ``[z0 : z1] -> [z0^d : z1^d]`` of ``CP^1`` to itself (degree ``d``)."""
    z0, z1 = _spinors(mesh)
    h = np.column_stack([z0**d, z1**d])
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    return CPnImmersion(mesh, h)


def constant_immersion(mesh, n=1, point=None):
    v = np.zeros(n + 1, dtype=complex)
    v[0] = 1.0
    if point is not None:
        v = np.asarray(point, dtype=complex)
        v = v / np.linalg.norm(v)
    return CPnImmersion(mesh, np.tile(v, (mesh.n_vertices, 1)))


def random_unitary(n, rng):
    """Haar-random unitary of size ``n`` (QR of a complex Gaussian matrix)."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def fs_area_integral(immersion, eta, pullback=None):
    """``(1/pi) int_M f^* omega_K eta`` from face Pancharatnam phases.

    The pulled back Kaehler form integrates over a face to half its
    holonomy, so the result is ``(1/pi) sum_f (Omega_f / 2) eta_f``.
    """
    if pullback is None:
        pullback = pancharatnam_pullback(immersion)
    omega = face_curvature(pullback)
    return float(np.dot(omega / 2.0, eta) / np.pi)


def sample_intersections(immersion, n_samples, master_seed, workers=1):
    """Intersection indices with ``n_samples`` uniform hyperplanes, shape (n, F).

    Sample ``s`` uses the hyperplane ``uniform_hyperplane(n, sample_rng(seed, s))``.
    """
    pullback = pancharatnam_pullback(immersion)
    omega = face_curvature(pullback)
    H = immersion.vectors.T

    return _draw_zero_samples(
        n_samples,
        master_seed,
        immersion.n + 1,
        lambda c: np.conj(c) @ H,
        lambda values: winding_indices(pullback, values, omega=omega),
        workers,
        MAX_RESAMPLES,
    )


def mc_intersection_expectation(immersion, eta, n_samples, master_seed, workers=1):
    """Monte Carlo mean of ``<sigma_{f,H} | eta>`` over uniform hyperplanes ``H``."""
    samples = sample_intersections(immersion, n_samples, master_seed, workers)
    return estimate_from_samples(samples, eta)


def degree_via_preimages(immersion, n_samples, master_seed, workers=1):
    """Mean signed preimage count of uniform points of ``CP^1``.

    A point ``y`` of ``CP^1`` is the hyperplane orthogonal to a Gaussian
    vector, so this is the intersection machinery with ``eta = 1``.
    """
    if immersion.n != 1:
        raise ValueError("degree_via_preimages needs a map into CP^1")
    samples = sample_intersections(immersion, n_samples, master_seed, workers)
    return estimate_from_samples(samples, np.ones(immersion.mesh.n_faces))

