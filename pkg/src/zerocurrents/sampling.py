"""Gaussian random sections and Monte Carlo estimates of expected zero currents.

Each sample draws from its own counter-based Philox stream keyed by
``(master_seed, sample_index)``. Work is split into fixed-size chunks so the
arithmetic performed for a sample never depends on the number of workers, and
partial results are reassembled in sample order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bundle import face_curvature
from .errors import DegenerateMeasureError
from .zeros import winding_indices

__all__ = [
    "GROUND",
    "CurrentEstimate",
    "ZeroSamples",
    "sample_rng",
    "sample_section",
    "sample_ground_state",
    "sample_zero_currents",
    "estimate_zero_current",
    "estimate_from_samples",
    "curvature_target",
    "run_chunked",
]

GROUND = "GROUND"
CHUNK = 128
MAX_RESAMPLES = 100


def sample_rng(master_seed, index):
    """Independent generator for sample ``index`` (Philox key = seed, index)."""
    key = (int(master_seed) % 2**64) << 64 | (int(index) % 2**64)
    return np.random.Generator(np.random.Philox(key=key))


def _complex_normal(rng, k):
    a = rng.standard_normal(k)
    b = rng.standard_normal(k)
    return a + 1j * b


def section_weights(spec, t, normalized=False):
    """Per-eigenpair amplitude of the law ``mu_t``.

    ``exp(-t lambda_i)``; with ``normalized`` the weights are divided by
    ``exp(-t lambda_0)``, which leaves every zero current unchanged.
    """
    if t == GROUND:
        w = np.zeros(spec.k)
        w[spec.ground_indices()] = 1.0
        return w
    t = float(t)
    if not t > 0:
        raise ValueError(f"time must be positive, got {t!r}")
    shift = spec.eigenvalues[0] if normalized else 0.0
    return np.exp(-t * (spec.eigenvalues - shift))


def sample_section(spec, t, rng, normalized=False):
    """Draw ``psi = sum_i exp(-t lambda_i) (a_i + i b_i) psi_i`` with standard normal ``a, b``."""
    w = section_weights(spec, t, normalized)
    return spec.synthesize(w * _complex_normal(rng, spec.k))


def sample_ground_state(spec, rng):
    """Gaussian element of the ground eigenspace."""
    idx = spec.ground_indices()
    c = _complex_normal(rng, len(idx))
    return spec.eigenvectors[:, idx] @ c


@dataclass(frozen=True)
class CurrentEstimate:
    mean_pairing: float
    stderr: float
    n_samples: int
    n_degenerate_resamples: int
    face_mean_density: np.ndarray
    pairings: np.ndarray | None = None
    n_plus: np.ndarray | None = None
    n_minus: np.ndarray | None = None

    def to_json(self):
        return {
            "mean": self.mean_pairing,
            "stderr": self.stderr,
            "n": self.n_samples,
            "degenerate_resamples": self.n_degenerate_resamples,
        }


@dataclass(frozen=True)
class ZeroSamples:
    """Face indices of ``n`` independent samples, shape (n, F)."""

    indices: np.ndarray
    resamples: np.ndarray

    @property
    def n_samples(self):
        return len(self.indices)


def run_chunked(n_samples, chunk_fn, workers=1, chunk=CHUNK):
    """Evaluate ``chunk_fn(start, stop)`` over fixed chunks and concatenate in order."""
    bounds = [(s, min(s + chunk, n_samples)) for s in range(0, n_samples, chunk)]
    if workers <= 1 or len(bounds) == 1:
        parts = [chunk_fn(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: chunk_fn(*ab), bounds))
    return parts


def _draw_zero_samples(n_samples, master_seed, k, values_fn, extract_fn, workers, max_resamples):
    """Shared draw / extract / resample loop.

    ``values_fn`` maps complex coefficients (B, k) to field values (B, V);
    ``extract_fn`` maps values to ``(indices, degenerate)``.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")

    def chunk_fn(start, stop):
        rngs = [sample_rng(master_seed, s) for s in range(start, stop)]
        coeffs = np.array([_complex_normal(r, k) for r in rngs])
        idx, degenerate = extract_fn(values_fn(coeffs))
        resamples = np.zeros(stop - start, dtype=np.int64)
        for row in np.flatnonzero(degenerate):
            while True:
                resamples[row] += 1
                if resamples[row] > max_resamples:
                    raise DegenerateMeasureError(
                        f"sample {start + row}: more than {max_resamples} consecutive degenerate draws"
                    )
                c = _complex_normal(rngs[row], k)
                one, bad = extract_fn(values_fn(c[None, :]))
                if not bad[0]:
                    idx[row] = one[0]
                    break
        return idx, resamples

    parts = run_chunked(n_samples, chunk_fn, workers)
    return ZeroSamples(
        np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    )


def sample_zero_currents(bundle, spec, t, n_samples, master_seed, workers=1, max_resamples=MAX_RESAMPLES):
    """Zero currents of ``n_samples`` sections drawn from ``mu_t`` (or the ground law)."""
    w = section_weights(spec, t, normalized=True)
    keep = spec.ground_indices() if t == GROUND else np.arange(spec.k)
    basis = (spec.eigenvectors[:, keep] * w[keep]).T
    omega = face_curvature(bundle)

    return _draw_zero_samples(
        n_samples,
        master_seed,
        len(keep),
        lambda c: c @ basis,
        lambda values: winding_indices(bundle, values, omega=omega),
        workers,
        max_resamples,
    )


def estimate_from_samples(samples, eta):
    """Monte Carlo mean of ``<zeta | eta>`` over precomputed samples."""
    eta = np.asarray(eta, dtype=float)
    idx = samples.indices
    if idx.shape[1] != len(eta):
        raise ValueError("test form and samples live on different meshes")
    pairings = idx.astype(float) @ eta
    n = len(pairings)
    mean = float(np.mean(pairings))
    stderr = float(np.std(pairings, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return CurrentEstimate(
        mean_pairing=mean,
        stderr=stderr,
        n_samples=n,
        n_degenerate_resamples=int(samples.resamples.sum()),
        face_mean_density=idx.mean(axis=0),
        pairings=pairings,
        n_plus=np.where(idx > 0, idx, 0).sum(axis=1),
        n_minus=np.where(idx < 0, -idx, 0).sum(axis=1),
    )


def estimate_zero_current(bundle, spec, t, eta, n_samples, master_seed, workers=1):
    """Monte Carlo estimate of the expected pairing ``E_{mu_t} <zeta | eta>``.

    ``t`` may be a positive time or :data:`GROUND` for the ground state law.
    """
    samples = sample_zero_currents(bundle, spec, t, n_samples, master_seed, workers)
    return estimate_from_samples(samples, eta)


def curvature_target(curv, eta):
    """``(1 / 2 pi) sum_f omega_f eta_f``; equals the Chern number for ``eta = 1``."""
    return float(np.dot(curv, eta) / (2.0 * np.pi))
