"""Experiment configurations and the end-to-end runner behind the command line.

A configuration is a flat ``key = value`` file::

    experiment = limit0
    geometry   = flat_torus 24
    bundle     = bump 2 0.15
    t_list     = 16h2, 8h2, 4h2
    n_samples  = 2000
    master_seed = 1
    slack_t    = 16

Times are plain numbers, multiples of the squared mesh spacing (``4h2``),
``gap(eps)`` for the time at which ``exp(-t (lambda_1 - lambda_0)) = eps``, or
``GROUND`` for the ground state law. Every report row carries the fields needed
to recompute its pass flag: ``pass = abs_gap <= 3 * lhs_stderr + slack + roundoff``,
where ``roundoff = 1e-9 * max(1, |rhs|)`` absorbs floating point summation error
in exact identities.
"""

from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io
from .bundle import (
    bump_curvature,
    chern_number,
    connection_laplacian,
    face_curvature,
    flat_torus_bundle,
    pancharatnam_pullback,
    prescribed_curvature_bundle,
)
from .cpn import fs_area_integral, sample_intersections, spinor_power_map, veronese_immersion
from .errors import NumericalContractError
from .mesh import (
    bump_form,
    constant_form,
    half_indicator,
    laplacian_weights,
    make_flat_torus,
    make_sphere,
    read_obj,
)
from .sampling import (
    GROUND,
    _complex_normal,
    curvature_target,
    estimate_from_samples,
    sample_rng,
    sample_zero_currents,
)
from .spectral import (
    DENSE_LIMIT,
    curvature_convergence_report,
    eigensolve,
    heat_kernel_embedding,
    truncation_rank,
)
from .zeros import winding_indices, zero_current

__all__ = [
    "EXPERIMENTS",
    "SCHEMA",
    "ConfigError",
    "TimeSpec",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "bundled_config",
    "run_experiment",
    "row_passes",
]

SCHEMA = 1
EXPERIMENTS = ("limit0", "limit_inf", "finite_t", "theorem2", "theorem4", "lemma", "coarea")
SAMPLING = {"limit0", "limit_inf", "finite_t", "theorem2", "lemma", "coarea"}
TIMED = {"limit0", "limit_inf", "finite_t", "theorem4", "lemma"}
JITTER = 1.05
ROUNDOFF = 1e-9
TRUNC_TOL = 1e-12

KEYS = {
    "experiment",
    "geometry",
    "bundle",
    "t_list",
    "n_samples",
    "master_seed",
    "k_override",
    "output_dir",
    "slack",
    "slack_t",
    "slack_rel",
    "c_floor",
    "refine",
    "refine_t",
    "bump_center",
    "record_wall_time",
}


class ConfigError(ValueError):
    """Invalid configuration; ``str(err)`` is a ``path:line: message`` diagnostic."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.message = message
        super().__init__(f"{path}:{line}: {message}")


@dataclass(frozen=True)
class TimeSpec:
    """One ``t_list`` entry: ``kind`` is ``abs``, ``h2``, ``gap`` or ``ground``."""

    kind: str
    value: float = 0.0
    label: str = ""

    def resolve(self, h, eigenvalues=None):
        if self.kind == "abs":
            return self.value
        if self.kind == "h2":
            return self.value * h * h
        if self.kind == "gap":
            gap = eigenvalues[1] - eigenvalues[0]
            if not gap > 0:
                raise NumericalContractError("gap(...) time requested but lambda_0 is not simple")
            return math.log(1.0 / self.value) / gap
        return GROUND


_TIME_RE = re.compile(r"^(?P<c>[0-9.eE+-]+)\s*h\^?2$")
_GAP_RE = re.compile(r"^gap\((?P<eps>[0-9.eE+-]+)\)$")


def _parse_time(tok):
    if tok.upper() == GROUND:
        return TimeSpec("ground", label=GROUND)
    m = _TIME_RE.match(tok)
    if m:
        c = float(m["c"])
        if not c > 0:
            raise ValueError(f"time {tok!r} must be positive")
        return TimeSpec("h2", c, tok)
    m = _GAP_RE.match(tok)
    if m:
        eps = float(m["eps"])
        if not 0 < eps < 1:
            raise ValueError(f"gap tolerance in {tok!r} must lie in (0, 1)")
        return TimeSpec("gap", eps, tok)
    t = float(tok)
    if not (t > 0 and math.isfinite(t)):
        raise ValueError(f"time {tok!r} must be positive and finite")
    return TimeSpec("abs", t, tok)


def _split(value):
    return [tok for tok in re.split(r"[,\s]+", value.strip().strip("[]")) if tok]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    geometry: tuple
    bundle: tuple
    t_list: tuple = ()
    n_samples: int = 0
    master_seed: int = 0
    k_override: int | None = None
    output_dir: Path = Path("out")
    slack: tuple = (0.0,)
    slack_t: float = 0.0
    slack_rel: float = 0.0
    c_floor: float = 1.0
    refine: tuple = ()
    refine_t: float | None = None
    bump_center: tuple | None = None
    record_wall_time: bool = False
    source: str = "<string>"
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def with_seed(self, seed):
        return replace(self, master_seed=_parse_seed(str(seed)))

    def slack_for(self, i, t, rhs):
        """Declared slack of the ``i``-th time at resolved time ``t``."""
        base = self.slack[i] if len(self.slack) > 1 else self.slack[0]
        tt = t if isinstance(t, float) else 0.0
        return base + self.slack_t * tt + self.slack_rel * abs(rhs)


def _parse_seed(text):
    seed = int(text, 0)
    if not 0 <= seed < 2**64:
        raise ValueError("master_seed must fit in an unsigned 64-bit integer")
    return seed


def parse_config(text, source="<string>"):
    """Parse and validate configuration text; raises :class:`ConfigError`."""
    raw, lines = {}, {}
    n_lines = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        n_lines = lineno
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(source, lineno, f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(source, lineno, f"unknown key {key!r}")
        if key in raw:
            raise ConfigError(source, lineno, f"duplicate key {key!r} (first set on line {lines[key]})")
        raw[key], lines[key] = value, lineno
    end = n_lines + 1

    def fail(key, msg):
        raise ConfigError(source, lines.get(key, end), msg)

    def need(key):
        if key not in raw or not raw[key]:
            fail(key, f"missing required key {key!r}")
        return raw[key]

    def parsed(key, conv, default=None):
        if key not in raw:
            return default
        try:
            return conv(raw[key])
        except (ValueError, TypeError) as exc:
            fail(key, f"bad value for {key!r}: {exc}")

    experiment = need("experiment")
    if experiment not in EXPERIMENTS:
        fail("experiment", f"experiment must be one of {', '.join(EXPERIMENTS)}; got {experiment!r}")

    geo = _split(need("geometry"))
    if geo[0] == "flat_torus" and len(geo) == 2:
        geometry = ("flat_torus", parsed("geometry", lambda _: int(geo[1])))
        if geometry[1] < 2:
            fail("geometry", "flat_torus needs N >= 2")
    elif geo[0] == "sphere" and len(geo) == 2:
        geometry = ("sphere", parsed("geometry", lambda _: int(geo[1])))
        if geometry[1] < 0:
            fail("geometry", "sphere needs a subdivision level >= 0")
    elif geo[0] == "obj" and len(geo) == 2:
        geometry = ("obj", geo[1])
    else:
        fail("geometry", f"geometry must be 'flat_torus N', 'sphere s' or 'obj PATH'; got {raw['geometry']!r}")

    bun = _split(need("bundle"))
    if bun[0] == "flat" and len(bun) == 2:
        bundle = ("flat", parsed("bundle", lambda _: int(bun[1])))
    elif bun[0] == "bump" and len(bun) == 3:
        bundle = ("bump", parsed("bundle", lambda _: int(bun[1])), parsed("bundle", lambda _: float(bun[2])))
        if not bundle[2] > 0:
            fail("bundle", "bump width must be positive")
    elif bun[0] == "pullback" and len(bun) >= 2:
        bundle = ("pullback", parsed("bundle", lambda _: tuple(int(x) for x in bun[1:])))
        if min(bundle[1]) < 1:
            fail("bundle", "pullback degrees must be >= 1")
    else:
        fail("bundle", f"bundle must be 'flat d', 'bump d sigma' or 'pullback d [d ...]'; got {raw['bundle']!r}")

    # consistency between experiment, geometry and bundle
    if experiment in ("theorem2", "coarea"):
        if geometry[0] != "sphere":
            fail("geometry", f"{experiment} requires sphere geometry")
        if bundle[0] != "pullback":
            fail("bundle", f"{experiment} requires 'bundle = pullback d'")
    elif bundle[0] == "pullback":
        fail("bundle", f"pullback bundles are only used by theorem2 and coarea, not {experiment}")
    if bundle[0] == "flat" and geometry[0] != "flat_torus":
        fail("bundle", "flat bundle requires flat_torus geometry")

    t_list = parsed("t_list", lambda v: tuple(_parse_time(tok) for tok in _split(v)), ())
    if experiment in TIMED and not t_list:
        fail("t_list", f"{experiment} requires a non-empty t_list")
    if experiment not in TIMED and t_list:
        fail("t_list", f"{experiment} does not use t_list")
    if any(ts.kind == "ground" for ts in t_list) and experiment != "limit_inf":
        fail("t_list", "GROUND is only valid for limit_inf")

    n_samples = parsed("n_samples", int, 0)
    if experiment in SAMPLING and n_samples < 1:
        fail("n_samples", "n_samples must be >= 1")
    master_seed = parsed("master_seed", _parse_seed, 0)
    k_override = parsed("k_override", int)
    if k_override is not None and k_override < 1:
        fail("k_override", "k_override must be >= 1")

    slack = parsed("slack", lambda v: tuple(float(x) for x in _split(v)), (0.0,))
    if len(slack) not in (1, max(1, len(t_list))):
        fail("slack", f"slack needs 1 or {len(t_list)} values, got {len(slack)}")
    slack_t = parsed("slack_t", float, 0.0)
    slack_rel = parsed("slack_rel", float, 0.0)
    if min(slack) < 0 or slack_t < 0 or slack_rel < 0:
        fail("slack", "slack terms must be non-negative")
    c_floor = parsed("c_floor", float, 1.0)
    if not c_floor > 0:
        fail("c_floor", "c_floor must be positive")

    refine = parsed("refine", lambda v: tuple(int(x) for x in _split(v)), ())
    refine_t = parsed("refine_t", float)
    if refine and experiment != "theorem4":
        fail("refine", "refine is only used by theorem4")
    if refine and (geometry[0] != "flat_torus" or refine_t is None or min(refine) < 2):
        fail("refine", "refine needs flat_torus geometry, grid sizes >= 2 and refine_t")
    bump_center = parsed("bump_center", lambda v: tuple(float(x) for x in _split(v)))
    if bump_center is not None and len(bump_center) not in (2, 3):
        fail("bump_center", "bump_center needs 2 or 3 coordinates")
    record_wall_time = parsed("record_wall_time", lambda v: {"true": True, "false": False}[v.lower()], False)

    return ExperimentConfig(
        experiment=experiment,
        geometry=geometry,
        bundle=bundle,
        t_list=t_list,
        n_samples=n_samples,
        master_seed=master_seed,
        k_override=k_override,
        output_dir=Path(raw.get("output_dir", f"out/{experiment}")),
        slack=slack,
        slack_t=slack_t,
        slack_rel=slack_rel,
        c_floor=c_floor,
        refine=refine,
        refine_t=refine_t,
        bump_center=bump_center,
        record_wall_time=record_wall_time,
        source=str(source),
        lines=lines,
    )


def bundled_config(name):
    """Path of a configuration shipped with the package (``None`` if absent).

    ``name`` may omit the ``.cfg`` suffix.
    """
    root = Path(__file__).parent / "configs"
    for p in (root / name, root / f"{name}.cfg"):
        if p.is_file():
            return p
    return None


def load_config(path):
    path = Path(path)
    if not path.is_file() and not path.parent.name and bundled_config(path.name) is not None:
        path = bundled_config(path.name)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(path, 0, f"cannot read config: {exc.strerror or exc}") from exc
    return parse_config(text, source=path)


# -- building blocks ------------------------------------------------------


def _mesh(cfg):
    kind, arg = cfg.geometry
    if kind == "flat_torus":
        return make_flat_torus(arg)
    if kind == "sphere":
        return make_sphere(arg)
    try:
        return read_obj(arg)
    except (OSError, ValueError) as exc:
        raise ConfigError(cfg.source, cfg.lines.get("geometry", 0), f"cannot load mesh {arg!r}: {exc}") from exc


def _center(cfg, mesh):
    if cfg.bump_center is not None:
        c = np.zeros(3)
        c[: len(cfg.bump_center)] = cfg.bump_center
        return c
    if mesh.grid_size is not None:
        return np.array([0.25, 0.5, 0.0])
    if cfg.geometry[0] == "sphere":
        return np.array([0.0, 0.0, 1.0])
    return mesh.vertices[0].copy()


def _antipode(mesh, c):
    if mesh.grid_size is not None:
        return np.array([(c[0] + 0.5) % 1.0, c[1], 0.0])
    return 2.0 * mesh.vertices.mean(axis=0) - c


def _forms(cfg, mesh):
    """Test forms: constant, half-domain indicator, bump aligned and anti-aligned with the curvature bump."""
    forms = {"one": constant_form(mesh), "half": half_indicator(mesh)}
    if cfg.bundle[0] == "bump":
        width = cfg.bundle[2]
    else:
        width = 0.15 if mesh.grid_size is not None else 0.5
    c = _center(cfg, mesh)
    forms["bump"] = bump_form(mesh, c, width)
    forms["antibump"] = bump_form(mesh, _antipode(mesh, c), width)
    return forms


def _bundle(cfg, mesh):
    kind = cfg.bundle[0]
    if kind == "flat":
        return flat_torus_bundle(mesh, cfg.bundle[1])
    _, d, width = cfg.bundle
    target = bump_curvature(mesh, d, width, center=_center(cfg, mesh))
    return prescribed_curvature_bundle(mesh, target)


def _spectrum(cfg, pair, h, t_min):
    """Eigenpairs retained by the truncation rule (or ``k_override``)."""
    V = pair.stiffness.shape[0]
    if cfg.k_override is not None:
        return eigensolve(pair, min(cfg.k_override, V))
    if V <= DENSE_LIMIT:
        spec = eigensolve(pair, V)
        if t_min is None:
            return spec
        return spec.truncate(truncation_rank(spec.eigenvalues, t_min, TRUNC_TOL))
    k = 64
    while True:
        k = min(k, V)
        spec = eigensolve(pair, k)
        if k == V or t_min is None or truncation_rank(spec.eigenvalues, t_min, TRUNC_TOL) < k:
            return spec
        k *= 2


def _row(cfg, label, form, t, t_label, lhs, stderr, rhs, slack, wall, **extra):
    gap = abs(lhs - rhs)
    roundoff = ROUNDOFF * max(1.0, abs(rhs))
    row = {
        "experiment": cfg.experiment,
        "label": label,
        "form": form,
        "t": t if isinstance(t, float) else (None if t is None else str(t)),
        "t_label": t_label,
        "lhs": lhs,
        "lhs_stderr": stderr,
        "rhs": rhs,
        "abs_gap": gap,
        "slack": slack,
        "roundoff": roundoff,
        "pass": bool(gap <= 3.0 * stderr + slack + roundoff),
        "wall_time": wall if cfg.record_wall_time else None,
    }
    row.update(extra)
    return row


def row_passes(row):
    """Recompute a row's pass flag from its own fields."""
    if row.get("reliable") is False:
        return True
    if row["abs_gap"] is None:
        return False
    return row["abs_gap"] <= 3.0 * row["lhs_stderr"] + row["slack"] + row["roundoff"]


def _monotone(values, jitter=JITTER):
    """``values`` ordered by decreasing t must not grow by more than ``jitter`` per step."""
    return all(b <= jitter * a for a, b in zip(values, values[1:]))


class _Run:
    def __init__(self, cfg, workers):
        self.cfg = cfg
        self.workers = max(1, int(workers))
        self.rows = []
        self.checks = []
        self.info = {}
        self.sample_tables = []
        self.density = None
        self.eigenvalues = None
        self.curvature = None
        self.convergence = None
        self.mesh = None

    def add_estimate(self, label, est):
        self.sample_tables.append((label, est))


def _times(cfg, h, spec):
    return [ts.resolve(h, spec.eigenvalues) for ts in cfg.t_list]


def _numeric_t_min(cfg, h):
    vals = [ts.resolve(h) for ts in cfg.t_list if ts.kind in ("abs", "h2")]
    return min(vals) if vals else None


def _setup_bundle(run):
    cfg = run.cfg
    mesh = _mesh(cfg)
    bundle = _bundle(cfg, mesh)
    pair = connection_laplacian(bundle, laplacian_weights(mesh))
    h = mesh.spacing
    t_min = _numeric_t_min(cfg, h)
    spec = _spectrum(cfg, pair, h, t_min)
    omega = face_curvature(bundle)
    run.mesh = mesh
    run.eigenvalues = spec.eigenvalues
    run.curvature = omega
    run.density = omega / (2.0 * np.pi)
    lam = spec.eigenvalues
    run.info.update(
        n_vertices=mesh.n_vertices,
        n_faces=mesh.n_faces,
        h=h,
        k=spec.k,
        chern=chern_number(omega),
        lambda_0=float(lam[0]),
        lambda_1=float(lam[1]) if spec.k > 1 else None,
        ground_dim=int(len(spec.ground_indices())),
    )
    return mesh, bundle, spec, omega


def _run_mc_vs_target(run, target_fn):
    """Shared body of limit0 and finite_t: MC pairing against a per-time target."""
    cfg = run.cfg
    mesh, bundle, spec, omega = _setup_bundle(run)
    forms = _forms(cfg, mesh)
    times = _times(cfg, mesh.spacing, spec)
    gaps = {}
    for i, (ts, t) in enumerate(zip(cfg.t_list, times)):
        t0 = time.perf_counter()
        samples = sample_zero_currents(bundle, spec, t, cfg.n_samples, cfg.master_seed, run.workers)
        target = target_fn(spec, t, omega)
        wall = time.perf_counter() - t0
        for name, eta in forms.items():
            est = estimate_from_samples(samples, eta)
            rhs = curvature_target(target, eta)
            row = _row(cfg, f"t={ts.label}:{name}", name, t, ts.label, est.mean_pairing, est.stderr,
                       rhs, cfg.slack_for(i, t, rhs), wall,
                       n_samples=est.n_samples, n_degenerate_resamples=est.n_degenerate_resamples)
            run.rows.append(row)
            run.add_estimate(row["label"], est)
            gaps.setdefault(name, []).append((t, row["abs_gap"]))
        run.density = est.face_mean_density
    return gaps


def _run_limit0(run):
    gaps = _run_mc_vs_target(run, lambda spec, t, omega: omega)
    if run.cfg.bundle[0] == "bump":
        seq = [g for _, g in sorted(gaps["bump"], key=lambda p: -p[0])]
        run.checks.append({
            "name": "bump_gap_monotone",
            "description": "gap for the bump-aligned form shrinks as t decreases (5% jitter)",
            "values": seq,
            "pass": _monotone(seq),
        })


def _pullback_target(spec, t, omega):
    return face_curvature(pancharatnam_pullback(heat_kernel_embedding(spec, t), dual=False))


def _run_finite_t(run):
    _run_mc_vs_target(run, _pullback_target)


def _run_limit_inf(run):
    cfg = run.cfg
    mesh, bundle, spec, omega = _setup_bundle(run)
    forms = _forms(cfg, mesh)
    lam = spec.eigenvalues
    ground = spec.ground_indices()
    simple = len(ground) == 1
    run.info["ground_simple"] = simple
    if not simple:
        run.info["note"] = (
            f"ground eigenspace has dimension {len(ground)}; the reference current is the "
            "Gaussian average over it"
        )
    times = _times(cfg, mesh.spacing, spec)

    if simple:
        zeta0 = zero_current(bundle, spec.eigenvectors[:, 0]).to_dense(mesh.n_faces)
        ref = {name: float(zeta0 @ eta) for name, eta in forms.items()}
    else:
        gs = sample_zero_currents(bundle, spec, GROUND, cfg.n_samples, cfg.master_seed, run.workers)
        ref = {name: estimate_from_samples(gs, eta).mean_pairing for name, eta in forms.items()}

    for i, (ts, t) in enumerate(zip(cfg.t_list, times)):
        t0 = time.perf_counter()
        samples = sample_zero_currents(bundle, spec, t, cfg.n_samples, cfg.master_seed, run.workers)
        wall = time.perf_counter() - t0
        excited = None
        if t != GROUND and spec.k > 1:
            excited = float(np.exp(-t * (lam[1] - lam[0])))
        for name, eta in forms.items():
            est = estimate_from_samples(samples, eta)
            rhs = ref[name]
            row = _row(cfg, f"t={ts.label}:{name}", name, t, ts.label, est.mean_pairing, est.stderr,
                       rhs, cfg.slack_for(i, t, rhs), wall, n_samples=est.n_samples,
                       n_degenerate_resamples=est.n_degenerate_resamples, excited_weight=excited)
            run.rows.append(row)
            run.add_estimate(row["label"], est)
        if simple:
            match = np.all(samples.indices == zeta0[None, :], axis=1)
            run.rows.append(_row(cfg, f"t={ts.label}:ground_match", "facewise", t, ts.label,
                                 float(match.mean()), 0.0, 1.0, 0.0, wall,
                                 n_samples=int(len(match)), excited_weight=excited))
        run.density = est.face_mean_density


def _run_lemma(run):
    cfg = run.cfg
    mesh, bundle, spec, omega = _setup_bundle(run)
    times = _times(cfg, mesh.spacing, spec)
    k = spec.k
    for ts, t in zip(cfg.t_list, times):
        t0 = time.perf_counter()
        emb = heat_kernel_embedding(spec, t)
        c1 = pancharatnam_pullback(emb)
        heat_conn = pancharatnam_pullback(emb, dual=False)
        om_c1 = face_curvature(c1)
        om_heat = face_curvature(heat_conn)
        w = np.exp(-t * spec.eigenvalues)
        H = emb.vectors.T

        match, match_heat, resamples = [], [], 0
        pairing, n_plus, n_minus = [], [], []
        for s in range(cfg.n_samples):
            rng = sample_rng(cfg.master_seed, s)
            for attempt in range(101):
                c = _complex_normal(rng, k)
                g = np.conj(c) @ H
                smoothed = spec.synthesize(w * c)
                sig, bad1 = winding_indices(c1, g, omega=om_c1)
                zeta, bad2 = winding_indices(bundle, smoothed, omega=omega)
                zeta_h, bad3 = winding_indices(heat_conn, smoothed, omega=om_heat)
                if not (bad1[0] or bad2[0] or bad3[0]):
                    break
                resamples += 1
            else:
                raise NumericalContractError(f"lemma sample {s}: more than 100 degenerate draws")
            sig, zeta, zeta_h = sig[0], zeta[0], zeta_h[0]
            match.append(bool(np.array_equal(sig, -zeta)))
            match_heat.append(bool(np.array_equal(sig, -zeta_h)))
            pairing.append(float(np.count_nonzero(sig != -zeta)))
            n_plus.append(int(np.clip(zeta, 0, None).sum()))
            n_minus.append(int(np.clip(-zeta, 0, None).sum()))
        wall = time.perf_counter() - t0
        dev = float(np.max(np.abs(np.angle(heat_conn.transports * np.conj(bundle.transports)))))
        n = cfg.n_samples
        run.rows.append(_row(cfg, f"t={ts.label}:lemma", "facewise", t, ts.label,
                             float(np.mean(match)), 0.0, 1.0, 0.0, wall, n_samples=n,
                             n_degenerate_resamples=resamples, n_mismatch=int(n - sum(match)),
                             max_transport_deviation=dev))
        run.rows.append(_row(cfg, f"t={ts.label}:lemma_heat_connection", "facewise", t, ts.label,
                             float(np.mean(match_heat)), 0.0, 1.0, 0.0, wall, n_samples=n,
                             n_degenerate_resamples=resamples, n_mismatch=int(n - sum(match_heat))))
        run.sample_tables.append((f"t={ts.label}:lemma", _Table(pairing, n_plus, n_minus)))


@dataclass
class _Table:
    """Minimal stand-in for a CurrentEstimate when writing samples.csv."""

    pairings: list
    n_plus: list
    n_minus: list

    @property
    def n_samples(self):
        return len(self.pairings)


def _run_theorem4(run):
    cfg = run.cfg
    mesh, bundle, spec, omega = _setup_bundle(run)
    times = _times(cfg, mesh.spacing, spec)
    d = chern_number(omega)
    t0 = time.perf_counter()
    report = curvature_convergence_report(bundle, spec, times, c_floor=cfg.c_floor)
    wall = time.perf_counter() - t0
    run.convergence = report
    for ts, r in zip(cfg.t_list, report):
        lhs = float("nan") if r.chern is None else float(r.chern)
        row = _row(cfg, f"t={ts.label}:chern", "chern", r.t, ts.label, lhs, 0.0, float(d), 0.0, wall,
                   sup_err=r.sup_err, reliable=r.reliable, note=r.note)
        if not r.reliable:
            row["pass"] = True
        run.rows.append(row)
    seq = [r.sup_err for r in sorted(report, key=lambda r: -r.t) if r.reliable]
    run.checks.append({
        "name": "sup_err_monotone",
        "description": "sup_f |Omega^t - Omega| shrinks as t decreases (5% jitter), reliable rows",
        "values": seq,
        "pass": _monotone(seq),
    })
    if cfg.refine:
        errs = []
        for N in cfg.refine:
            sub = replace(cfg, geometry=("flat_torus", N), k_override=None)
            m = make_flat_torus(N)
            b = _bundle(sub, m)
            sp = _spectrum(sub, connection_laplacian(b, laplacian_weights(m)), m.spacing, cfg.refine_t)
            (r,) = curvature_convergence_report(b, sp, [cfg.refine_t], c_floor=cfg.c_floor)
            errs.append(r.sup_err)
        run.checks.append({
            "name": "refinement_monotone",
            "description": f"sup error at t={cfg.refine_t!r} shrinks as N runs over {list(cfg.refine)}",
            "values": errs,
            "pass": _monotone(errs, jitter=1.0),
        })


def _immersions(cfg, mesh):
    maker = veronese_immersion if cfg.experiment == "theorem2" else spinor_power_map
    return [(d, maker(mesh, d)) for d in cfg.bundle[1]]


def _run_cpn(run):
    cfg = run.cfg
    mesh = _mesh(cfg)
    run.mesh = mesh
    forms = _forms(cfg, mesh)
    if cfg.experiment == "coarea":
        forms = {"one": forms["one"]}
    else:
        forms = {k: forms[k] for k in ("one", "half", "bump")}
    for i, (d, imm) in enumerate(_immersions(cfg, mesh)):
        pb = pancharatnam_pullback(imm)
        omega = face_curvature(pb)
        if i == 0:
            run.curvature = omega
            spec = eigensolve(connection_laplacian(pb, laplacian_weights(mesh)), mesh.n_vertices)
            run.eigenvalues = spec.eigenvalues
        t0 = time.perf_counter()
        samples = sample_intersections(imm, cfg.n_samples, cfg.master_seed, run.workers)
        wall = time.perf_counter() - t0
        for name, eta in forms.items():
            est = estimate_from_samples(samples, eta)
            rhs = fs_area_integral(imm, eta, pullback=pb)
            row = _row(cfg, f"d={d}:{name}", name, None, None, est.mean_pairing, est.stderr, rhs,
                       cfg.slack_for(0, None, rhs), wall, degree=d, chern=chern_number(omega),
                       n_samples=est.n_samples, n_degenerate_resamples=est.n_degenerate_resamples)
            run.rows.append(row)
            run.add_estimate(row["label"], est)
        run.density = est.face_mean_density
    run.info.update(n_vertices=mesh.n_vertices, n_faces=mesh.n_faces)


RUNNERS = {
    "limit0": _run_limit0,
    "finite_t": _run_finite_t,
    "limit_inf": _run_limit_inf,
    "lemma": _run_lemma,
    "theorem4": _run_theorem4,
    "theorem2": _run_cpn,
    "coarea": _run_cpn,
}


def _clean(x):
    """JSON-ready copy with non-finite floats mapped to ``None``."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _config_json(cfg):
    return {
        "experiment": cfg.experiment,
        "geometry": list(cfg.geometry),
        "bundle": [list(v) if isinstance(v, tuple) else v for v in cfg.bundle],
        "t_list": [ts.label for ts in cfg.t_list],
        "n_samples": cfg.n_samples,
        "master_seed": cfg.master_seed,
        "k_override": cfg.k_override,
        "slack": list(cfg.slack),
        "slack_t": cfg.slack_t,
        "slack_rel": cfg.slack_rel,
        "c_floor": cfg.c_floor,
        "refine": list(cfg.refine),
        "refine_t": cfg.refine_t,
    }


def run_experiment(cfg, workers=1, output_dir=None):
    """Run ``cfg`` and write its outputs; returns ``(report, out_dir)``.

    The report's ``all_pass`` is true iff every row and every check passed.
    Output files do not depend on ``workers``.
    """
    run = _Run(cfg, workers)
    RUNNERS[cfg.experiment](run)

    out = Path(output_dir) if output_dir is not None else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    all_pass = all(r["pass"] for r in run.rows) and all(c["pass"] for c in run.checks)
    report = _clean({
        "schema": SCHEMA,
        "experiment": cfg.experiment,
        "config": _config_json(cfg),
        "info": run.info,
        "rows": run.rows,
        "checks": run.checks,
        "all_pass": all_pass,
    })
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    io.write_samples_csv(out / "samples.csv", run.sample_tables)
    if run.eigenvalues is not None:
        io.write_eigenvalues_csv(out / "eigenvalues.csv", run.eigenvalues)
    if run.curvature is not None:
        io.write_curvature_csv(out / "curvature.csv", run.curvature)
    if run.convergence is not None:
        io.write_convergence_csv(out / "convergence.csv", run.convergence)
    if run.density is not None:
        io.write_ply(out / "density.ply", run.mesh, run.density)
    return report, out
