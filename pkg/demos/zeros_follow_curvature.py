"""Random sections of a magnetic line bundle on a torus and where their zeros sit.

Sections are drawn from the heat-smoothed Gaussian law at a few times t. At
small t the expected number of zeros in a region tracks the flux through that
region; at large t every draw collapses onto the ground state and the zeros
stop moving.

    python demos/zeros_follow_curvature.py
"""

import numpy as np

from zerocurrents.bundle import bump_curvature, connection_laplacian, face_curvature, prescribed_curvature_bundle
from zerocurrents.mesh import bump_form, half_indicator, laplacian_weights, make_flat_torus
from zerocurrents.sampling import GROUND, curvature_target, estimate_zero_current
from zerocurrents.spectral import eigensolve

N, d, width = 24, 2, 0.15
mesh = make_flat_torus(N)
h = mesh.spacing

# flux concentrated in a Gaussian bump around (0.25, 0.5)
bundle = prescribed_curvature_bundle(mesh, bump_curvature(mesh, d, width))
omega = face_curvature(bundle)
spec = eigensolve(connection_laplacian(bundle, laplacian_weights(mesh)), mesh.n_vertices)
print(f"torus N={N}, degree {d}, h={h:.4f}, lambda_0={spec.eigenvalues[0]:.3f}, lambda_1={spec.eigenvalues[1]:.3f}")

forms = {
    "everything": np.ones(mesh.n_faces),
    "left half": half_indicator(mesh),
    "near bump": bump_form(mesh, (0.25, 0.5, 0.0), width),
    "far side": bump_form(mesh, (0.75, 0.5, 0.0), width),
}

print(f"\n{'t':>8}  " + "  ".join(f"{k:>18}" for k in forms))
print(f"{'target':>8}  " + "  ".join(f"{curvature_target(omega, eta):18.4f}" for eta in forms.values()))
for c in (64, 16, 4):
    t = c * h * h
    ests = [estimate_zero_current(bundle, spec, t, eta, 1000, master_seed=c) for eta in forms.values()]
    print(f"{c:>5}h^2  " + "  ".join(f"{e.mean_pairing:9.4f} +-{e.stderr:7.4f}" for e in ests))

# large t: the ground state dominates and every sample has the same zeros
ests = [estimate_zero_current(bundle, spec, GROUND, eta, 200, master_seed=9) for eta in forms.values()]
print(f"{'ground':>8}  " + "  ".join(f"{e.mean_pairing:9.4f} +-{e.stderr:7.4f}" for e in ests))
