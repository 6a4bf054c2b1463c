"""Counting where random hyperplanes cut an immersed sphere.

The degree d rational normal curve sends the unit sphere into CP^d. A uniformly
random hyperplane meets it in d points (counted with sign), and the expected
number landing in a region equals the Fubini-Study area of that region divided
by pi. The last block uses the same machinery with a map into CP^1 to count
preimages, which recovers the degree of the map.

    python demos/hyperplane_sections.py
"""

import numpy as np

from zerocurrents.cpn import (
    cpn_volume,
    degree_via_preimages,
    fs_area_integral,
    mc_intersection_expectation,
    spinor_power_map,
    veronese_immersion,
)
from zerocurrents.mesh import bump_form, half_indicator, make_sphere

sphere = make_sphere(3)
print(f"icosphere: {sphere.n_vertices} vertices, {sphere.n_faces} faces")
print("vol(CP^n) =", ", ".join(f"{cpn_volume(n):.4f}" for n in (1, 2, 3)))

forms = {
    "sphere": np.ones(sphere.n_faces),
    "north half": half_indicator(sphere),
    "polar cap": bump_form(sphere, (0.0, 0.0, 1.0), 0.5),
}
for d in (1, 2, 3):
    imm = veronese_immersion(sphere, d)
    print(f"\ndegree {d}")
    for name, eta in forms.items():
        area = fs_area_integral(imm, eta)
        est = mc_intersection_expectation(imm, eta, 4000, master_seed=d)
        print(f"  {name:>10}: area/pi = {area:.4f}   hits = {est.mean_pairing:.4f} +- {est.stderr:.4f}")

print("\nsigned preimage counts of z -> z^d")
for d in (1, 2, 3):
    est = degree_via_preimages(spinor_power_map(sphere, d), 2000, master_seed=10 + d)
    print(f"  d={d}: {est.mean_pairing:.3f} (stderr {est.stderr:.3g})")
