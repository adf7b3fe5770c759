"""Limit bending energy of deformations of a spherical cap.

The energy density is evaluated on the relative Weingarten strain of an
isometric immersion. Rigid motions cost nothing. The mirror image of the
cap through the equatorial plane is isometric but flips the curvature, so
its strain is minus twice the Weingarten form. A stretched cap is not
isometric and has infinite energy.
"""

import numpy as np
from scipy.spatial.transform import Rotation

from shellhom import geometry as geo
from shellhom.cell import CellGrid
from shellhom.energy import BendingStrainSource, EffectiveFormCache, bending_energy
from shellhom.material import Isotropic, Laminate

cap = geo.SphereCap(1.0, ((-0.4, 0.4), (-0.4, 0.4)))
grid = geo.ChartGrid.uniform(cap.domain, 17)
cell = CellGrid(8, 3, 2)
cache = EffectiveFormCache()
iso = Isotropic(1.0, 1.0)

Q = Rotation.from_euler("xyz", [0.3, -0.2, 1.1]).as_matrix()
cases = {
    "rotated and shifted": BendingStrainSource.from_immersion(cap.sample(grid) @ Q.T + [1.0, 2.0, 0.0]),
    "mirrored": BendingStrainSource.from_immersion(geo.AffineImage(cap, np.diag([1.0, 1.0, -1.0]))),
    "stretched": BendingStrainSource.from_immersion(cap.sample(grid) * [1.0, 1.1, 1.0]),
}
for name, src in cases.items():
    r = bending_energy(cap, src, 0.0, iso, cell, grid, cache)
    shown = f"{r.value:.6e}" if not r.infinite else f"infinite (metric defect {r.isometry_defect:.2e})"
    print(f"{name:>20}: I_0 = {shown}")

# the mirrored cap with a laminate, in three regimes; each node has its own frame
coarse = geo.ChartGrid.uniform(cap.domain, 7)
lam = Laminate((1.0, 1.0), (4.0, 2.0), 0.5)
for gamma in (0.0, 1.0, "inf"):
    r = bending_energy(cap, cases["mirrored"], gamma, lam, cell, coarse, cache, jobs=4)
    print(f"laminate, γ = {gamma!s:>3}: I = {r.value:.6f}  (cache {r.cache})")
