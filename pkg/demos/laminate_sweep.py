"""A two-phase laminate: how the bending stiffness depends on γ.

Phases (μ, λ) = (1, 1) and (4, 2) alternate in y1 with equal volume
fractions. The effective form moves from the γ = 0 value to the γ = ∞
value as the thickness-to-period ratio grows, and the finite-γ forms
approach both endpoints continuously.
"""

import numpy as np

from shellhom.cell import CellGrid, effective_form
from shellhom.material import Laminate

law = Laminate((1.0, 1.0), (4.0, 2.0), 0.5)
grid = CellGrid(16, 4, 4)
gammas = [0.0, 1e-2, 1e-1, 1.0, 10.0, 1e2, "inf"]
forms = {g: effective_form(g, law, None, grid) for g in gammas}

print(f"{'γ':>6} {'m11':>10} {'m22':>10} {'m33':>10} {'m12':>10}")
for g, f in forms.items():
    m = f.m
    print(f"{g!s:>6} {m[0, 0]:10.6f} {m[1, 1]:10.6f} {m[2, 2]:10.6f} {m[0, 1]:10.6f}")

rel = lambda a, b: np.linalg.norm(a - b) / np.linalg.norm(b)
print(f"|Q(0.01) - Q(0)| / |Q(0)|   = {rel(forms[1e-2].m, forms[0.0].m):.2e}")
print(f"|Q(100) - Q(inf)| / |Q(inf)| = {rel(forms[1e2].m, forms['inf'].m):.2e}")
