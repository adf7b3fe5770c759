"""Solving the infinitesimal bending system q^s_w = B on a convex cap.

A datum B is manufactured from a known field w*. The least-squares solver
returns the minimum-norm w, which differs from w* by an element of the
kernel (infinitesimal rigid motions at least), so the residual is the
quantity to watch. The truncation error of the difference scheme itself
falls at second order.
"""

import numpy as np

from shellhom import geometry as geo
from shellhom.checks import manufactured_w
from shellhom.errors import NotConvex
from shellhom.recovery import BendingSystem, exact_qsw, residual_qsw, solve_qsw

cap = geo.SphereCap(1.0, ((-0.4, 0.4), (-0.4, 0.4)))
prev = None
for n in (17, 33, 65):
    grid = geo.ChartGrid.uniform(cap.domain, n)
    discrete = BendingSystem(cap, np.zeros(grid.shape + (3,)), grid).qsw(manufactured_w(*grid.mesh()))
    res = solve_qsw(BendingSystem(cap, discrete, grid))
    continuum = BendingSystem(cap, exact_qsw(cap, manufactured_w, grid), grid)
    trunc, _ = residual_qsw(continuum, manufactured_w(*grid.mesh()))
    rate = f"  observed order {np.log2(prev / trunc):.2f}" if prev else ""
    print(f"{n:>3} nodes: solver residual {res.relative_residual:.1e}, truncation {trunc:.3e}{rate}")
    prev = trunc

flat = geo.GraphChart("0", cap.domain)
try:
    solve_qsw(BendingSystem(flat, np.zeros((9, 9, 3)), geo.ChartGrid.uniform(cap.domain, 9)))
except NotConvex as exc:
    print("flat chart:", exc)
