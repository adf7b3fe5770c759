"""Periodic cell problems for the three scaling regimes."""

from .grid import CellGrid
from .operators import (
    RelaxField0,
    RelaxFieldGamma,
    RelaxFieldInf,
    apply_u0,
    apply_ugamma,
    apply_uinf,
    check_gamma,
)
from .pcg import QuadraticCell, pcg
from .solver import (
    CellSolution,
    EffectiveForm,
    SolverOptions,
    cell_energy,
    cell_solve,
    effective_form,
    q0_via_q2,
    verify_minimizer,
    zero_field_energy,
)
