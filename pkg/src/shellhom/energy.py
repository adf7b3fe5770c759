"""Limit bending energy ``I_γ(u) = ∫_S Q_γ(x, A^r_u(x)) dvol_S``."""

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .cell import CellGrid, SolverOptions, check_gamma, effective_form
from .cell.operators import gamma_tag
from .errors import NotIsometric, ShapeMismatch


@dataclass
class BendingStrainSource:
    """Either an explicit tangential form field or an immersion to be differentiated.

    ``q`` has shape ``(n1, n2, 3)`` or ``(3,)`` (constant), as Voigt-2
    coefficients in the dual frame (``basis="dual"``) or in the
    Gram-Schmidt orthonormal frame (``basis="orthonormal"``).
    """

    q: np.ndarray = None
    immersion: object = None
    basis: str = "dual"

    @classmethod
    def from_q(cls, q, basis="dual"):
        if basis not in ("dual", "orthonormal"):
            raise ValueError(f"unknown basis {basis!r}")
        return cls(q=np.asarray(q, dtype=float), basis=basis)

    @classmethod
    def from_immersion(cls, u):
        return cls(immersion=u)


@dataclass
class EnergyReport:
    value: float
    status: str = "finite"
    integrand: np.ndarray = field(default=None, repr=False)
    weights: np.ndarray = field(default=None, repr=False)
    area: float = 0.0
    gamma: float = 0.0
    quadrature: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict)
    residuals: list = field(default_factory=list)
    isometry_defect: float = 0.0

    @property
    def infinite(self):
        return self.status == "infinite"

    def to_dict(self):
        d = {
            "status": self.status,
            "gamma": gamma_tag(self.gamma),
            "area": float(self.area),
            "quadrature": dict(self.quadrature),
            "cache": dict(self.cache),
            "residuals": [float(r) for r in self.residuals],
            "isometry_defect": float(self.isometry_defect),
        }
        if not self.infinite:
            d["value"] = float(self.value)
        return d


class EffectiveFormCache:
    """Thread-safe store of effective forms.

    Keys are ``(γ, law identity, frame key[, x])``. Laws flagged
    ``frame_invariant`` share a single entry computed in the flat frame and
    are converted to each node's dual frame.
    """

    def __init__(self, enabled=True):
        self.enabled = enabled
        self._store = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key, compute):
        if not self.enabled:
            self.misses += 1
            return compute()
        with self._lock:
            if key in self._store:
                self.hits += 1
                return self._store[key]
        value = compute()
        with self._lock:
            if key in self._store:
                self.hits += 1
                return self._store[key]
            self.misses += 1
            self._store[key] = value
        return value

    def stats(self):
        return {"hits": self.hits, "misses": self.misses, "entries": len(self._store)}


def effective_form_field(chart, gamma, law, cell_grid=None, grid=None, cache=None, opts=None, jobs=1, geometry=None):
    """Per-node effective forms ``(n1, n2, 3, 3)`` in each node's dual frame.

    Returns ``(m, residuals)`` where ``residuals`` lists the worst cell
    residual of every distinct solve.
    """
    gamma = check_gamma(gamma)
    cell_grid = CellGrid() if cell_grid is None else cell_grid
    opts = SolverOptions() if opts is None else opts
    cache = EffectiveFormCache() if cache is None else cache
    if geometry is None:
        geometry = geo.build_geometry(chart, grid)
    _, frames, _ = geometry
    shape = frames.tau.shape[:-2]
    points = chart.sample(grid) if hasattr(chart, "sample") else None
    tag = (gamma_tag(gamma), id(law), cell_grid.as_dict()["n_y"], cell_grid.n_t, cell_grid.p_leg, opts.tol)

    def node(idx):
        frame = frames.at(*idx)
        x = points[idx] if (law.x_dependent and points is not None) else None
        if law.frame_invariant and not law.x_dependent:
            form = cache.get(tag + ("flat",), lambda: effective_form(gamma, law, None, cell_grid, opts))
            M2 = frame.dual_to_orthonormal()
            return M2.T @ form.m @ M2, form
        key = tag + (frame.key(),) + ((np.asarray(x).tobytes(),) if x is not None else ())
        form = cache.get(key, lambda: effective_form(gamma, law, frame, cell_grid, opts, x))
        return form.m, form

    idxs = list(np.ndindex(*shape))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(node, idxs))
    else:
        results = [node(i) for i in idxs]
    m = np.empty(shape + (3, 3))
    residuals = {}
    for idx, (mi, form) in zip(idxs, results):
        m[idx] = mi
        residuals[id(form)] = max(form.residuals) if form.residuals else 0.0
    return m, list(residuals.values())


def _strain_field(chart, source, grid, frames, isometry_tol):
    if source.immersion is not None:
        strain = geo.relative_weingarten(chart, source.immersion, grid, isometry_tol)
        return strain.voigt2, strain.isometry_defect
    q = np.broadcast_to(source.q, grid.shape + (3,)) if np.ndim(source.q) == 1 else source.q
    if q.shape != grid.shape + (3,):
        raise ShapeMismatch(f"q field has shape {q.shape}, expected {grid.shape + (3,)}")
    if source.basis == "orthonormal":
        q = geo.orthonormal_to_dual(frames, q)
    return np.asarray(q, dtype=float), 0.0


def bending_energy(chart, source, gamma, law, cell_grid=None, grid=None, cache=None, opts=None,
                   isometry_tol=1e-6, jobs=1):
    """Evaluate ``I_γ`` by trapezoid quadrature with ``√det g`` weights.

    Parameters
    ----------
    chart : SurfaceChart
        Reference surface ``S``.
    source : BendingStrainSource
        Explicit tangential form field, or an immersion whose relative
        Weingarten strain is taken.
    gamma : float or "inf"
    law : MaterialLaw
    cell_grid : CellGrid
    grid : ChartGrid
        Surface quadrature grid.
    cache : EffectiveFormCache, optional
    isometry_tol : float
        Relative metric defect above which the energy is infinite.

    Returns
    -------
    EnergyReport
        ``status == "infinite"`` (and ``value == inf``) for non-isometric input.
    """
    gamma = check_gamma(gamma)
    cell_grid = CellGrid() if cell_grid is None else cell_grid
    cache = EffectiveFormCache() if cache is None else cache
    geometry = geo.build_geometry(chart, grid)
    metric, frames, _ = geometry
    weights = grid.trapezoid_weights() * np.sqrt(metric.det_g)
    quad = {"rule": "trapezoid", "shape": list(grid.shape), "cell_grid": cell_grid.as_dict()}
    try:
        q, defect = _strain_field(chart, source, grid, frames, isometry_tol)
    except NotIsometric as exc:
        return EnergyReport(math.inf, "infinite", None, weights, float(weights.sum()), gamma, quad,
                            cache.stats(), [], exc.defect)
    m, residuals = effective_form_field(chart, gamma, law, cell_grid, grid, cache, opts, jobs, geometry)
    integrand = np.einsum("...i,...ij,...j->...", q, m, q)
    value = float(np.sum(weights * integrand))
    return EnergyReport(value, "finite", integrand, weights, float(weights.sum()), gamma, quad,
                        cache.stats(), residuals, defect)
