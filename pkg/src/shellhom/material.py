"""Quadratic energy densities ``Q(x + t n, y, G)`` as fields of Voigt-6 matrices.

A law is evaluated at a surface point ``x`` (ambient, R³), a thickness
coordinate ``t ∈ (-1/2, 1/2)`` and a periodic cell coordinate ``y``; it
returns a symmetric 6x6 matrix acting on :func:`shellhom.voigt.voigt6` strains.
"""

import numpy as np

from .errors import NotCoercive, OutOfThickness
from .voigt import voigt6

_TRACE = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])


def isotropic_voigt(mu, lam):
    """Voigt matrix of ``2μ|sym G|² + λ (tr G)²``; broadcasts over ``mu``, ``lam``."""
    mu = np.asarray(mu, dtype=float)[..., None, None]
    lam = np.asarray(lam, dtype=float)[..., None, None]
    return 2.0 * mu * np.eye(6) + lam * np.outer(_TRACE, _TRACE)


def _as_phase(phase):
    """A phase is either ``(mu, lam)`` or an explicit 6x6 matrix."""
    arr = np.asarray(phase, dtype=float)
    if arr.shape == (6, 6):
        return 0.5 * (arr + arr.T)
    if arr.shape == (2,):
        return isotropic_voigt(arr[0], arr[1])
    raise ValueError(f"cannot interpret phase of shape {arr.shape}")


class MaterialLaw:
    """Base class. Subclasses implement ``_eval(t, y)`` (or override ``eval``).

    ``x_dependent`` marks laws that vary along the surface; ``frame_invariant``
    marks laws whose cell problem has no preferred in-plane direction
    (isotropic and constant in ``y``), which lets effective forms be shared
    between surface points.
    """

    kind = "abstract"
    x_dependent = False
    frame_invariant = False

    def eval(self, x, t, y):
        y = np.asarray(y, dtype=float)
        if np.any(np.abs(t) >= 0.5):
            raise OutOfThickness(f"t = {t} outside (-1/2, 1/2)")
        return self._eval(np.asarray(t, dtype=float), np.mod(y, 1.0))

    def _eval(self, t, y):
        raise NotImplementedError

    def sample(self, x, t_nodes, y_nodes):
        """Voigt matrices on the tensor grid ``t_nodes × y_nodes × y_nodes``.

        Returns shape ``(n_t, N, N, 6, 6)``.
        """
        y1, y2 = np.meshgrid(y_nodes, y_nodes, indexing="ij")
        y = np.stack([y1, y2], axis=-1)
        out = np.empty((len(t_nodes),) + y1.shape + (6, 6))
        for i, t in enumerate(t_nodes):
            out[i] = np.broadcast_to(self.eval(x, t, y), y1.shape + (6, 6))
        return out

    def scaled(self, s):
        return ScaledLaw(self, s)


class Isotropic(MaterialLaw):
    """Isotropic law; ``mu``/``lam`` are constants or callables ``f(y, t)``."""

    kind = "isotropic"

    def __init__(self, mu, lam):
        self.mu = mu
        self.lam = lam
        self.frame_invariant = not (callable(mu) or callable(lam))

    def _eval(self, t, y):
        mu = self.mu(y, t) if callable(self.mu) else self.mu
        lam = self.lam(y, t) if callable(self.lam) else self.lam
        mu = np.broadcast_to(mu, y.shape[:-1])
        lam = np.broadcast_to(lam, y.shape[:-1])
        return isotropic_voigt(mu, lam)


class Constant(MaterialLaw):
    kind = "constant"

    def __init__(self, matrix):
        self.matrix = _as_phase(matrix)

    def _eval(self, t, y):
        return np.broadcast_to(self.matrix, y.shape[:-1] + (6, 6))


class Laminate(MaterialLaw):
    """Two phases alternating in ``y1``: phase A on ``y1 mod 1 < fraction``.

    Interfaces are sampled sharply, without smoothing.
    """

    kind = "laminate"

    def __init__(self, phase_a, phase_b, fraction=0.5):
        if not 0.0 < fraction < 1.0:
            raise ValueError("volume fraction must lie in (0, 1)")
        self.phase_a = _as_phase(phase_a)
        self.phase_b = _as_phase(phase_b)
        self.fraction = float(fraction)

    def _eval(self, t, y):
        in_a = (y[..., 0] < self.fraction)[..., None, None]
        return np.where(in_a, self.phase_a, self.phase_b)


class Layered(MaterialLaw):
    """Stack of phases through the thickness.

    ``breakpoints`` are the interior interface positions in increasing order;
    there is one more phase than breakpoints, listed from ``t = -1/2`` up.
    """

    kind = "layered"

    def __init__(self, breakpoints, phases):
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        self.phases = [_as_phase(p) for p in phases]
        if len(self.phases) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one more phase than breakpoints")
        if np.any(np.diff(self.breakpoints) <= 0) or np.any(np.abs(self.breakpoints) >= 0.5):
            raise ValueError("breakpoints must increase strictly inside (-1/2, 1/2)")

    def _eval(self, t, y):
        k = int(np.searchsorted(self.breakpoints, float(t), side="right"))
        return np.broadcast_to(self.phases[k], y.shape[:-1] + (6, 6))


class FunctionLaw(MaterialLaw):
    """Arbitrary law ``func(x, t, y) -> (..., 6, 6)``."""

    kind = "function"

    def __init__(self, func, x_dependent=True):
        self.func = func
        self.x_dependent = x_dependent

    def eval(self, x, t, y):
        if np.any(np.abs(t) >= 0.5):
            raise OutOfThickness(f"t = {t} outside (-1/2, 1/2)")
        y = np.mod(np.asarray(y, dtype=float), 1.0)
        return np.asarray(self.func(np.asarray(x, float), float(t), y), dtype=float)


class ScaledLaw(MaterialLaw):
    kind = "scaled"

    def __init__(self, base, s):
        self.base = base
        self.s = float(s)
        self.x_dependent = base.x_dependent
        self.frame_invariant = base.frame_invariant

    def eval(self, x, t, y):
        return self.s * self.base.eval(x, t, y)


def q_value(law, x, t, y, G):
    """``Q(x + t n, y, G) = voigt6(G)ᵀ C voigt6(G)``; only ``sym G`` matters."""
    v = voigt6(G)
    C = law.eval(x, t, y)
    return np.einsum("...i,...ij,...j->...", v, C, v)


def verify_bounds(law, samples=200, seed=0, points=None):
    """Estimate coercivity and growth constants ``(α, β)`` of ``law`` by sampling.

    Draws ``samples`` random ``(t, y)`` pairs (and surface points from
    ``points`` for x-dependent laws) and returns the extreme Voigt eigenvalues.
    Raises :class:`NotCoercive` if any eigenvalue is below ``1e-10``.
    """
    rng = np.random.default_rng(seed)
    if points is None:
        points = np.zeros((1, 3))
    points = np.atleast_2d(points)
    lo, hi = np.inf, -np.inf
    for _ in range(samples):
        x = points[rng.integers(len(points))]
        t = rng.uniform(-0.5, 0.5)
        y = rng.uniform(0.0, 1.0, size=2)
        ev = np.linalg.eigvalsh(law.eval(x, t, y))
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    if lo <= 1e-10:
        raise NotCoercive(f"minimum sampled Voigt eigenvalue {lo:.3e}")
    return float(lo), float(hi)
