"""Surface charts and their differential geometry on a tensor grid.

All fields are arrays of shape ``(n1, n2, ...)`` over a :class:`ChartGrid`.
The unit normal is ``∂1ξ × ∂2ξ`` normalised, and the Weingarten map is
``A = dn``; in chart coordinates its matrix is ``-g⁻¹h`` with
``h = n · ∇²ξ``, so the outward-oriented sphere cap of radius R has shape
operator ``+I/R``.
"""

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .errors import DegenerateChart, DegenerateImmersion, DerivativeUnavailable, NotIsometric
from .voigt import change_of_basis2, unvoigt2, voigt2

DET_G_MIN = 1e-12
CROSS_MIN = 1e-12


@dataclass(frozen=True)
class ChartGrid:
    """Tensor-product node set ``z1 × z2`` with uniform spacing per axis."""

    z1: np.ndarray
    z2: np.ndarray

    @classmethod
    def uniform(cls, domain, n):
        if np.isscalar(n):
            n = (n, n)
        (a1, b1), (a2, b2) = domain
        return cls(np.linspace(a1, b1, n[0]), np.linspace(a2, b2, n[1]))

    @property
    def shape(self):
        return (self.z1.size, self.z2.size)

    @property
    def spacing(self):
        return (self.z1[1] - self.z1[0], self.z2[1] - self.z2[0])

    def mesh(self):
        return np.meshgrid(self.z1, self.z2, indexing="ij")

    def trapezoid_weights(self):
        def w1(z):
            w = np.full(z.size, z[1] - z[0])
            w[0] = w[-1] = 0.5 * (z[1] - z[0])
            return w

        return np.outer(w1(self.z1), w1(self.z2))


# ---------------------------------------------------------------------------
# charts


class SurfaceChart:
    """Embedding ``ξ: ω → R³`` with analytic derivatives up to third order.

    ``derivatives`` returns a list ``[ξ, ∂ξ, ∂²ξ, ∂³ξ][:order + 1]`` with
    shapes ``(..., 3)``, ``(..., 2, 3)``, ``(..., 2, 2, 3)`` and
    ``(..., 2, 2, 2, 3)``.
    """

    kind = "abstract"
    domain = ((-0.5, 0.5), (-0.5, 0.5))

    def derivatives(self, z1, z2, order=2):
        raise NotImplementedError

    def __call__(self, z1, z2):
        return self.derivatives(z1, z2, order=0)[0]

    def sample(self, grid):
        return self(*grid.mesh())


class GraphChart(SurfaceChart):
    """Graph ``(z1, z2, f(z1, z2))`` of a sympy expression in ``z1``, ``z2``."""

    kind = "graph"

    def __init__(self, f, domain=((-0.5, 0.5), (-0.5, 0.5))):
        z1, z2 = sp.symbols("z1 z2")
        self.expr = sp.sympify(f)
        self.domain = tuple(tuple(map(float, d)) for d in domain)
        zs = (z1, z2)
        funcs = {(): self.expr}
        for order in (1, 2, 3):
            for idx in np.ndindex(*(2,) * order):
                funcs[idx] = sp.diff(funcs[idx[:-1]], zs[idx[-1]])
        self._f = {k: sp.lambdify(zs, v, "numpy") for k, v in funcs.items()}

    def height(self, z1, z2, order):
        z1, z2 = np.broadcast_arrays(np.asarray(z1, float), np.asarray(z2, float))
        out = np.empty(z1.shape + (2,) * order)
        for idx in np.ndindex(*(2,) * order):
            out[(Ellipsis,) + idx] = self._f[idx](z1, z2)
        return out

    def derivatives(self, z1, z2, order=2):
        return _graph_derivatives(self.height, z1, z2, order)

    def descriptor(self):
        return {"kind": self.kind, "f": str(self.expr), "domain": [list(d) for d in self.domain]}


class EllipsoidPatch(SurfaceChart):
    """Upper patch of the ellipsoid with semi-axes ``(a, b, c)`` as a graph.

    Height ``c·sqrt(1 - z1²/a² - z2²/b²)``; derivatives are closed-form. The
    default domain is the centred rectangle of half-widths ``a/2``, ``b/2``.
    """

    kind = "ellipsoid-patch"

    def __init__(self, a, b, c, domain=None):
        self.axes = (float(a), float(b), float(c))
        if domain is None:
            domain = ((-0.5 * a, 0.5 * a), (-0.5 * b, 0.5 * b))
        self.domain = tuple(tuple(map(float, d)) for d in domain)

    def height(self, z1, z2, order):
        a, b, c = self.axes
        z = np.stack(np.broadcast_arrays(np.asarray(z1, float), np.asarray(z2, float)), axis=-1)
        inv2 = np.array([1.0 / a**2, 1.0 / b**2])
        w = 1.0 - np.sum(z**2 * inv2, axis=-1)
        if np.any(w <= 0):
            raise DegenerateChart("evaluation point outside the ellipsoid patch")
        dw = -2.0 * z * inv2  # (..., 2)
        ddw = -2.0 * np.diag(inv2)  # constant, third derivatives vanish
        s = np.sqrt(w)
        if order == 0:
            return c * s
        if order == 1:
            return c * 0.5 / s[..., None] * dw
        if order == 2:
            return c * (
                0.5 / s[..., None, None] * ddw
                - 0.25 / (s * w)[..., None, None] * dw[..., :, None] * dw[..., None, :]
            )
        if order == 3:
            w32 = (s * w)[..., None, None, None]
            w52 = (s * w * w)[..., None, None, None]
            t = (
                dw[..., None, None, :] * ddw[:, :, None]
                + dw[..., :, None, None] * ddw[None, :, :]
                + dw[..., None, :, None] * ddw[:, None, :]
            )
            ddd = dw[..., :, None, None] * dw[..., None, :, None] * dw[..., None, None, :]
            return c * (-0.25 / w32 * t + 0.375 / w52 * ddd)
        raise ValueError("order must be 0..3")

    def derivatives(self, z1, z2, order=2):
        return _graph_derivatives(self.height, z1, z2, order)

    def descriptor(self):
        return {"kind": self.kind, "semi_axes": list(self.axes), "domain": [list(d) for d in self.domain]}


class SphereCap(EllipsoidPatch):
    kind = "sphere-cap"

    def __init__(self, radius=1.0, domain=None):
        super().__init__(radius, radius, radius, domain)
        self.radius = float(radius)

    def descriptor(self):
        return {"kind": self.kind, "radius": self.radius, "domain": [list(d) for d in self.domain]}


class AffineImage(SurfaceChart):
    """The chart ``z ↦ M ξ(z) + c`` for a fixed 3x3 ``M`` (rotations, reflections)."""

    def __init__(self, base, M, c=(0.0, 0.0, 0.0)):
        self.base = base
        self.M = np.asarray(M, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.domain = base.domain
        self.kind = f"affine({base.kind})"

    def derivatives(self, z1, z2, order=2):
        ds = self.base.derivatives(z1, z2, order)
        out = [d @ self.M.T for d in ds]
        out[0] = out[0] + self.c
        return out


def _graph_derivatives(height, z1, z2, order):
    if order > 3:
        raise DerivativeUnavailable("derivatives are provided up to third order")
    z1, z2 = np.broadcast_arrays(np.asarray(z1, float), np.asarray(z2, float))
    shp = z1.shape
    xi = np.stack([z1, z2, height(z1, z2, 0)], axis=-1)
    out = [xi]
    if order >= 1:
        d1 = np.zeros(shp + (2, 3))
        d1[..., 0, 0] = 1.0
        d1[..., 1, 1] = 1.0
        d1[..., :, 2] = height(z1, z2, 1)
        out.append(d1)
    for k in range(2, order + 1):
        dk = np.zeros(shp + (2,) * k + (3,))
        dk[..., 2] = height(z1, z2, k)
        out.append(dk)
    return out


class SampledChart:
    """Chart known only through its values on a grid; derivatives by finite differences."""

    kind = "sampled"

    def __init__(self, values, grid):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape + (3,):
            raise ValueError(f"values of shape {values.shape} do not match grid {grid.shape}")
        self.values = values
        self.grid = grid
        self.domain = ((grid.z1[0], grid.z1[-1]), (grid.z2[0], grid.z2[-1]))

    def sample(self, grid):
        if grid.shape != self.grid.shape or not (
            np.allclose(grid.z1, self.grid.z1) and np.allclose(grid.z2, self.grid.z2)
        ):
            raise ValueError("sampled chart evaluated on a foreign grid")
        return self.values


# ---------------------------------------------------------------------------
# finite differences


def fd_first(f, h, axis):
    """Second-order first derivative; one-sided second-order at the ends."""
    if f.shape[axis] < 3:
        raise DerivativeUnavailable("need at least 3 nodes per axis for first derivatives")
    return np.gradient(f, h, axis=axis, edge_order=2)


def fd_second(f, h, axis):
    """Second-order second derivative; four-point one-sided rows at the ends."""
    n = f.shape[axis]
    if n < 4:
        raise DerivativeUnavailable("need at least 4 nodes per axis for second derivatives")
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = f[2:] - 2.0 * f[1:-1] + f[:-2]
    out[0] = 2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]
    out[-1] = 2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]
    return np.moveaxis(out / h**2, 0, axis)


def fd_derivatives(values, grid, order=2):
    """``[u, ∂u, ∂²u]`` of grid samples ``values`` of shape ``(n1, n2, 3)``."""
    if order > 2:
        raise DerivativeUnavailable("sampled maps provide derivatives up to second order")
    h = grid.spacing
    out = [values]
    if order >= 1:
        d1 = np.stack([fd_first(values, h[0], 0), fd_first(values, h[1], 1)], axis=-2)
        out.append(d1)
    if order >= 2:
        d11 = fd_second(values, h[0], 0)
        d22 = fd_second(values, h[1], 1)
        d12 = fd_first(d1[..., 0, :], h[1], 1)
        d2 = np.stack([np.stack([d11, d12], -2), np.stack([d12, d22], -2)], axis=-3)
        out.append(d2)
    return out


def surface_derivatives(obj, grid, order=2):
    """Derivatives of a chart or sampled map at the grid nodes.

    Analytic charts are differentiated exactly; arrays and
    :class:`SampledChart` objects by finite differences on ``grid``.
    """
    if isinstance(obj, SurfaceChart):
        return obj.derivatives(*grid.mesh(), order=order)
    if isinstance(obj, SampledChart):
        return fd_derivatives(obj.sample(grid), grid, order)
    values = np.asarray(obj, dtype=float)
    if values.shape != grid.shape + (3,):
        raise ValueError(f"sampled map of shape {values.shape} does not match grid {grid.shape}")
    return fd_derivatives(values, grid, order)


# ---------------------------------------------------------------------------
# geometric data


@dataclass
class Frame:
    """Tangent frame at a single point: τ_α (rows), dual τ^α (rows), unit normal."""

    tau: np.ndarray
    tau_dual: np.ndarray
    normal: np.ndarray

    @classmethod
    def from_tangents(cls, t1, t2):
        tau = np.array([t1, t2], dtype=float)
        N = np.cross(tau[0], tau[1])
        nrm = np.linalg.norm(N)
        if nrm <= CROSS_MIN:
            raise DegenerateChart("tangent vectors are parallel")
        g = tau @ tau.T
        return cls(tau, np.linalg.solve(g, tau), N / nrm)

    @classmethod
    def flat(cls):
        return cls.from_tangents([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])

    @property
    def matrix(self):
        """Rows ``(τ¹, τ², n)``: a frame-coordinate tensor ``Ê`` is ``Pᵀ Ê P`` in R³."""
        return np.vstack([self.tau_dual, self.normal])

    @property
    def metric(self):
        return self.tau @ self.tau.T

    def orthonormal(self):
        """Rows ``(e1, e2, n)`` from Gram-Schmidt on ``(τ1, τ2)``."""
        e1 = self.tau[0] / np.linalg.norm(self.tau[0])
        e2 = self.tau[1] - (self.tau[1] @ e1) * e1
        e2 /= np.linalg.norm(e2)
        return np.array([e1, e2, self.normal])

    def dual_to_orthonormal(self):
        """Voigt-2 matrix taking dual-frame coefficients to orthonormal-frame ones."""
        E = self.orthonormal()
        L = E[:2] @ self.tau_dual.T  # L[a, α] = e_a · τ^α
        return change_of_basis2(L)

    def embed(self, v2):
        """Ambient 3x3 matrix ``q_αβ τ^α ⊗ τ^β`` of dual-frame Voigt-2 ``v2``."""
        return self.tau_dual.T @ unvoigt2(v2) @ self.tau_dual

    def key(self):
        return np.round(self.matrix, 12).tobytes()


@dataclass
class MetricData:
    g: np.ndarray
    g_inv: np.ndarray
    det_g: np.ndarray
    christoffel: np.ndarray  # [..., γ, α, β] = Γ^γ_{αβ}


@dataclass
class FrameData:
    tau: np.ndarray
    tau_dual: np.ndarray
    normal: np.ndarray
    projector: np.ndarray = field(repr=False)

    def at(self, i, j):
        return Frame(self.tau[i, j].copy(), self.tau_dual[i, j].copy(), self.normal[i, j].copy())


@dataclass
class CurvatureData:
    second_form: np.ndarray
    shape_operator: np.ndarray
    gauss_k: np.ndarray


def _unit_normal(d1):
    N = np.cross(d1[..., 0, :], d1[..., 1, :])
    nrm = np.linalg.norm(N, axis=-1)
    return N, nrm


def _normal_derivative(d1, d2):
    """``∂_β n`` from first and second derivatives, shape ``(..., 2, 3)``."""
    N, nrm = _unit_normal(d1)
    n = N / nrm[..., None]
    dN = np.cross(d2[..., 0, :, :], d1[..., None, 1, :]) + np.cross(d1[..., None, 0, :], d2[..., 1, :, :])
    proj = dN - np.sum(dN * n[..., None, :], axis=-1, keepdims=True) * n[..., None, :]
    return proj / nrm[..., None, None]


def geometry_from_derivatives(d1, d2):
    g = np.einsum("...ai,...bi->...ab", d1, d1)
    det_g = np.linalg.det(g)
    if np.any(det_g <= DET_G_MIN):
        raise DegenerateChart(f"det g = {det_g.min():.3e} at some node")
    g_inv = np.linalg.inv(g)
    N, nrm = _unit_normal(d1)
    n = N / nrm[..., None]
    tau_dual = np.einsum("...ab,...bi->...ai", g_inv, d1)
    proj = np.eye(3) - n[..., :, None] * n[..., None, :]
    gamma_low = np.einsum("...abi,...di->...dab", d2, d1)
    christoffel = np.einsum("...cd,...dab->...cab", g_inv, gamma_low)
    h = np.einsum("...abi,...i->...ab", d2, n)
    shape = -np.einsum("...ab,...bc->...ac", g_inv, h)
    K = np.linalg.det(h) / det_g
    return (
        MetricData(g, g_inv, det_g, christoffel),
        FrameData(d1, tau_dual, n, proj),
        CurvatureData(h, shape, K),
    )


def build_geometry(chart, grid):
    """``(MetricData, FrameData, CurvatureData)`` of ``chart`` at the nodes of ``grid``."""
    _, d1, d2 = surface_derivatives(chart, grid, order=2)
    return geometry_from_derivatives(d1, d2)


def principal_curvatures(curvature, metric):
    """Eigenvalues of the shape operator, sorted, shape ``(..., 2)``."""
    L = np.linalg.cholesky(metric.g)
    Linv = np.linalg.inv(L)
    S = -Linv @ curvature.second_form @ np.swapaxes(Linv, -1, -2)
    return np.linalg.eigvalsh(0.5 * (S + np.swapaxes(S, -1, -2)))


def convexity_check(curvature, metric, tol=1e-8):
    """Whether the Weingarten map is uniformly definite, and its bound C.

    ``C = max(|λ|_max, 1/|λ|_min)``; ``(False, inf)`` when eigenvalues change
    sign or come within ``tol`` of zero.
    """
    lam = principal_curvatures(curvature, metric)
    same_sign = np.all(lam > tol) or np.all(lam < -tol)
    if not same_sign:
        return False, np.inf
    a = np.abs(lam)
    return True, float(max(a.max(), 1.0 / a.min()))


@dataclass
class EgregiumResult:
    residual: np.ndarray
    max: float


def egregium_residual(immersion, grid, metric, gauss_k):
    """Pointwise ``|det(n_u · ∇²u) - K det g|`` for a sampled immersion ``u``.

    ``metric`` and ``gauss_k`` come from the reference chart; ``u`` is
    differentiated with the same stencils as any sampled map.
    """
    _, d1, d2 = surface_derivatives(immersion, grid, order=2)
    N, nrm = _unit_normal(d1)
    if np.any(nrm <= CROSS_MIN):
        raise DegenerateImmersion("∂1u × ∂2u vanishes at some node")
    n = N / nrm[..., None]
    h = np.einsum("...abi,...i->...ab", d2, n)
    res = np.abs(np.linalg.det(h) - gauss_k * metric.det_g)
    return EgregiumResult(res, float(res.max()))


def isometry_defect(chart, immersion, grid):
    """``max |∇ũᵀ∇ũ - g| / max |g|`` with both metrics from one derivative engine."""
    ref, imm = _paired_derivatives(chart, immersion, grid, order=1)
    g = np.einsum("...ai,...bi->...ab", ref[1], ref[1])
    gu = np.einsum("...ai,...bi->...ab", imm[1], imm[1])
    return float(np.abs(gu - g).max() / np.abs(g).max())


def _paired_derivatives(chart, immersion, grid, order):
    # a sampled immersion is compared against the sampled chart so both see
    # identical stencils; rigid motions then commute with differentiation
    if isinstance(immersion, SurfaceChart) and isinstance(chart, SurfaceChart):
        return surface_derivatives(chart, grid, order), surface_derivatives(immersion, grid, order)
    ref = chart.sample(grid) if isinstance(chart, (SurfaceChart, SampledChart)) else chart
    if isinstance(immersion, SurfaceChart):
        immersion = immersion.sample(grid)
    return fd_derivatives(np.asarray(ref, float), grid, order), surface_derivatives(immersion, grid, order)


@dataclass
class WeingartenStrain:
    """Relative Weingarten map as a dual-frame Voigt-2 field plus diagnostics."""

    voigt2: np.ndarray
    asymmetry: np.ndarray
    isometry_defect: float

    @property
    def max_asymmetry(self):
        return float(self.asymmetry.max())


def weingarten_matrix(d1, d2):
    """Ambient 3x3 Weingarten map ``Σ_β ∂_β n ⊗ τ^β`` (zero on the normal)."""
    dn = _normal_derivative(d1, d2)
    g_inv = np.linalg.inv(np.einsum("...ai,...bi->...ab", d1, d1))
    tau_dual = np.einsum("...ab,...bi->...ai", g_inv, d1)
    return np.einsum("...bi,...bj->...ij", dn, tau_dual)


def relative_weingarten(chart, immersion, grid, isometry_tol=1e-6):
    """Relative change of Weingarten maps ``Rᵀ A_u R T_S - A`` for an isometry ``u``.

    ``R`` is the rotation field with ``R τ_α = ∂_α ũ`` and ``R n = n_u``. The
    result is returned by its dual-frame coefficients ``τ_α · A^r τ_β``,
    symmetrised; the pre-symmetrisation asymmetry is kept as a diagnostic.
    Raises :class:`NotIsometric` when the metric defect exceeds ``isometry_tol``.
    """
    ref, imm = _paired_derivatives(chart, immersion, grid, order=2)
    d1, d2 = ref[1], ref[2]
    e1, e2 = imm[1], imm[2]
    g = np.einsum("...ai,...bi->...ab", d1, d1)
    gu = np.einsum("...ai,...bi->...ab", e1, e1)
    defect = float(np.abs(gu - g).max() / np.abs(g).max())
    if defect > isometry_tol:
        raise NotIsometric(f"isometry defect {defect:.3e} exceeds {isometry_tol:.1e}", defect)
    N, nrm = _unit_normal(e1)
    if np.any(nrm <= CROSS_MIN):
        raise DegenerateImmersion("∂1u × ∂2u vanishes at some node")
    n_u = N / nrm[..., None]
    n = np.cross(d1[..., 0, :], d1[..., 1, :])
    n /= np.linalg.norm(n, axis=-1, keepdims=True)

    F_ref = np.concatenate([d1, n[..., None, :]], axis=-2)  # rows τ1, τ2, n
    F_img = np.concatenate([e1, n_u[..., None, :]], axis=-2)
    # R F_refᵀ = F_imgᵀ  =>  R = F_imgᵀ F_ref⁻ᵀ
    R = np.swapaxes(F_img, -1, -2) @ np.linalg.inv(np.swapaxes(F_ref, -1, -2))

    A = weingarten_matrix(d1, d2)
    A_u = weingarten_matrix(e1, e2)
    proj = np.eye(3) - n[..., :, None] * n[..., None, :]
    Ar = np.swapaxes(R, -1, -2) @ A_u @ R @ proj - A
    coeff = np.einsum("...ai,...ij,...bj->...ab", d1, Ar, d1)
    skew = 0.5 * (coeff - np.swapaxes(coeff, -1, -2))
    asym = np.sqrt(2.0) * np.abs(skew[..., 0, 1])
    return WeingartenStrain(voigt2(coeff), asym, defect)


def weingarten_form(chart, grid):
    """Dual-frame Voigt-2 coefficients ``τ_α · A τ_β`` of the chart's own Weingarten map."""
    _, d1, d2 = surface_derivatives(chart, grid, order=2)
    A = weingarten_matrix(d1, d2)
    return voigt2(np.einsum("...ai,...ij,...bj->...ab", d1, A, d1))


def orthonormal_to_dual(frames, v2_ortho):
    """Convert an orthonormal-frame Voigt-2 field to dual-frame coefficients."""
    out = np.empty_like(np.broadcast_to(v2_ortho, frames.tau.shape[:-2] + (3,))).copy()
    for idx in np.ndindex(*frames.tau.shape[:-2]):
        M = frames.at(*idx).dual_to_orthonormal()
        out[idx] = np.linalg.solve(M, np.broadcast_to(v2_ortho, out.shape)[idx])
    return out
