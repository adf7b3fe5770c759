"""Discretisation of the cell ``I × Y`` and spectral derivatives on the torus."""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre


@dataclass(frozen=True)
class CellGrid:
    """Fourier grid of ``n_y × n_y`` nodes on ``Y = [0,1)²``, ``n_t`` Gauss nodes on ``I``.

    ``p_leg`` is the Legendre degree of the thickness dependence used for
    finite ``γ``. Weights are normalised so that each factor sums to one.
    """

    n_y: int = 8
    n_t: int = 4
    p_leg: int = 4
    t_nodes: np.ndarray = field(init=False, repr=False, compare=False)
    t_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_y < 4 or self.n_y % 2:
            raise ValueError(f"n_y must be even and at least 4, got {self.n_y}")
        if self.n_t < 1:
            raise ValueError("n_t must be positive")
        if self.p_leg < 1:
            raise ValueError("p_leg must be at least 1")
        s, w = legendre.leggauss(self.n_t)
        object.__setattr__(self, "t_nodes", 0.5 * s)
        object.__setattr__(self, "t_weights", 0.5 * w)

    @property
    def y_nodes(self):
        return np.arange(self.n_y) / self.n_y

    @property
    def y_weight(self):
        return 1.0 / self.n_y**2

    def gamma_quadrature(self):
        """Thickness nodes and weights used for finite ``γ``.

        At least ``p_leg + 1`` Gauss nodes are used, so that products of the
        polynomial fields are integrated exactly; with fewer nodes a Legendre
        mode vanishing at every node would relax the strain for free.
        """
        n = max(self.n_t, self.p_leg + 1)
        if n == self.n_t:
            return self.t_nodes, self.t_weights
        s, w = legendre.leggauss(n)
        return 0.5 * s, 0.5 * w

    def legendre_basis(self):
        """Orthonormal Legendre values and t-derivatives at the finite-γ nodes.

        Returns ``(V, dV)`` of shape ``(n_q, p_leg + 1)`` with
        ``V[i, l] = sqrt(2l+1) P_l(2 t_i)`` and ``t_i`` from
        :meth:`gamma_quadrature`.
        """
        t, _ = self.gamma_quadrature()
        s = 2.0 * t
        V = np.empty((t.size, self.p_leg + 1))
        dV = np.empty_like(V)
        for l in range(self.p_leg + 1):
            c = np.zeros(l + 1)
            c[l] = np.sqrt(2 * l + 1)
            V[:, l] = legendre.legval(s, c)
            dV[:, l] = 2.0 * legendre.legval(s, legendre.legder(c))
        return V, dV

    def as_dict(self):
        return {"n_y": self.n_y, "n_t": self.n_t, "p_leg": self.p_leg}


def _symbols(n):
    k = 2.0 * np.pi * np.fft.fftfreq(n, 1.0 / n)
    k1 = k.copy()
    k1[n // 2] = 0.0  # odd derivatives of the Nyquist cosine vanish at the nodes
    return k1, -(k**2)


def nyquist_filter(f):
    """Remove Fourier modes with a Nyquist frequency in either in-plane axis.

    Relaxation fields are trigonometric polynomials of degree below ``N/2``;
    the Nyquist modes have vanishing nodal first derivatives and would
    otherwise act as spurious, strain-free relaxations.
    """
    n1, n2 = f.shape[-2], f.shape[-1]
    F = np.fft.fft2(f)
    F[..., n1 // 2, :] = 0.0
    F[..., :, n2 // 2] = 0.0
    return np.fft.ifft2(F).real


def d1(f, axis):
    """First derivative along ``axis`` (-2 for y1, -1 for y2) of nodal values."""
    n = f.shape[axis]
    k1, _ = _symbols(n)
    shape = [1] * f.ndim
    shape[axis] = n
    return np.fft.ifft(1j * k1.reshape(shape) * np.fft.fft(f, axis=axis), axis=axis).real


def d2(f, axis):
    n = f.shape[axis]
    _, k2 = _symbols(n)
    shape = [1] * f.ndim
    shape[axis] = n
    return np.fft.ifft(k2.reshape(shape) * np.fft.fft(f, axis=axis), axis=axis).real


def d12(f):
    return d1(d1(f, -2), -1)
