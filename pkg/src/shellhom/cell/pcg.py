"""Matrix-free preconditioned conjugate gradients for periodic cell functionals.

A discrete cell functional is ``F(x) = Σ w (s0 + D x)ᵀ C (s0 + D x)`` where
``x`` holds ``n_f`` periodic fields on the ``N × N`` torus plus ``n_c``
constants, ``D`` is translation invariant in ``y`` and ``C`` is a field of
SPD matrices. Freezing ``C`` at its ``y``-average makes the Hessian block
diagonal in Fourier space; its exact inverse is the preconditioner.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import NoConvergence


class QuadraticCell:
    """Discrete quadratic cell functional.

    ``forward(xf, xc)`` maps fields ``(n_f, N, N)`` and constants ``(n_c,)``
    to strains ``(n_q, N, N, m)``; ``adjoint`` is its exact transpose.
    ``weights`` are the quadrature weights of the ``n_q`` strain layers,
    excluding the uniform ``1/N²`` cell weight.
    """

    def __init__(self, n_f, n_c, N, weights, material, forward, adjoint):
        self.n_f, self.n_c, self.N = n_f, n_c, N
        self.weights = np.asarray(weights, dtype=float)
        self.material = material
        self.forward = forward
        self.adjoint = adjoint
        self._w = (self.weights / N**2)[:, None, None, None]
        self._precond = None

    # packing -------------------------------------------------------------
    @property
    def size(self):
        return self.n_f * self.N * self.N + self.n_c

    def split(self, x):
        k = self.n_f * self.N * self.N
        return x[:k].reshape(self.n_f, self.N, self.N), x[k:]

    def join(self, xf, xc):
        return np.concatenate([np.ravel(xf), np.ravel(xc)])

    # functional ----------------------------------------------------------
    def _stress(self, s, material=None):
        C = self.material if material is None else material
        return self._w * np.einsum("...ij,...j->...i", C, s)

    def energy(self, x, load):
        s = load + self.forward(*self.split(x))
        return float(np.sum(s * self._stress(s)))

    def hess(self, x, material=None):
        return self.join(*self.adjoint(self._stress(self.forward(*self.split(x)), material)))

    def rhs(self, load):
        return -self.join(*self.adjoint(self._stress(load)))

    def bilinear(self, x, y, load_x, load_y):
        sx = load_x + self.forward(*self.split(x))
        sy = load_y + self.forward(*self.split(y))
        return float(np.sum(sx * self._stress(sy)))

    # preconditioner ------------------------------------------------------
    def preconditioner(self):
        if self._precond is None:
            self._precond = FourierBlockPreconditioner(self)
        return self._precond


class FourierBlockPreconditioner:
    """Exact pseudo-inverse of the Hessian with ``C`` replaced by its y-average.

    Non-constant Fourier modes of the fields decouple into ``n_f × n_f``
    blocks, assembled from impulse responses. The constant modes of the
    fields and the constants couple to each other only, and are inverted as
    one small dense block.
    """

    def __init__(self, problem, rcond=1e-12):
        self.problem = problem
        N, n_f, n_c = problem.N, problem.n_f, problem.n_c
        C_ref = np.broadcast_to(
            problem.material.mean(axis=(1, 2), keepdims=True), problem.material.shape
        )
        self.C_ref = C_ref

        # impulse responses of the reference Hessian
        resp = np.empty((n_f, n_f, N, N))
        for c in range(n_f):
            xf = np.zeros((n_f, N, N))
            xf[c, 0, 0] = 1.0
            out_f, _ = problem.split(problem.hess(problem.join(xf, np.zeros(n_c)), C_ref))
            resp[:, c] = out_f
        A = np.fft.fft2(resp).transpose(2, 3, 0, 1)  # (N, N, n_f, n_f)
        A = 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
        lam, vec = np.linalg.eigh(A)
        cut = rcond * max(lam.max(), 1e-300)
        inv = np.where(lam > cut, 1.0 / np.where(lam > cut, lam, 1.0), 0.0)
        Ainv = (vec * inv[..., None, :]) @ np.conj(np.swapaxes(vec, -1, -2))
        Ainv[0, 0] = 0.0
        self.Ainv = Ainv

        # constant-mode block
        cols = []
        for c in range(n_f + n_c):
            xf = np.zeros((n_f, N, N))
            xc = np.zeros(n_c)
            if c < n_f:
                xf[c] = 1.0
            else:
                xc[c - n_f] = 1.0
            cols.append(problem.join(xf, xc))
        self.V = np.array(cols).T
        G = self.V.T @ np.column_stack([problem.hess(v, C_ref) for v in cols])
        self.Ginv = np.linalg.pinv(0.5 * (G + G.T), rcond=rcond, hermitian=True)

    def __call__(self, r):
        p = self.problem
        rf, _ = p.split(r)
        R = np.fft.fft2(rf).transpose(1, 2, 0)  # (N, N, n_f)
        Z = np.einsum("...ij,...j->...i", self.Ainv, R)
        zf = np.fft.ifft2(Z.transpose(2, 0, 1)).real
        z = p.join(zf, np.zeros(p.n_c))
        z += self.V @ (self.Ginv @ (self.V.T @ r))
        return z


@dataclass
class PCGResult:
    x: np.ndarray
    residual: float
    iterations: int
    history: list


def pcg(apply_A, b, precond=None, tol=1e-10, max_iter=10_000, x0=None):
    """Preconditioned CG for a symmetric positive semidefinite, consistent system.

    Stops when ``‖b - A x‖ / ‖b‖ ≤ tol``; raises :class:`NoConvergence`
    with the residual history after ``max_iter`` iterations.
    """
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else x0.copy()
    if bnorm == 0.0:
        return PCGResult(x, 0.0, 0, [0.0])
    r = b - apply_A(x) if x0 is not None else b.copy()
    z = precond(r) if precond else r
    d = z.copy()
    rz = r @ z
    history = [np.linalg.norm(r) / bnorm]
    it = 0
    while history[-1] > tol:
        if it >= max_iter:
            raise NoConvergence(
                f"PCG stalled at relative residual {history[-1]:.3e} after {it} iterations", history
            )
        Ad = apply_A(d)
        dAd = d @ Ad
        if dAd <= 0.0:
            # search direction fell into the numerical kernel
            break
        alpha = rz / dAd
        x += alpha * d
        r -= alpha * Ad
        it += 1
        history.append(np.linalg.norm(r) / bnorm)
        z = precond(r) if precond else r
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    if history[-1] > tol:
        raise NoConvergence(f"PCG broke down at relative residual {history[-1]:.3e}", history)
    return PCGResult(x, history[-1], it, history)
