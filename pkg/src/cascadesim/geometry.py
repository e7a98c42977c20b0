"""Vacuum-mediated coupling tensors and lattice phase sums.

``tensor_D`` is the operator ``(-lap delta_ij + d_i d_j)`` applied to
``exp(i kappa r) / r``; ``tensor_C`` is the same operator on ``1 / r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class CouplingTensor:
    matrix: np.ndarray
    separation: np.ndarray
    omega: float | None = None

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def _unit(r):
    r = np.asarray(r, dtype=float)
    dist = np.linalg.norm(r)
    if dist == 0:
        raise ValueError("coupling tensor undefined at zero separation")
    return r / dist, dist


def tensor_D(r, omega_over_c: float) -> CouplingTensor:
    """Closed form ``[(3 rr - 1)(1 - i k r) + (1 - rr) k^2 r^2] exp(i k r) / r^3``."""
    rhat, dist = _unit(r)
    k = float(omega_over_c)
    rr = np.outer(rhat, rhat)
    eye = np.eye(3)
    # shares the static term bit-for-bit so kappa = 0 reproduces tensor_C exactly
    near = (3 * rr - eye) / dist ** 3
    kr = k * dist
    mat = (near * (1 - 1j * kr) + (eye - rr) * (kr ** 2 / dist ** 3)) * np.exp(1j * kr)
    return CouplingTensor(mat, np.asarray(r, dtype=float), float(omega_over_c))


def tensor_C(r) -> CouplingTensor:
    """Static tensor ``(3 rr - 1) / r^3``."""
    rhat, dist = _unit(r)
    rr = np.outer(rhat, rhat)
    mat = (3 * rr - np.eye(3)) / dist ** 3
    return CouplingTensor(mat.astype(complex), np.asarray(r, dtype=float), None)


def transverse_operator_fd(func, r, rel_step: float = 1e-4) -> np.ndarray:
    """Apply ``(-lap delta_ij + d_i d_j)`` to a scalar function by finite differences.

    Central second differences at steps h and 2h, combined by Richardson
    extrapolation; ``h = rel_step * |r|``.
    """
    r = np.asarray(r, dtype=float)
    h0 = rel_step * np.linalg.norm(r)
    eye = np.eye(3)

    def hessian(h):
        f0 = func(r)
        hess = np.zeros((3, 3), dtype=complex)
        for i in range(3):
            ei = eye[i] * h
            hess[i, i] = (func(r + ei) - 2 * f0 + func(r - ei)) / h ** 2
            for j in range(i + 1, 3):
                ej = eye[j] * h
                val = (func(r + ei + ej) - func(r + ei - ej)
                       - func(r - ei + ej) + func(r - ei - ej)) / (4 * h ** 2)
                hess[i, j] = hess[j, i] = val
        return hess

    hess = (4 * hessian(h0) - hessian(2 * h0)) / 3
    return -np.trace(hess) * eye + hess


def coupling_contract(rvecs, kappa, u, v, *, static: bool = False) -> np.ndarray:
    """``u . D(r, kappa) . v`` broadcast over separations and wavenumbers.

    ``rvecs`` has shape (..., 3); ``kappa``, ``u`` (..., 3) and ``v`` (..., 3)
    broadcast against it.  With ``static=True`` the kernel is
    ``C exp(i kappa r)`` (the near-field part only).
    """
    rvecs = np.asarray(rvecs, dtype=float)
    dist = np.linalg.norm(rvecs, axis=-1)
    if np.any(dist == 0):
        raise ValueError("coupling tensor undefined at zero separation")
    rhat = rvecs / dist[..., None]
    kappa = np.asarray(kappa, dtype=float)
    ur = np.sum(u * rhat, axis=-1)
    vr = np.sum(v * rhat, axis=-1)
    uv = np.sum(u * v, axis=-1)
    near = 3 * ur * vr - uv
    if static:
        return near * np.exp(1j * kappa * dist) / dist ** 3
    kr = kappa * dist
    return (near * (1 - 1j * kr) + (uv - ur * vr) * kr ** 2) * np.exp(1j * kr) / dist ** 3


def retarded_field(r, c: float, p, dp=None, ddp=None, *, static: bool = False) -> np.ndarray:
    """Field at the receiver from a source polarization history.

    ``p``, ``dp``, ``ddp`` are the source polarization and its first two time
    derivatives, already evaluated at the retarded time ``t - |r|/c``
    (arrays of shape (..., 3)).  This is the time-domain kernel whose Fourier
    transform is :func:`tensor_D`; ``static=True`` keeps only the
    ``tensor_C`` term.
    """
    rhat, dist = _unit(r)
    rr = np.outer(rhat, rhat)
    eye = np.eye(3)
    near = (3 * rr - eye) / dist ** 3
    out = p @ near.T
    if static:
        return out
    tau = dist / c
    out = out + tau * (dp @ near.T)
    out = out - tau ** 2 * (ddp @ ((eye - rr) / dist ** 3).T)
    return out


def cubic_lattice(M: int, spacing: float, origin=(0.0, 0.0, 0.0)) -> np.ndarray:
    idx = np.arange(M)
    grid = np.stack(np.meshgrid(idx, idx, idx, indexing="ij"), axis=-1).reshape(-1, 3)
    return spacing * grid.astype(float) + np.asarray(origin, dtype=float)


def phase_matching_sum(positions, k_out, k_in_list) -> complex:
    """``sum_{a != b} exp(i (sum k_in) . r_b - i k_out . r_a)``.

    ``k_in_list`` holds the already-signed input wavevectors ``zeta_i k_i``.
    """
    pos = np.asarray(positions, dtype=float)
    if len(pos) < 2:
        raise ValueError("phase matching sum needs at least two positions")
    k_in = np.sum(np.atleast_2d(np.asarray(k_in_list, dtype=float)), axis=0)
    k_out = np.asarray(k_out, dtype=float)
    ein = np.exp(1j * pos @ k_in)
    eout = np.exp(-1j * pos @ k_out)
    return complex(ein.sum() * eout.sum() - np.sum(ein * eout))
