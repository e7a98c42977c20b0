"""Multilinear Liouville-space responses on time and frequency grids.

Both engines build, for a set of inputs ``f_1 .. f_m`` acting on one
molecule, the density-matrix contribution that is linear in every input,
summed over all interaction orderings (the time-ordered response).  The
recursion runs over subsets ``S`` of the inputs::

    rho_S = sum_{j in S} G * (V- . f_j) rho_{S \\ j}

with ``*`` a causal convolution in time or a resolvent product in frequency.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from .core import SuperOpSpace
from .response import eigen_operators

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_STENCIL = np.array([-1.0, 0.0, 1.0, 2.0])


def _lagrange(s):
    """Cubic Lagrange basis on nodes -1, 0, 1, 2 evaluated at ``s`` (units of h)."""
    out = np.ones((4,) + np.shape(s))
    for j, xj in enumerate(_STENCIL):
        for xm in _STENCIL:
            if xm != xj:
                out[j] = out[j] * (s - xm) / (xj - xm)
    return out


def step_weights(lam, h):
    """Exponential-integrator weights for one step of ``w' = -i lam w + z``.

    Returns ``(decay, c)`` with ``w_{n+1} = decay w_n + sum_j c[j] z_{n+j-1}``,
    exact when ``z`` is the cubic through ``z_{n-1} .. z_{n+2}``.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    s = 0.5 * (_GL_X + 1.0)                       # nodes on [0, 1]
    basis = _lagrange(s)                          # (4, q)
    kern = np.exp(-1j * lam[:, None] * h * (1.0 - s)[None, :])  # (K, q)
    c = 0.5 * h * np.einsum("kq,jq,q->kj", kern, basis, _GL_W)
    return np.exp(-1j * lam * h), c


def causal_integral(z, lam, h):
    """``w(t_n) = int_{-inf}^{t_n} exp(-i lam (t_n - s)) z(s) ds`` per mode.

    ``z`` has shape (N, K); sources are taken to vanish outside the grid.
    """
    z = np.asarray(z, dtype=complex)
    n, k = z.shape
    decay, c = step_weights(lam, h)
    zp = np.zeros((n + 3, k), dtype=complex)
    zp[1:n + 1] = z
    u = (c[:, 0] * zp[0:n] + c[:, 1] * zp[1:n + 1]
         + c[:, 2] * zp[2:n + 2] + c[:, 3] * zp[3:n + 3])
    w = np.empty_like(u)
    for m in range(k):
        if not np.any(u[:, m]):
            w[:, m] = 0.0
            continue
        w[:, m] = lfilter([0.0, 1.0], [1.0, -decay[m]], u[:, m])
    return w


def _subsets(m):
    return sorted(range(1, 1 << m), key=lambda s: bin(s).count("1"))


def time_response(space: SuperOpSpace, inputs, h: float):
    """Polarization ``Tr[V+^nu rho_S(t)]`` (shape (N, 3)) of the full-set response.

    ``inputs`` is a list of (N, 3) complex field histories on a uniform grid
    of spacing ``h``.
    """
    vminus, ground, plus_rows = eigen_operators(space)
    lam = space.eigvals
    m = len(inputs)
    if m == 0:
        raise ValueError("need at least one input")
    n = inputs[0].shape[0]
    states = {0: np.broadcast_to(ground, (n, ground.size))}
    for mask in _subsets(m):
        src = 0
        for j in range(m):
            if mask & (1 << j):
                prev = states[mask ^ (1 << j)]
                f = inputs[j]
                for nu in range(3):
                    if np.any(f[:, nu]):
                        src = src + f[:, nu, None] * (prev @ vminus[nu].T)
        if isinstance(src, int):
            states[mask] = np.zeros((n, ground.size), dtype=complex)
        else:
            states[mask] = -1j * causal_integral(src, lam, h)
    full = states[(1 << m) - 1]
    return full @ plus_rows.T


def freq_response(space: SuperOpSpace, inputs):
    """Polarization at the summed frequency for inputs ``(amp[..., 3], omega[...])``.

    Output has the broadcast grid shape plus a trailing Cartesian axis.
    Modes with no dipole projection (populations) are dropped at the last
    resolvent so that a real pole there cannot poison the result.
    """
    vminus, ground, plus_rows = eigen_operators(space)
    lam = space.eigvals
    m = len(inputs)
    amps = [np.asarray(a, dtype=complex) for a, _ in inputs]
    omegas = [np.asarray(w, dtype=float) for _, w in inputs]
    visible = np.any(plus_rows != 0, axis=0)
    full_mask = (1 << m) - 1
    states = {0: ground}
    with np.errstate(divide="ignore", invalid="ignore"):
        for mask in _subsets(m):
            src = 0
            wsum = 0.0
            for j in range(m):
                if mask & (1 << j):
                    wsum = wsum + omegas[j]
                    prev = states[mask ^ (1 << j)]
                    a = amps[j]
                    for nu in range(3):
                        src = src + a[..., nu, None] * (prev @ vminus[nu].T)
            wsum = np.asarray(wsum)[..., None]
            if mask == full_mask:
                src = src[..., visible]
                states[mask] = src / (wsum - lam[visible])
            else:
                # structurally empty modes stay zero even on an exact pole
                states[mask] = np.where(src == 0, 0, src / (wsum - lam))
    return states[full_mask] @ plus_rows[:, visible].T
