"""Molecular correlation functions <V+ G V- ... G V->.

Scalar time-domain entry points (``alpha_bar_time``, ``beta_bar_time``, ...)
use dense propagators; scalar frequency entry points apply resolvents in the
Liouvillian eigenbasis.  ``chain_time`` / ``chain_freq`` evaluate the same
chains on broadcast arrays through the Liouvillian eigenbasis.

No powers of ``-i`` from the interaction vertices are included here; the
``-i`` inside ``G(t)`` is.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import SingularResolventError, SuperOpSpace, cartesian_index, propagator

KINDS = {
    "alpha": (1, 2),
    "beta_bar": (2,),
    "beta_ordered": (3,),
    "beta_freq": (2,),
    "gamma_bar": (3,),
    "gamma_freq": (3,),
}


@dataclass(frozen=True)
class ResponseValue:
    value: complex
    kind: str
    indices: tuple
    arguments: tuple
    domain: str = "time"

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError("response value is not finite")
        arities = KINDS[self.kind]
        if len(self.arguments) not in arities:
            raise ValueError(f"{self.kind} takes {arities} arguments, got {len(self.arguments)}")


@lru_cache(maxsize=64)
def eigen_operators(space: SuperOpSpace):
    """Dipole superoperators expressed in the Liouvillian eigenbasis.

    Returns ``(vminus, ground, plus_rows)`` with ``vminus[nu]`` the
    transformed V-, ``ground`` the transformed initial state and
    ``plus_rows[nu] = Tr[V+^nu U .]``.
    """
    u, uinv = space.eigvecs, space.eigvecs_inv
    vminus = np.einsum("ab,nbc,cd->nad", uinv, space.vMinus, u)
    ground = uinv @ space.ground
    plus_rows = np.einsum("a,nab,bc->nc", space.trace, space.vPlus, u)
    for arr in (vminus, ground, plus_rows):
        arr.setflags(write=False)
    return vminus, ground, plus_rows


def _dense_chain(space, greens, indices):
    idx = [cartesian_index(n) for n in indices]
    x = space.ground
    for g, nu in zip(reversed(greens), reversed(idx[1:])):
        x = g @ (space.vMinus[nu] @ x)
    return complex(space.trace @ (space.vPlus[idx[0]] @ x))


def _freq_chain(space, omegas, indices):
    """Scalar frequency chain in the eigenbasis; ``omegas[0]`` is outermost.

    Modes the chain never reaches stay zero, so the undamped population pole
    only matters when populations are actually excited.
    """
    vminus, ground, plus_rows = eigen_operators(space)
    idx = [cartesian_index(n) for n in indices]
    x = ground
    for w, nu in zip(reversed(omegas), reversed(idx[1:])):
        src = x @ vminus[nu].T
        den = w - space.eigvals
        hit = (src != 0) & (den == 0)
        if np.any(hit):
            raise SingularResolventError(f"resolvent pole hit at omega = {w}")
        x = np.where(src == 0, 0, src / np.where(den == 0, 1, den))
    return complex(x @ plus_rows[idx[0]])


def alpha_freq(space: SuperOpSpace, omega: float, nu_i, nu_j) -> complex:
    """<V+^i G(omega) V-^j>."""
    return _freq_chain(space, [omega], (nu_i, nu_j))


def alpha_bar_time(space: SuperOpSpace, t: float, nu_i, nu_j) -> complex:
    return _dense_chain(space, [propagator(space, t)], (nu_i, nu_j))


def alpha_time(space: SuperOpSpace, t_i: float, t_j: float, nu_i, nu_j) -> complex:
    """Time-ordered <T V+^i(t_i) V-^j(t_j)>; zero unless t_i >= t_j."""
    if t_i < t_j:
        return 0j
    return alpha_bar_time(space, t_i - t_j, nu_i, nu_j)


def beta_bar_time(space: SuperOpSpace, t: float, t_prime: float, nu_i, nu_j, nu_k) -> complex:
    """<V+^i G(t) V-^j G(t') V-^k>."""
    if t < 0 or t_prime < 0:
        return 0j
    return _dense_chain(space, [propagator(space, t), propagator(space, t_prime)],
                        (nu_i, nu_j, nu_k))


def beta_ordered(space: SuperOpSpace, t_i, t_j, t_k, nu_i, nu_j, nu_k) -> complex:
    """<T V+^i(t_i) V-^j(t_j) V-^k(t_k)>, summed over both orderings of the V- legs."""
    return (beta_bar_time(space, t_i - t_j, t_j - t_k, nu_i, nu_j, nu_k)
            + beta_bar_time(space, t_i - t_k, t_k - t_j, nu_i, nu_k, nu_j))


def beta_freq(space: SuperOpSpace, omega_first, omega_second, nu_i, nu_j, nu_k) -> complex:
    """<V+^i G(w1 + w2) V-^j G(w1) V-^k>, ``w1`` entering at the earliest leg k."""
    return _freq_chain(space, [omega_first + omega_second, omega_first], (nu_i, nu_j, nu_k))


def beta_ordered_freq(space: SuperOpSpace, omega_j, omega_k, nu_i, nu_j, nu_k) -> complex:
    """Fourier image of :func:`beta_ordered` with leg j at ``omega_j`` and leg k at ``omega_k``."""
    return (beta_freq(space, omega_k, omega_j, nu_i, nu_j, nu_k)
            + beta_freq(space, omega_j, omega_k, nu_i, nu_k, nu_j))


def gamma_bar_time(space: SuperOpSpace, t, t_prime, t_second, nu_i, nu_j, nu_k, nu_l) -> complex:
    """<V+^i G(t) V-^j G(t') V-^k G(t'') V-^l>."""
    if min(t, t_prime, t_second) < 0:
        return 0j
    return _dense_chain(space, [propagator(space, t), propagator(space, t_prime),
                                propagator(space, t_second)], (nu_i, nu_j, nu_k, nu_l))


def gamma_freq(space: SuperOpSpace, omega_1, omega_2, omega_3, nu_i, nu_j, nu_k, nu_l) -> complex:
    """<V+^i G(w1+w2+w3) V-^j G(w1+w2) V-^k G(w1) V-^l>, ``w1`` earliest."""
    return _freq_chain(space, [omega_1 + omega_2 + omega_3, omega_1 + omega_2, omega_1],
                       (nu_i, nu_j, nu_k, nu_l))


def chain_time(space: SuperOpSpace, intervals: Sequence, indices: Sequence) -> np.ndarray:
    """Vectorized ``<V+ G(t_1) V- G(t_2) ... V->`` over broadcast interval arrays.

    ``intervals[0]`` is the latest interval (next to V+).
    """
    vminus, ground, plus_rows = eigen_operators(space)
    idx = [cartesian_index(n) for n in indices]
    lam = space.eigvals
    ts = np.broadcast_arrays(*[np.asarray(t, dtype=float) for t in intervals])
    x = ground
    for t, nu in zip(reversed(ts), reversed(idx[1:])):
        gate = (t >= 0)[..., None]
        prop = -1j * np.exp(-1j * lam * np.where(gate, t[..., None], 0.0)) * gate
        x = prop * (x @ vminus[nu].T)
    return x @ plus_rows[idx[0]]


def chain_freq(space: SuperOpSpace, omegas: Sequence, indices: Sequence) -> np.ndarray:
    """Vectorized ``<V+ G(w_1) V- G(w_2) ... V->``; ``omegas[0]`` is the outermost argument."""
    vminus, ground, plus_rows = eigen_operators(space)
    idx = [cartesian_index(n) for n in indices]
    lam = space.eigvals
    ws = np.broadcast_arrays(*[np.asarray(w, dtype=float) for w in omegas])
    x = ground
    with np.errstate(divide="ignore", invalid="ignore"):
        for w, nu in zip(reversed(ws), reversed(idx[1:])):
            src = x @ vminus[nu].T
            x = np.where(src == 0, 0, src / (w[..., None] - lam))
    return x @ plus_rows[idx[0]]
