"""Second-order exchange evaluated one chronological diagram at a time.

Each diagram fixes a full time ordering of the two drive interactions, the
emission on ``b`` and the absorption on ``a``.  Orderings that only involve
one molecule are plain nested causal integrals; orderings that compare times
on different molecules (a field on ``a`` before a field on ``b``) are
propagated in the joint space of both molecules.  The static kernel is used,
so the absorption happens exactly ``r/c`` after the emission, and the time
step is chosen to divide ``r/c``.

Diagram types for fields ``p`` before ``q``:

=====  ==========================================================
both   p, q on b, then emission
after  p on b; a absorbs, then q acts on a
window p on b; q acts on a between the emission and the absorption
cross  p on b, q on a, both before the emission
swap   p on a, q on b, both before the emission
=====  ==========================================================
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .geometry import tensor_C
from .propagation import causal_integral
from .response import eigen_operators
from .signals import (Scenario, _abs_floor, _converge, _detect_time, _field_history, _initial_time_step,
                      _separation, _time_grid, _time_terms, _zeta_branches, default_partitions,
                      space_of, vmi_prefactor)

DIAGRAM_TYPES = ("both", "after", "window", "cross", "swap")


def _apply(vm, f, state):
    out = 0
    for nu in range(3):
        if np.any(f[:, nu]):
            out = out + f[:, nu, None] * (state @ vm[nu].T)
    if isinstance(out, int):
        return np.zeros_like(state, dtype=complex)
    return out


def _ordered(space, fields, h):
    """Eigenbasis state after the given inputs act in the listed order."""
    vm, g, _ = eigen_operators(space)
    n = fields[0].shape[0]
    state = np.broadcast_to(g, (n, g.size))
    for f in fields:
        state = -1j * causal_integral(_apply(vm, f, state), space.eigvals, h)
    return state


def _delay(x, lam, tau, k):
    """``exp(-i lam tau) x(t - tau)`` on a grid with ``tau = k h``."""
    out = np.zeros_like(x)
    out[k:] = x[:len(x) - k] * np.exp(-1j * lam * tau)
    return out


def _joint_emission(space_a, space_b, first, second, h):
    """a-side states ``tr_b[V+^mu rho]`` after ordered inputs on both molecules.

    ``first`` and ``second`` are ``(molecule, field history)`` with molecule
    'a' or 'b'.  Returns shape (3, N, Da).
    """
    vm_a, g_a, _ = eigen_operators(space_a)
    vm_b, g_b, plus_b = eigen_operators(space_b)
    da, db = g_a.size, g_b.size
    lam = (space_a.eigvals[:, None] + space_b.eigvals[None, :]).ravel()
    n = first[1].shape[0]
    state = np.broadcast_to(np.outer(g_a, g_b).ravel(), (n, da * db))
    for mol, f in (first, second):
        s = state.reshape(n, da, db)
        src = np.zeros((n, da, db), dtype=complex)
        for nu in range(3):
            if not np.any(f[:, nu]):
                continue
            if mol == "a":
                src += f[:, nu, None, None] * np.einsum("ij,njk->nik", vm_a[nu], s)
            else:
                src += f[:, nu, None, None] * np.einsum("kl,njl->njk", vm_b[nu], s)
        state = -1j * causal_integral(src.reshape(n, da * db), lam, h)
    s = state.reshape(n, da, db)
    return np.stack([s @ plus_b[mu] for mu in range(3)])


def _pair_diagrams(sc: Scenario, a, b, zetas, t, h, k):
    """Raw detected amplitudes of the ten diagrams for one ordered pair and branch."""
    rvec = _separation(sc, a, b)
    tau = k * h
    coup = np.asarray(tensor_C(rvec).matrix)
    sa, sb = space_of(a), space_of(b)
    vm_a, _, plus_a = eigen_operators(sa)
    _, _, plus_b = eigen_operators(sb)
    lam_a = sa.eigvals

    def on(mol, j):
        pulse = sc.drives[j - 1]
        return _field_history(sc, pulse, zetas[j - 1], mol.position, t)

    def field_from_b(p_b):
        shifted = np.zeros_like(p_b)
        shifted[k:] = p_b[:len(p_b) - k]
        return shifted @ coup.T

    def detect(state_a):
        return _detect_time(sc, a, state_a @ plus_a.T, t, h)

    out = {}
    for p, q in ((1, 2), (2, 1)):
        key = f"{p}{q}"
        pb_p = _ordered(sb, [on(b, p)], h) @ plus_b.T
        f_p = field_from_b(pb_p)

        pb_pq = _ordered(sb, [on(b, p), on(b, q)], h) @ plus_b.T
        out["both", key] = detect(_ordered(sa, [field_from_b(pb_pq)], h))

        out["after", key] = detect(_ordered(sa, [f_p, on(a, q)], h))

        y = _ordered(sa, [on(a, q)], h)
        inside = y - _delay(y, lam_a, tau, k)
        src = _apply(vm_a, f_p, inside)
        out["window", key] = detect(-1j * causal_integral(src, lam_a, h))

        for name, first, second in (("cross", ("b", on(b, p)), ("a", on(a, q))),
                                    ("swap", ("a", on(a, p)), ("b", on(b, q)))):
            x = _joint_emission(sa, sb, first, second, h)
            src = 0
            for mu in range(3):
                xs = _delay(x[mu], lam_a, tau, k)
                for nu in range(3):
                    if coup[nu, mu] != 0:
                        src = src + coup[nu, mu] * (xs @ vm_a[nu].T)
            out[name, key] = detect(-1j * causal_integral(src, lam_a, h))
    return out


def _grid_step(sc: Scenario, h0: float):
    (a, b) = sc.molecules
    tau = float(np.linalg.norm(_separation(sc, a, b))) / sc.c
    k = max(1, int(math.ceil(tau / h0)))
    return tau / k, k


def diagram_contributions(scenario: Scenario, h: float | None = None) -> dict:
    """Raw (pre-prefactor) amplitudes keyed by ``(type, 'pq')``.

    Summed over both ordered pairs and all conjugation branches.  If ``h`` is
    omitted one step near the default initial step is used.
    """
    sc = _check(scenario)
    h, k = _grid_step(sc, h or _initial_time_step(sc))
    t = _time_grid(sc, h)
    total = {}
    for a, b in sc.ordered_pairs():
        for zetas in _zeta_branches(sc):
            for key, val in _pair_diagrams(sc, a, b, zetas, t, h, k).items():
                total[key] = total.get(key, 0j) + val
    return total


def _check(sc: Scenario) -> Scenario:
    if sc.order != 2 or len(sc.molecules) != 2:
        raise ValueError("diagram-level evaluation needs an order-2 scenario with two molecules")
    if sc.kernel != "static":
        sc = replace(sc, kernel="static")
    return sc


def theta_recombination(scenario: Scenario) -> dict:
    """Converged diagram-by-diagram sum against the compact three-term result.

    Returns signal values (after prefactor and imaginary part) for the
    diagram sum, the compact evaluation, and each diagram.
    """
    sc = _check(scenario)
    h0, _ = _grid_step(sc, _initial_time_step(sc))
    tau = h0 * _grid_step(sc, h0)[1]

    def grid_h(h):
        # every halving keeps tau an integer number of steps
        return h, int(round(tau / h))

    def diagrams(h):
        hh, k = grid_h(h)
        t = _time_grid(sc, hh)
        total = {}
        for a, b in sc.ordered_pairs():
            for zetas in _zeta_branches(sc):
                for key, val in _pair_diagrams(sc, a, b, zetas, t, hh, k).items():
                    name = f"{key[0]}_{key[1]}"
                    total[name] = total.get(name, 0j) + val
        return total

    parts = default_partitions(2)
    diag, _ = _converge(diagrams, h0, sc.tolerance, 4, _abs_floor(sc))
    compact, _ = _converge(lambda h: _time_terms(sc, parts, h), h0, sc.tolerance, 4, _abs_floor(sc))
    pref = vmi_prefactor(2, "time")
    return {
        "diagram_sum": float(np.imag(pref * sum(diag.values()))),
        "compact": float(np.imag(pref * sum(compact.values()))),
        "diagrams": {key: float(np.imag(pref * v)) for key, v in diag.items()},
        "compact_terms": {key: float(np.imag(pref * v)) for key, v in compact.items()},
    }
