"""Few-level molecules and their Liouville-space representation.

Density matrices are vectorized row-major, ``vec(rho)[n*d + m] = rho[n, m]``,
so that ``vec(A @ rho) = kron(A, I) @ vec(rho)`` and
``vec(rho @ B) = kron(I, B.T) @ vec(rho)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CARTESIAN = "xyz"


class ModelError(ValueError):
    """Invalid molecular model input."""


class SingularResolventError(ArithmeticError):
    """Raised when ``omega - L`` cannot be inverted."""


def cartesian_index(nu) -> int:
    if isinstance(nu, str):
        try:
            return CARTESIAN.index(nu.lower())
        except ValueError:
            raise ValueError(f"unknown Cartesian index {nu!r}") from None
    nu = int(nu)
    if nu not in (0, 1, 2):
        raise ValueError(f"Cartesian index out of range: {nu}")
    return nu


@dataclass(frozen=True, eq=False)
class MolecularModel:
    """A molecule with ``d`` discrete levels.

    Parameters
    ----------
    energies : (d,) array
        Level energies (angular frequency units, hbar = 1).
    dephasing : (d, d) array
        Coherence decay rates ``gamma[n, m]``; symmetric with zero diagonal.
    dipole : (3, d, d) complex array
        Transition dipoles ``dipole[nu, n, m]``.
    position : (3,) array
    tag : str
    labels : level labels, optional
    """

    energies: np.ndarray
    dephasing: np.ndarray
    dipole: np.ndarray
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tag: str = "a"
    labels: tuple = ()

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float).copy()
        dephasing = np.asarray(self.dephasing, dtype=float).copy()
        dipole = np.asarray(self.dipole, dtype=complex).copy()
        position = np.asarray(self.position, dtype=float).reshape(3).copy()
        for arr in (energies, dephasing, dipole, position):
            arr.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "dephasing", dephasing)
        object.__setattr__(self, "dipole", dipole)
        object.__setattr__(self, "position", position)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(len(energies))))
        self.validate()

    @property
    def dim(self) -> int:
        return len(self.energies)

    def validate(self) -> None:
        """Raise :class:`ModelError` listing every violated invariant."""
        problems = []
        d = self.dim
        if self.energies.ndim != 1 or d < 2:
            raise ModelError(f"molecule {self.tag}: need at least 2 levels, got {d}")
        if not np.all(np.isfinite(self.energies)):
            problems.append("energies must be finite")
        if self.dephasing.shape != (d, d):
            problems.append(f"dephasing must have shape {(d, d)}")
        else:
            for n, m in zip(*np.nonzero(self.dephasing < 0)):
                problems.append(f"negative dephasing gamma[{n},{m}] = {self.dephasing[n, m]}")
            if not np.allclose(self.dephasing, self.dephasing.T, rtol=0, atol=1e-14):
                problems.append("dephasing must be symmetric")
            if np.any(np.diag(self.dephasing) != 0):
                problems.append("dephasing diagonal must vanish")
        if self.dipole.shape != (3, d, d):
            problems.append(f"dipole must have shape {(3, d, d)}")
        else:
            herm = self.dipole - np.conj(np.transpose(self.dipole, (0, 2, 1)))
            if np.max(np.abs(herm)) > 1e-12:
                problems.append("dipole matrix is not Hermitian")
            if np.max(np.abs(np.diagonal(self.dipole, axis1=1, axis2=2))) > 0:
                problems.append("permanent (diagonal) dipoles are not supported")
        if problems:
            raise ModelError(f"molecule {self.tag}: " + "; ".join(problems))

    def moved(self, position, tag: str | None = None) -> "MolecularModel":
        return MolecularModel(self.energies, self.dephasing, self.dipole,
                              position, tag if tag is not None else self.tag, self.labels)

    def scaled_dipoles(self, s: float) -> "MolecularModel":
        return MolecularModel(self.energies, self.dephasing, s * self.dipole,
                              self.position, self.tag, self.labels)


def model_from_transitions(energies: Sequence[float], transitions, *, position=(0, 0, 0),
                           tag="a", labels=()) -> MolecularModel:
    """Build a model from ``(n, m, gamma, dipole_vector)`` transition records.

    The (m, n) element of the dipole is filled with the complex conjugate.
    """
    d = len(energies)
    gamma = np.zeros((d, d))
    mu = np.zeros((3, d, d), dtype=complex)
    for n, m, g, vec in transitions:
        gamma[n, m] = gamma[m, n] = g
        mu[:, n, m] = vec
        mu[:, m, n] = np.conj(vec)
    return MolecularModel(energies, gamma, mu, position, tag, tuple(labels))


def two_level(omega_eg=1.0, gamma=0.05, dipole=(0.0, 0.0, 1.0), *, position=(0, 0, 0),
              tag="a") -> MolecularModel:
    return model_from_transitions([0.0, omega_eg], [(0, 1, gamma, np.asarray(dipole))],
                                  position=position, tag=tag, labels=("g", "e"))


def three_level(omega_e=1.0, omega_f=1.9, gamma=0.1, mu_ge=(0, 0, 1.0), mu_ef=(0, 0, 0.8),
                mu_gf=(0, 0, 0.5), *, gamma_gf=None, position=(0, 0, 0),
                tag="a") -> MolecularModel:
    """Three levels g < e < f with all three transitions dipole-allowed.

    ``mu_gf`` must be nonzero for a nonvanishing second-order response.
    """
    gamma_gf = gamma if gamma_gf is None else gamma_gf
    return model_from_transitions(
        [0.0, omega_e, omega_f],
        [(0, 1, gamma, np.asarray(mu_ge)), (1, 2, gamma, np.asarray(mu_ef)),
         (0, 2, gamma_gf, np.asarray(mu_gf))],
        position=position, tag=tag, labels=("g", "e", "f"))


@dataclass(frozen=True, eq=False)
class SuperOpSpace:
    """Liouville-space matrices of one molecule (read-only).

    ``eigvals``/``eigvecs``/``eigvecs_inv`` diagonalize ``liouvillian``.
    """

    dim: int
    liouvillian: np.ndarray
    vL: np.ndarray
    vR: np.ndarray
    vPlus: np.ndarray
    vMinus: np.ndarray
    ground: np.ndarray
    trace: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    eigvecs_inv: np.ndarray
    model: MolecularModel

    def trace_of(self, x: np.ndarray) -> complex:
        return self.trace @ x


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


def build_superop_space(model: MolecularModel) -> SuperOpSpace:
    """Construct the Liouvillian and dipole superoperators of ``model``."""
    model.validate()
    d = model.dim
    eye = np.eye(d)
    h = np.diag(model.energies).astype(complex)
    liou = np.kron(h, eye) - np.kron(eye, h.T)
    liou = liou - 1j * np.diag(model.dephasing.reshape(-1))
    vL = np.array([np.kron(model.dipole[nu], eye) for nu in range(3)])
    vR = np.array([np.kron(eye, model.dipole[nu].T) for nu in range(3)])
    vPlus = 0.5 * (vL + vR)
    vMinus = vL - vR
    ground = np.zeros(d * d, dtype=complex)
    ground[0] = 1.0
    trace = np.eye(d).reshape(-1).astype(complex)

    off = liou - np.diag(np.diag(liou))
    if not np.any(off):
        eigvals = np.diag(liou).copy()
        eigvecs = np.eye(d * d, dtype=complex)
        eigvecs_inv = eigvecs.copy()
    else:
        eigvals, eigvecs = np.linalg.eig(liou)
        eigvecs_inv = np.linalg.inv(eigvecs)
    _freeze(liou, vL, vR, vPlus, vMinus, ground, trace, eigvals, eigvecs, eigvecs_inv)
    return SuperOpSpace(d * d, liou, vL, vR, vPlus, vMinus, ground, trace,
                        eigvals, eigvecs, eigvecs_inv, model)


def resolvent(space: SuperOpSpace, omega: float) -> np.ndarray:
    """``(omega I - L)^{-1}`` by dense solve."""
    a = omega * np.eye(space.dim) - space.liouvillian
    try:
        g = np.linalg.solve(a, np.eye(space.dim, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise SingularResolventError(f"omega - L is singular at omega={omega}") from exc
    if not np.all(np.isfinite(g)):
        raise SingularResolventError(f"omega - L is singular at omega={omega}")
    return g


def propagator(space: SuperOpSpace, t: float) -> np.ndarray:
    """Retarded Green's function ``-i theta(t) exp(-i L t)``; zero for t < 0."""
    if t < 0:
        return np.zeros((space.dim, space.dim), dtype=complex)
    # exp of eigenvalues with Im <= 0 never overflows for t >= 0
    phase = np.exp(-1j * space.eigvals * t)
    return -1j * (space.eigvecs * phase) @ space.eigvecs_inv
