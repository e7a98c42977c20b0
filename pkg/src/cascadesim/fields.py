"""Classical Gaussian pulses.

Each pulse is split into conjugation components ``zeta = +1`` (carrying
``exp(-i Omega t)``) and ``zeta = -1`` (its complex conjugate).  Frequency
envelopes use ``E(w) = int dt E(t) exp(i w t)`` and are parametrized so that
both components peak at ``w = +Omega``; the sign lives in ``zeta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class Pulse:
    center_time: float
    center_frequency: float
    width: float
    amplitude: complex = 1.0
    k_direction: tuple = (0.0, 0.0, 1.0)
    polarization: tuple = (1.0, 0.0, 0.0)
    role: str = "drive"
    c: float = 1.0
    name: str = ""

    def __post_init__(self):
        kd = np.asarray(self.k_direction, dtype=float)
        eps = np.asarray(self.polarization, dtype=float)
        norm_k = np.linalg.norm(kd)
        if norm_k == 0:
            raise ValueError("k_direction must be nonzero")
        kd = kd / norm_k
        object.__setattr__(self, "k_direction", tuple(kd))
        object.__setattr__(self, "polarization", tuple(eps))
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if self.role not in ("drive", "detection"):
            raise ValueError(f"pulse role must be 'drive' or 'detection', got {self.role!r}")
        if not self.width > 0:
            raise ValueError("pulse width must be positive")
        if not self.center_frequency > 0:
            raise ValueError("pulse center frequency must be positive")
        if not self.c > 0:
            raise ValueError("speed of light must be positive")
        if abs(np.linalg.norm(eps) - 1.0) > 1e-12:
            raise ValueError("polarization must be a unit vector")
        if abs(eps @ kd) > 1e-12:
            raise ValueError("polarization must be transverse to k")

    @property
    def wavevector(self) -> np.ndarray:
        return self.center_frequency / self.c * np.asarray(self.k_direction)

    @property
    def eps(self) -> np.ndarray:
        return np.asarray(self.polarization)

    def replace(self, **changes) -> "Pulse":
        fields = dict(self.__dict__)
        fields.update(changes)
        return Pulse(**fields)


def envelope_time(pulse: Pulse, zeta: int, t, derivative: int = 0):
    """Component ``zeta`` of the pulse in time, or its 1st/2nd time derivative."""
    if zeta not in (1, -1):
        raise ValueError("zeta must be +1 or -1")
    t = np.asarray(t, dtype=float)
    u = t - pulse.center_time
    s2 = pulse.width ** 2
    val = pulse.amplitude * np.exp(-0.5 * u * u / s2 - 1j * pulse.center_frequency * u)
    if derivative:
        rate = -u / s2 - 1j * pulse.center_frequency
        if derivative == 1:
            val = val * rate
        elif derivative == 2:
            val = val * (rate * rate - 1.0 / s2)
        else:
            raise ValueError("only derivatives up to second order are supported")
    return val if zeta == 1 else np.conj(val)


def envelope_freq(pulse: Pulse, zeta: int, omega):
    """Fourier envelope of component ``zeta``; peaks at ``omega = Omega`` for both signs."""
    if zeta not in (1, -1):
        raise ValueError("zeta must be +1 or -1")
    w = np.asarray(omega, dtype=float)
    val = (pulse.amplitude * pulse.width * SQRT2PI
           * np.exp(-0.5 * (pulse.width * (w - pulse.center_frequency)) ** 2
                    + 1j * w * pulse.center_time))
    return val if zeta == 1 else np.conj(val)


def spatial_phase(pulse: Pulse, zeta: int, r) -> complex:
    return complex(np.exp(1j * zeta * (pulse.wavevector @ np.asarray(r, dtype=float))))
