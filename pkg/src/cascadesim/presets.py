"""Reference scenarios used by the acceptance suite and the ``preset`` command."""

from __future__ import annotations

from .config import RunConfig, config_from_dict

X, Y, Z = [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]


def _two_level(tag, position=None, omega=1.0, gamma=0.1):
    mol = {"tag": tag, "energies": [0.0, omega], "labels": ["g", "e"],
           "dephasing": [[0, 1, gamma]], "dipoles": [[0, 1, Z]]}
    if position is not None:
        mol["position"] = position
    return mol


def _three_level(tag, position=None, gamma=0.1, gamma_gf=None):
    # the g-f dipole lies along x so the e and f coherences radiate into
    # orthogonal components
    gf = gamma if gamma_gf is None else gamma_gf
    mol = {"tag": tag, "energies": [0.0, 1.0, 1.9], "labels": ["g", "e", "f"],
           "dephasing": [[0, 1, gamma], [1, 2, gamma], [0, 2, gf]],
           "dipoles": [[0, 1, Z], [1, 2, [0.0, 0.0, 0.8]], [0, 2, [0.5, 0.0, 0.0]]]}
    if position is not None:
        mol["position"] = position
    return mol


def _pulse(name, role, t0, omega, width, direction=X, polarization=Z):
    return {"name": name, "role": role, "center_time": t0, "center_frequency": omega,
            "width": width, "amplitude_re": 1.0, "amplitude_im": 0.0, "k_direction": direction,
            "polarization": polarization}


# pulses travel along y so one polarization reaches both the z and x dipoles
_XZ = [0.6, 0.0, 0.8]


def dimer_linear() -> dict:
    return {
        "version": 1,
        "molecules": [_two_level("a", [0.0, 0.0, 0.0], gamma=0.1),
                      _two_level("b", [0.0, 0.0, 1.0], gamma=0.1)],
        "pulses": [_pulse("E1", "drive", 0.0, 1.0, 4.0),
                   _pulse("Es", "detection", 10.0, 1.0, 4.0)],
        "geometry": {"c": 1.0},
        "run": {"order": 1, "domain": "frequency", "vmi": True,
                "scan": {"axis": "omega_s", "start": 0.8, "stop": 1.2, "steps": 11}},
    }


def ladder_s2() -> dict:
    return {
        "version": 1,
        "molecules": [_three_level("a", [0.0, 0.0, 0.0], gamma=0.15),
                      _three_level("b", [0.0, 0.6, 1.2], gamma=0.15)],
        "pulses": [_pulse("E1", "drive", 0.0, 1.0, 3.0, Y, _XZ),
                   _pulse("E2", "drive", 3.0, 0.9, 3.0, Y, _XZ),
                   _pulse("Es", "detection", 9.0, 1.9, 3.0, Y, _XZ)],
        "geometry": {"c": 1.0},
        "run": {"order": 2, "domain": "time", "vmi": True},
    }


def cascade_s3() -> dict:
    return {
        "version": 1,
        "molecules": [_three_level("a", [0.0, 0.0, 0.0], gamma=0.2),
                      _three_level("b", [0.0, 0.6, 1.2], gamma=0.2)],
        "pulses": [_pulse("E1", "drive", 0.0, 1.0, 4.0, Y, _XZ),
                   _pulse("E2", "drive", 4.0, 0.9, 4.0, Y, _XZ),
                   _pulse("E3", "drive", 8.0, 1.0, 4.0, Y, _XZ),
                   _pulse("Es", "detection", 16.0, 1.1, 4.0, Y, _XZ)],
        "geometry": {"c": 1.0},
        "run": {"order": 3, "domain": "time", "vmi": True},
    }


def scramble_demo() -> dict:
    # b keeps its coherence long after pulse 1; pulse 2 arrives 5 widths later
    sigma = 3.0
    return {
        "version": 1,
        "molecules": [_three_level("a", [0.0, 0.0, 0.0], gamma=0.1),
                      _three_level("b", [0.0, 0.6, 1.2], gamma=0.01)],
        "pulses": [_pulse("E1", "drive", 0.0, 1.0, sigma, Y, _XZ),
                   _pulse("E2", "drive", 5 * sigma, 0.9, sigma, Y, _XZ),
                   _pulse("Es", "detection", 5 * sigma + 2.0, 1.9, sigma, Y, _XZ)],
        "geometry": {"c": 1.0},
        "run": {"order": 2, "domain": "time", "vmi": True, "breakdown": True},
    }


def lattice_pm() -> dict:
    return {
        "version": 1,
        "molecules": [_two_level("m", gamma=0.1)],
        "pulses": [_pulse("E1", "drive", 0.0, 1.0, 4.0),
                   _pulse("Es", "detection", 10.0, 1.0, 4.0)],
        "geometry": {"c": 1.0, "lattice": {"spacing": 3.141592653589793, "M": 5}},
        "run": {"order": 1, "domain": "frequency", "vmi": True},
    }


def scaling() -> dict:
    return {
        "version": 1,
        "molecules": [_two_level("m", gamma=0.1)],
        "pulses": [_pulse("E1", "drive", 0.0, 1.0, 4.0),
                   _pulse("Es", "detection", 10.0, 1.0, 4.0)],
        "geometry": {"c": 1.0, "chain": {"spacing": 1.0, "N": 5, "axis": Z}},
        "run": {"order": 1, "domain": "frequency", "vmi": True},
    }


PRESETS = {
    "dimer_linear": dimer_linear,
    "ladder_s2": ladder_s2,
    "cascade_s3": cascade_s3,
    "scramble_demo": scramble_demo,
    "lattice_pm": lattice_pm,
    "scaling": scaling,
}


def preset(name: str) -> RunConfig:
    """Validated :class:`RunConfig` for a named reference scenario."""
    try:
        build = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return config_from_dict(build())
