"""Heterodyne-detected signals: additive baseline and vacuum-exchange corrections.

A vacuum-exchange term is labelled by the set ``B`` of drive fields that act
on the emitting molecule ``b``; the remaining fields act on the detected
molecule ``a`` together with the field radiated by ``b``.  Order 2 has terms
``B = {1}, {2}, {1, 2}``; the third-order cascade keeps ``|B| = 2``.

Time and frequency evaluations use the same kernel: the retarded dipole
field whose Fourier transform is ``tensor_D(r, w / c)`` (``kernel='full'``)
or only its static near-field part ``tensor_C`` (``kernel='static'``).
Overall constants are collected in ``VMI_TIME_PREFACTOR`` and
``baseline_prefactor``; docs/prefactors.md explains each one.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .core import MolecularModel, SingularResolventError, build_superop_space
from .fields import Pulse, envelope_freq, envelope_time
from .geometry import retarded_field
from .propagation import freq_response, time_response

log = logging.getLogger(__name__)

VMI_TIME_PREFACTOR = {1: -2.0 / math.pi, 2: 4.0 * math.pi, 3: 4.0 * math.pi}
MAX_REFINEMENTS = 5


class QuadratureError(RuntimeError):
    def __init__(self, term, message):
        super().__init__(f"{message} (term {term})")
        self.term = term


def baseline_prefactor(order: int) -> float:
    return 2.0 * (-1.0) ** order


def vmi_prefactor(order: int, domain: str) -> float:
    k = VMI_TIME_PREFACTOR[order]
    return k if domain == "time" else k / (2.0 * math.pi) ** order


_SPACES: dict = {}


def space_of(model: MolecularModel):
    """Superoperator space shared by every molecule with the same internal structure."""
    key = (model.energies.tobytes(), model.dephasing.tobytes(), model.dipole.tobytes())
    space = _SPACES.get(key)
    if space is None:
        if len(_SPACES) > 256:
            _SPACES.clear()
        space = _SPACES[key] = build_superop_space(model)
    return space


SCAN_AXES = ("omega_s", "omega", "delay", "separation")


@dataclass(frozen=True)
class ScanSpec:
    axis: str          # 'omega_s', 'omega_<i>', 'delay_<i>' or 'separation'
    values: tuple

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or len(vals) < 1:
            raise ValueError("scan grid must be a non-empty 1-D list")
        if np.any(np.diff(vals) <= 0):
            raise ValueError("scan grid must be strictly increasing")
        base = self.axis.split("_")[0] if self.axis not in ("omega_s", "separation") else self.axis
        if base not in SCAN_AXES:
            raise ValueError(f"unknown scan axis {self.axis!r}")
        object.__setattr__(self, "values", tuple(float(v) for v in vals))

    @classmethod
    def parse(cls, text: str) -> "ScanSpec":
        axis, _, rng = text.partition("=")
        start, stop, steps = rng.split(":")
        return cls(axis.strip(), tuple(np.linspace(float(start), float(stop), int(steps))))


@dataclass(frozen=True, eq=False)
class Scenario:
    molecules: tuple
    pulses: tuple
    c: float = 1.0
    order: int = 1
    domain: str = "frequency"
    vmi: bool = True
    kernel: str = "full"
    rwa: bool = False
    tolerance: float = 1e-6
    window: float = 8.0
    unit_phases: bool = False
    coupling_separation: tuple | None = None
    scan: ScanSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "molecules", tuple(self.molecules))
        object.__setattr__(self, "pulses", tuple(self.pulses))
        problems = []
        if not self.molecules:
            problems.append("need at least one molecule")
        tags = [m.tag for m in self.molecules]
        if len(set(tags)) != len(tags):
            problems.append("molecule tags must be unique")
        n_det = sum(p.role == "detection" for p in self.pulses)
        if n_det != 1:
            problems.append("exactly one detection pulse is required")
        if self.order not in (1, 2, 3):
            problems.append("order must be 1, 2 or 3")
        elif len(self.drives) != self.order:
            problems.append(f"order {self.order} needs {self.order} drive pulses, "
                            f"got {len(self.drives)}")
        if self.vmi and len(self.molecules) < 2:
            problems.append("vacuum-exchange signals need at least two molecules")
        if self.domain not in ("time", "frequency"):
            problems.append("domain must be 'time' or 'frequency'")
        if self.kernel not in ("full", "static"):
            problems.append("kernel must be 'full' or 'static'")
        if not self.tolerance > 0:
            problems.append("tolerance must be positive")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def drives(self) -> tuple:
        return tuple(p for p in self.pulses if p.role == "drive")

    @property
    def detection(self) -> Pulse:
        return next(p for p in self.pulses if p.role == "detection")

    def ordered_pairs(self):
        mols = sorted(self.molecules, key=lambda m: m.tag)
        return [(a, b) for a in mols for b in mols if a is not b]

    def digest(self) -> str:
        payload = {
            "molecules": [[m.tag, m.energies.tolist(), m.dephasing.tolist(),
                           np.round(m.dipole, 15).real.tolist(), np.round(m.dipole, 15).imag.tolist(),
                           m.position.tolist()] for m in self.molecules],
            "pulses": [[p.role, p.center_time, p.center_frequency, p.width, p.amplitude.real,
                        p.amplitude.imag, list(p.k_direction), list(p.polarization)]
                       for p in self.pulses],
            "run": [self.c, self.order, self.domain, self.vmi, self.kernel, self.rwa,
                    self.tolerance, self.window, self.unit_phases, self.coupling_separation,
                    None if self.scan is None else [self.scan.axis, list(self.scan.values)]],
        }
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True, eq=False)
class SignalGrid:
    axes: list
    values: np.ndarray
    terms: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        expected = tuple(len(v) for _, v in self.axes) or (1,)
        if vals.shape != expected:
            raise ValueError(f"values shape {vals.shape} does not match axes {expected}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("signal values must be finite")
        object.__setattr__(self, "values", vals)


# ---------------------------------------------------------------- helpers

def _zeta_branches(sc: Scenario):
    branches = list(itertools.product((-1, 1), repeat=sc.order))
    if not sc.rwa:
        return branches
    omega_s = sc.detection.center_frequency
    mism = [abs(sum(z * p.center_frequency for z, p in zip(zs, sc.drives)) - omega_s)
            for zs in branches]
    best = min(mism)
    return [zs for zs, m in zip(branches, mism) if m <= best + 1e-12]


def _phase(sc: Scenario, pulse: Pulse, zeta: int, r) -> complex:
    if sc.unit_phases:
        return 1.0 + 0j
    return complex(np.exp(1j * zeta * (pulse.wavevector @ r)))


def _separation(sc: Scenario, a: MolecularModel, b: MolecularModel) -> np.ndarray:
    if sc.coupling_separation is not None:
        return np.asarray(sc.coupling_separation, dtype=float)
    r = a.position - b.position
    if not np.linalg.norm(r) > 0:
        raise ValueError(f"molecules {a.tag} and {b.tag} coincide")
    return r


def _subsets(n):
    fields = range(1, n + 1)
    return [frozenset(c) for k in range(1, n + 1) for c in itertools.combinations(fields, k)]


def term_label(b_fields) -> str:
    return "b" + "".join(str(j) for j in sorted(b_fields))


def default_partitions(order: int, cascade_only: bool = False):
    parts = _subsets(order)
    if cascade_only:
        parts = [p for p in parts if len(p) >= 2 and order - len(p) >= 1]
    return parts


def _coherence_scale(sc: Scenario):
    lams = np.concatenate([space_of(m).eigvals for m in sc.molecules])
    coh = lams[np.abs(lams) > 0]
    gmin = np.min(-coh.imag) if len(coh) else 1.0
    wmax = np.max(np.abs(coh.real)) if len(coh) else 0.0
    return gmin, wmax


# ---------------------------------------------------------------- time domain

def _time_grid(sc: Scenario, h: float) -> np.ndarray:
    w = sc.window
    starts = [p.center_time - w * p.width for p in sc.pulses]
    t0 = min(starts)
    t1 = sc.detection.center_time + w * sc.detection.width
    n = int(math.ceil((t1 - t0) / h)) + 1
    return t0 + h * np.arange(n)


def _field_history(sc, pulse, zeta, r, t, derivative=0):
    amp = envelope_time(pulse, zeta, t, derivative) * _phase(sc, pulse, zeta, r)
    return amp[:, None] * pulse.eps[None, :]


def _source_polarization(sc, b, fields_b, zetas, t, h, tau, kernel):
    """Polarization of ``b`` (and derivatives) at retarded times ``t - tau``."""
    space = space_of(b)
    shifted = t - tau

    def resp(derivs):
        inputs = [_field_history(sc, sc.drives[j - 1], zetas[j - 1], b.position, shifted, d)
                  for j, d in zip(fields_b, derivs)]
        return time_response(space, inputs, h)

    m = len(fields_b)
    p = resp([0] * m)
    if kernel == "static":
        return p, None, None
    dp = sum(resp([1 if i == k else 0 for i in range(m)]) for k in range(m))
    ddp = sum(resp([2 if i == k else 0 for i in range(m)]) for k in range(m))
    for i, k in itertools.combinations(range(m), 2):
        ddp = ddp + 2 * resp([1 if x in (i, k) else 0 for x in range(m)])
    return p, dp, ddp


def _detect_time(sc, a, p_a, t, h):
    det = sc.detection
    ref = np.conj(envelope_time(det, 1, t)) * _phase(sc, det, -1, a.position)
    return h * np.sum(ref * (p_a @ det.eps))


def _time_terms(sc: Scenario, partitions, h: float) -> dict:
    t = _time_grid(sc, h)
    n = sc.order
    terms = {term_label(B): 0j for B in partitions}
    for a, b in sc.ordered_pairs():
        rvec = _separation(sc, a, b)
        tau = np.linalg.norm(rvec) / sc.c
        for zetas in _zeta_branches(sc):
            for B in partitions:
                fb = sorted(B)
                fa = [j for j in range(1, n + 1) if j not in B]
                p, dp, ddp = _source_polarization(sc, b, fb, zetas, t, h, tau, sc.kernel)
                f_vac = retarded_field(rvec, sc.c, p, dp, ddp, static=sc.kernel == "static")
                inputs = [_field_history(sc, sc.drives[j - 1], zetas[j - 1], a.position, t)
                          for j in fa] + [f_vac]
                p_a = time_response(space_of(a), inputs, h)
                terms[term_label(B)] += _detect_time(sc, a, p_a, t, h)
    return terms


def _baseline_time_terms(sc: Scenario, h: float) -> dict:
    t = _time_grid(sc, h)
    terms = {}
    for a in sorted(sc.molecules, key=lambda m: m.tag):
        acc = 0j
        for zetas in _zeta_branches(sc):
            inputs = [_field_history(sc, p, z, a.position, t) for p, z in zip(sc.drives, zetas)]
            acc += _detect_time(sc, a, time_response(space_of(a), inputs, h), t, h)
        terms[f"mol_{a.tag}"] = acc
    return terms


def _initial_time_step(sc: Scenario) -> float:
    _, wmax = _coherence_scale(sc)
    wscale = wmax + sum(p.center_frequency for p in sc.pulses)
    return min(0.1, 0.5 / wscale, min(p.width for p in sc.pulses) / 8.0)


def _converge(evaluate: Callable[[float], dict], step0: float, tol: float, order: int | None,
              atol: float = 0.0):
    """Halve the step until every term is stable to ``tol``.

    ``order`` is the convergence order for Richardson extrapolation.  With
    ``order=None`` the rule is taken to converge geometrically (trapezoid on
    a Lorentzian-broadened integrand), so the finer value is returned with
    error estimate ``diff**2 / |value|``.  Terms smaller than ``atol`` are
    treated as converged zeros.
    """
    prev = evaluate(step0)
    step = step0
    for _ in range(MAX_REFINEMENTS):
        step /= 2
        cur = evaluate(step)
        scale = sum(abs(v) for v in cur.values())
        worst, worst_term = 0.0, None
        out = {}
        for key, val in cur.items():
            diff = abs(val - prev[key])
            if order is not None:
                fac = 2 ** order - 1
                out[key] = val + (val - prev[key]) / fac
                diff /= fac
            else:
                out[key] = val
            if max(abs(val), abs(prev[key])) < atol:
                continue
            rel = diff / max(abs(val), 1e-12 * scale, 1e-300)
            if order is None:
                # geometric convergence: halving the step squares the error
                rel = rel * min(rel, 1.0)
            if rel > worst:
                worst, worst_term = rel, key
        if worst <= tol:
            return out, step
        log.debug("refining step to %g (worst relative change %.3g in %s)", step, worst, worst_term)
        prev = cur
    raise QuadratureError(worst_term, f"no convergence to rtol {tol:g} at step {step:g}")


# ---------------------------------------------------------------- frequency domain

def _freq_axes(sc: Scenario, step: float):
    axes = []
    for p in sc.drives:
        half = sc.window / p.width
        n = int(math.ceil(2 * half / step)) + 1
        axes.append(p.center_frequency - half + step * np.arange(n))
    return axes


def _shape(j, n, length):
    s = [1] * n
    s[j] = length
    return s


def _coupling_apply(rvec, kappa, p, static):
    rvec = np.asarray(rvec, dtype=float)
    dist = np.linalg.norm(rvec)
    rhat = rvec / dist
    pr = p @ rhat
    near = 3 * pr[..., None] * rhat - p
    phase = np.exp(1j * kappa * dist)[..., None] / dist ** 3
    if static:
        return near * phase
    kr = (kappa * dist)[..., None]
    far = p - pr[..., None] * rhat
    return (near * (1 - 1j * kr) + far * kr ** 2) * phase


def _freq_inputs(sc, fields, zetas, axes, r):
    n = sc.order
    out = []
    for j in fields:
        p = sc.drives[j - 1]
        z = zetas[j - 1]
        w = axes[j - 1].reshape(_shape(j - 1, n, len(axes[j - 1])))
        amp = envelope_freq(p, z, w) * _phase(sc, p, z, r)
        out.append((amp[..., None] * p.eps, z * w))
    return out


def _detect_freq(sc, a, p_a, total_freq, steps):
    det = sc.detection
    ref = np.conj(envelope_freq(det, 1, total_freq)) * _phase(sc, det, -1, a.position)
    val = np.sum(ref * (p_a @ det.eps))
    return val * np.prod(steps)


def _chunks(axes, size):
    first = axes[0]
    for start in range(0, len(first), size):
        yield [first[start:start + size]] + list(axes[1:])


def _chunk_rows(sc):
    return {1: 100000, 2: 256, 3: 4}[sc.order]


def _freq_terms(sc: Scenario, partitions, step: float) -> dict:
    n = sc.order
    full_axes = _freq_axes(sc, step)
    steps = [step] * n
    terms = {term_label(B): 0j for B in partitions}
    for a, b in sc.ordered_pairs():
        rvec = _separation(sc, a, b)
        for zetas in _zeta_branches(sc):
            for B in partitions:
                fb = sorted(B)
                fa = [j for j in range(1, n + 1) if j not in B]
                acc = 0j
                for axes in _chunks(full_axes, _chunk_rows(sc)):
                    p_b = freq_response(space_of(b), _freq_inputs(sc, fb, zetas, axes, b.position))
                    w_b = sum(zetas[j - 1] * axes[j - 1].reshape(_shape(j - 1, n, len(axes[j - 1])))
                              for j in fb)
                    f_vac = _coupling_apply(rvec, w_b / sc.c, p_b, sc.kernel == "static")
                    inputs = _freq_inputs(sc, fa, zetas, axes, a.position) + [(f_vac, w_b)]
                    p_a = freq_response(space_of(a), inputs)
                    total = sum(zetas[j] * axes[j].reshape(_shape(j, n, len(axes[j])))
                                for j in range(n))
                    acc += _detect_freq(sc, a, p_a, total, steps)
                terms[term_label(B)] += acc
    for key, val in terms.items():
        if not np.isfinite(val):
            raise SingularResolventError(f"non-finite frequency integrand in term {key}")
    return terms


def _baseline_freq_terms(sc: Scenario, step: float) -> dict:
    if sc.order == 3:
        raise ValueError("third-order baseline needs intermediate population resolvents at a "
                         "real pole; use the time domain")
    n = sc.order
    full_axes = _freq_axes(sc, step)
    terms = {}
    for a in sorted(sc.molecules, key=lambda m: m.tag):
        acc = 0j
        for zetas in _zeta_branches(sc):
            for axes in _chunks(full_axes, _chunk_rows(sc)):
                p_a = freq_response(space_of(a),
                                    _freq_inputs(sc, range(1, n + 1), zetas, axes, a.position))
                total = sum(zetas[j] * axes[j].reshape(_shape(j, n, len(axes[j])))
                            for j in range(n))
                acc += _detect_freq(sc, a, p_a, total, [step] * n)
        terms[f"mol_{a.tag}"] = acc
    return terms


def _max_delay(sc: Scenario) -> float:
    """Longest retardation between any two molecules."""
    if not sc.vmi or len(sc.molecules) < 2:
        return 0.0
    if sc.coupling_separation is not None:
        return float(np.linalg.norm(sc.coupling_separation)) / sc.c
    pos = np.array([m.position for m in sc.molecules])
    return float(np.linalg.norm(pos.max(axis=0) - pos.min(axis=0))) / sc.c


def _initial_freq_step(sc: Scenario) -> float:
    gmin, _ = _coherence_scale(sc)
    # trapezoid sums alias the time-domain integrand with period 2 pi / step,
    # so the step must resolve pulse delays, widths and the retardation
    times = [p.center_time for p in sc.pulses]
    span = (max(times) - min(times) + _max_delay(sc)
            + 2 * sc.window * max(p.width for p in sc.pulses))
    return min(gmin / 2.0, min(1.0 / p.width for p in sc.drives) / 4.0, 2 * math.pi / span)


def _abs_floor(sc: Scenario) -> float:
    """Magnitude below which a term counts as zero during refinement.

    Round-off level for unit-scale dipoles; at that size successive
    refinements only reshuffle quadrature noise.
    """
    return 1e-15 * float(np.prod([abs(p.amplitude) for p in sc.pulses]))


def _s1_freq_pairs(sc: Scenario, step: float) -> dict:
    """First-order exchange vectorized over ordered pairs sharing molecule types."""
    (drive,) = sc.drives
    det = sc.detection
    w = _freq_axes(sc, step)[0]
    pairs = sc.ordered_pairs()
    total = 0j
    groups = {}
    for a, b in pairs:
        groups.setdefault((id(space_of(a)), id(space_of(b))), []).append((a, b))
    for zeta in _zeta_branches(sc):
        z = zeta[0]
        env = envelope_freq(drive, z, w) * np.conj(envelope_freq(det, 1, z * w))
        kappa = z * w / sc.c
        for members in groups.values():
            a0, b0 = members[0]
            alpha_a = _alpha_tensor(space_of(a0), z * w)   # (nw, 3, 3)
            alpha_b = _alpha_tensor(space_of(b0), z * w)
            u = np.einsum("i,wij->wj", det.eps, alpha_a)
            v = np.einsum("wij,j->wi", alpha_b, drive.eps)
            rvecs = np.array([_separation(sc, a, b) for a, b in members])
            phases = np.array([_phase(sc, drive, z, b.position) * _phase(sc, det, -1, a.position)
                               for a, b in members])
            dist = np.linalg.norm(rvecs, axis=1)
            rhat = rvecs / dist[:, None]
            ur = u @ rhat.T                      # (nw, P)
            vr = v @ rhat.T
            uv = np.sum(u * v, axis=1)[:, None]
            kr = kappa[:, None] * dist[None, :]
            near = 3 * ur * vr - uv
            if sc.kernel == "static":
                coup = near
            else:
                coup = near * (1 - 1j * kr) + (uv - ur * vr) * kr ** 2
            coup = coup * np.exp(1j * kr) / dist[None, :] ** 3
            total += step * np.sum(env[:, None] * coup * phases[None, :])
    return {"b1": total}


def _alpha_tensor(space, omegas):
    out = np.empty((len(omegas), 3, 3), dtype=complex)
    eye = np.eye(3)
    for j in range(3):
        amp = np.broadcast_to(eye[j], (len(omegas), 3))
        out[:, :, j] = freq_response(space, [(amp, omegas)])
    return out


# ---------------------------------------------------------------- public API

def _scan_points(sc: Scenario):
    if sc.scan is None:
        return [], [sc]
    axis, values = sc.scan.axis, sc.scan.values
    out = []
    for v in values:
        out.append(_apply_axis(sc, axis, v))
    return [(axis, np.asarray(values))], out


def _apply_axis(sc: Scenario, axis: str, value: float) -> Scenario:
    pulses = list(sc.pulses)
    mols = list(sc.molecules)
    if axis == "omega_s":
        i = next(k for k, p in enumerate(pulses) if p.role == "detection")
        pulses[i] = pulses[i].replace(center_frequency=value)
    elif axis.startswith("omega_") or axis.startswith("delay_"):
        j = int(axis.split("_")[1])
        drive_idx = [k for k, p in enumerate(pulses) if p.role == "drive"]
        i = drive_idx[j - 1]
        key = "center_frequency" if axis.startswith("omega_") else "center_time"
        pulses[i] = pulses[i].replace(**{key: value})
    elif axis == "separation":
        if len(mols) != 2:
            raise ValueError("separation scans need exactly two molecules")
        r = mols[1].position - mols[0].position
        rhat = r / np.linalg.norm(r)
        mols[1] = mols[1].moved(mols[0].position + value * rhat)
    else:
        raise ValueError(f"unknown scan axis {axis!r}")
    return replace(sc, pulses=tuple(pulses), molecules=tuple(mols), scan=None)


def _assemble(sc: Scenario, point_fn, prefactor, extra_meta=None) -> SignalGrid:
    axes, points = _scan_points(sc)
    vals, term_cols, steps = [], {}, []
    for pt in points:
        raw, step = point_fn(pt)
        vals.append(float(np.imag(prefactor * sum(raw.values()))))
        for key, v in raw.items():
            term_cols.setdefault(key, []).append(float(np.imag(prefactor * v)))
        steps.append(step)
    meta = {"digest": sc.digest(), "steps": steps, "prefactor": prefactor,
            "n_baseline_terms": len(sc.molecules),
            "n_pair_terms": len(sc.ordered_pairs()) if len(sc.molecules) > 1 else 0}
    meta.update(extra_meta or {})
    return SignalGrid(axes, np.asarray(vals), {k: np.asarray(v) for k, v in term_cols.items()},
                      meta)


def baseline_signal(scenario: Scenario, domain: str | None = None) -> SignalGrid:
    """Additive single-molecule signal at the scenario's order."""
    domain = domain or scenario.domain
    if scenario.order > 3:
        raise ValueError("orders beyond 3 are not supported")

    def point(sc):
        if domain == "time":
            return _converge(lambda h: _baseline_time_terms(sc, h), _initial_time_step(sc),
                             sc.tolerance, 4, _abs_floor(sc))
        return _converge(lambda d: _baseline_freq_terms(sc, d), _initial_freq_step(sc),
                         sc.tolerance, None, _abs_floor(sc))

    return _assemble(scenario, point,
                     baseline_prefactor(scenario.order) / (1 if domain == "time" else (2 * math.pi) ** scenario.order),
                     {"kind": "baseline", "domain": domain})


def vmi_signal(scenario: Scenario, partitions=None, domain: str | None = None,
               kind: str = "vmi") -> SignalGrid:
    """Vacuum-exchange correction summed over the given field partitions."""
    domain = domain or scenario.domain
    n = scenario.order
    parts = default_partitions(n) if partitions is None else [frozenset(p) for p in partitions]

    def point(sc):
        if domain == "time":
            return _converge(lambda h: _time_terms(sc, parts, h), _initial_time_step(sc),
                             sc.tolerance, 4, _abs_floor(sc))
        if n == 1:
            return _converge(lambda d: _s1_freq_pairs(sc, d), _initial_freq_step(sc),
                             sc.tolerance, None, _abs_floor(sc))
        return _converge(lambda d: _freq_terms(sc, parts, d), _initial_freq_step(sc),
                         sc.tolerance, None, _abs_floor(sc))

    return _assemble(scenario, point, vmi_prefactor(n, domain), {"kind": kind, "domain": domain})


def _require(sc: Scenario, order: int):
    if sc.order != order:
        raise ValueError(f"scenario order is {sc.order}, expected {order}")
    if len(sc.molecules) < 2:
        raise ValueError("need at least two molecules")


def s1_vmi(scenario: Scenario, domain: str = "frequency") -> SignalGrid:
    _require(scenario, 1)
    return vmi_signal(scenario, domain=domain, kind="s1")


def s2_vmi_time(scenario: Scenario) -> SignalGrid:
    _require(scenario, 2)
    return vmi_signal(scenario, domain="time", kind="s2")


def s2_vmi_freq(scenario: Scenario) -> SignalGrid:
    _require(scenario, 2)
    return vmi_signal(scenario, domain="frequency", kind="s2")


def s3_cascade(scenario: Scenario, domain: str | None = None) -> SignalGrid:
    _require(scenario, 3)
    return vmi_signal(scenario, default_partitions(3, cascade_only=True),
                      domain=domain, kind="s3_cascade")


def evaluate(scenario: Scenario) -> SignalGrid:
    """Dispatch on the scenario's order / vmi flag (used by the CLI)."""
    if not scenario.vmi:
        return baseline_signal(scenario)
    if scenario.order == 3:
        return s3_cascade(scenario)
    return vmi_signal(scenario, kind=f"s{scenario.order}")


def effective_field(scenario: Scenario, source: str, pulses, t, *, target: str | None = None,
                    zeta=None) -> np.ndarray:
    """Polarization of ``source`` driven by the given drive pulses, seen at ``target``.

    Returns the (len(t), 3) history ``P_source(t - r/c)``: the linear (one
    pulse) or second-order (two pulses) response convolved with the pulses.
    ``pulses`` is a 1-based drive index or a pair of them; ``zeta`` selects
    conjugation components (None sums all of them).  ``target`` defaults to
    the other molecule of a dimer.
    """
    mols = {m.tag: m for m in scenario.molecules}
    b = mols[source]
    if target is None:
        others = [tag for tag in mols if tag != source]
        if len(others) != 1:
            raise ValueError("target is required when there are more than two molecules")
        target = others[0]
    a = mols[target]
    fields = [pulses] if isinstance(pulses, int) else list(pulses)
    tau = np.linalg.norm(_separation(scenario, a, b)) / scenario.c
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if zeta is None:
        branches = list(itertools.product((-1, 1), repeat=len(fields)))
    elif isinstance(zeta, int):
        branches = [(zeta,) * len(fields)]
    else:
        branches = [tuple(zeta)]
    h = _initial_time_step(scenario) / 4
    t0 = min(scenario.drives[j - 1].center_time - scenario.window * scenario.drives[j - 1].width
             for j in fields)
    t_end = max(t.max() - tau, t0) + 4 * h
    grid = t0 + h * np.arange(int(math.ceil((t_end - t0) / h)) + 1)
    total = np.zeros((len(grid), 3), dtype=complex)
    for zs in branches:
        inputs = []
        for j, z in zip(fields, zs):
            p = scenario.drives[j - 1]
            inputs.append(_field_history(scenario, p, z, b.position, grid))
        total += time_response(space_of(b), inputs, h)
    out = np.zeros((len(t), 3), dtype=complex)
    inside = (t - tau) >= grid[0]
    for nu in range(3):
        re = CubicSpline(grid, total[:, nu].real)(t[inside] - tau)
        im = CubicSpline(grid, total[:, nu].imag)(t[inside] - tau)
        out[inside, nu] = re + 1j * im
    return out


def scaling_probe(make_scenario: Callable[[int], Scenario], N_list: Sequence[int]) -> dict:
    """Term counts and fitted N-exponents of baseline and exchange signals."""
    rows = {"N": [], "baseline_terms": [], "pair_terms": [], "baseline": [], "vmi": []}
    for N in N_list:
        sc = make_scenario(N)
        base = baseline_signal(replace(sc, vmi=False))
        corr = evaluate(replace(sc, vmi=True))
        rows["N"].append(N)
        rows["baseline_terms"].append(base.metadata["n_baseline_terms"])
        rows["pair_terms"].append(corr.metadata["n_pair_terms"])
        rows["baseline"].append(float(np.sum(np.abs(base.values))))
        rows["vmi"].append(float(np.sum(np.abs(corr.values))))
    logn = np.log(np.asarray(rows["N"], dtype=float))
    for key in ("baseline", "vmi"):
        mags = np.asarray(rows[key])
        if len(logn) >= 2 and np.all(mags > 0):
            rows[f"{key}_exponent"] = float(np.polyfit(logn, np.log(mags), 1)[0])
        else:
            rows[f"{key}_exponent"] = float("nan")
    return rows
