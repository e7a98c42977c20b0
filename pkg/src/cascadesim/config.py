"""Run configuration: strict YAML schema, presets and grid output.

A config has five top-level keys::

    version: 1
    molecules: [...]      # tag, energies, dephasing, dipoles, position, labels
    pulses: [...]         # name, role, center_time, center_frequency, width, ...
    geometry: {...}       # c, lattice | chain, coupling_separation, unit_phases
    run: {...}            # order, domain, vmi, kernel, rwa, tolerance, ...

Every violation is collected before :class:`ConfigError` is raised, so a
user sees the whole list at once.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .core import ModelError, model_from_transitions
from .fields import Pulse
from .geometry import cubic_lattice
from .signals import Scenario, ScanSpec, SignalGrid

SCHEMA_VERSION = 1
SCALING_N = (2, 3, 4, 5)
OUTPUT_DIR_ENV = "CASCADESIM_OUTPUT_DIR"

_TOP = {"version", "molecules", "pulses", "geometry", "run"}
_MOLECULE = {"tag", "energies", "dephasing", "dipoles", "position", "labels"}
_PULSE = {"name", "role", "center_time", "center_frequency", "width", "amplitude_re",
          "amplitude_im", "k_direction", "polarization"}
_GEOMETRY = {"c", "lattice", "chain", "coupling_separation", "unit_phases"}
_LATTICE = {"spacing", "M"}
_CHAIN = {"spacing", "N", "axis"}
_RUN = {"order", "domain", "vmi", "kernel", "rwa", "tolerance", "window", "scan",
        "output", "breakdown"}
_SCAN = {"axis", "start", "stop", "steps"}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class MoleculeSpec:
    tag: str
    energies: tuple
    dephasing: tuple          # ((n, m, gamma), ...)
    dipoles: tuple            # ((n, m, (x, y, z)), ...)
    position: tuple | None = None
    labels: tuple | None = None


@dataclass(frozen=True)
class PulseSpec:
    name: str
    role: str
    center_time: float
    center_frequency: float
    width: float
    amplitude: complex = 1.0 + 0j
    direction: tuple = (1.0, 0.0, 0.0)
    polarization: tuple = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class GeometrySpec:
    c: float = 1.0
    lattice: tuple | None = None      # (spacing, M)
    chain: tuple | None = None        # (spacing, N, axis)
    coupling_separation: tuple | None = None
    unit_phases: bool = False


@dataclass(frozen=True)
class RunSpec:
    order: int = 1
    domain: str = "frequency"
    vmi: bool = True
    kernel: str = "full"
    rwa: bool = False
    tolerance: float = 1e-6
    window: float = 8.0
    scan: tuple | None = None         # (axis, start, stop, steps)
    output: str | None = None
    breakdown: bool = False


@dataclass(frozen=True)
class RunConfig:
    version: int
    molecules: tuple
    pulses: tuple
    geometry: GeometrySpec = field(default_factory=GeometrySpec)
    run: RunSpec = field(default_factory=RunSpec)

    def scenario(self) -> Scenario:
        return build_scenario(self)


# ---------------------------------------------------------------- parsing

class _StrictLoader(yaml.SafeLoader):
    pass


def _no_duplicates(loader, node, deep=False):
    keys = [loader.construct_object(k, deep=deep) for k, _ in node.value]
    dupes = sorted({str(k) for k in keys if keys.count(k) > 1})
    if dupes:
        raise yaml.constructor.ConstructorError(None, None, f"duplicate keys {dupes}",
                                                node.start_mark)
    return loader.construct_mapping(node, deep=deep)


_StrictLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _no_duplicates)


class _Collector:
    def __init__(self):
        self.errors = []

    def add(self, msg):
        self.errors.append(msg)

    def keys(self, obj, allowed, where, required=()):
        if not isinstance(obj, dict):
            self.add(f"{where}: expected a mapping")
            return False
        for k in obj:
            if k not in allowed:
                self.add(f"{where}: unknown key {k!r}")
        for k in required:
            if k not in obj:
                self.add(f"{where}: missing required key {k!r}")
        return True

    def number(self, value, where, positive=False, nonneg=False, integer=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.add(f"{where}: expected a number, got {value!r}")
            return None
        if integer and (not float(value).is_integer()):
            self.add(f"{where}: expected an integer, got {value!r}")
            return None
        value = int(value) if integer else float(value)
        if not math.isfinite(value):
            self.add(f"{where}: must be finite")
            return None
        if positive and not value > 0:
            self.add(f"{where}: must be positive, got {value!r}")
            return None
        if nonneg and value < 0:
            self.add(f"{where}: must be >= 0, got {value!r}")
            return None
        return value

    def vector(self, value, where, length=3):
        if not isinstance(value, (list, tuple)) or len(value) != length:
            self.add(f"{where}: expected a list of {length} numbers")
            return None
        out = [self.number(v, f"{where}[{i}]") for i, v in enumerate(value)]
        return None if any(v is None for v in out) else tuple(out)

    def flag(self, value, where):
        if not isinstance(value, bool):
            self.add(f"{where}: expected true or false")
            return None
        return value

    def choice(self, value, options, where):
        if value not in options:
            self.add(f"{where}: expected one of {sorted(options)}, got {value!r}")
            return None
        return value


def _parse_molecule(col, raw, idx):
    where = f"molecules[{idx}]"
    if not col.keys(raw, _MOLECULE, where, ("tag", "energies", "dephasing", "dipoles")):
        return None
    tag = raw.get("tag")
    if not isinstance(tag, str) or not tag:
        col.add(f"{where}: tag must be a non-empty string")
        tag = f"#{idx}"
    where = f"molecule {tag!r}"
    energies = raw.get("energies")
    if not isinstance(energies, list) or len(energies) < 2:
        col.add(f"{where}: energies must list at least two levels")
        return None
    energies = tuple(col.number(e, f"{where} energies[{i}]") for i, e in enumerate(energies))
    d = len(energies)

    def pair(n, m, what):
        ok = True
        for v in (n, m):
            if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < d:
                col.add(f"{where} {what} pair ({n}, {m}): level index out of range")
                ok = False
                break
        if ok and n == m:
            col.add(f"{where} {what} pair ({n}, {m}): levels must differ")
            ok = False
        return ok

    deph = []
    for i, entry in enumerate(raw.get("dephasing") or []):
        if not isinstance(entry, list) or len(entry) != 3:
            col.add(f"{where} dephasing[{i}]: expected [n, m, gamma]")
            continue
        n, m, g = entry
        if not pair(n, m, "dephasing"):
            continue
        g = col.number(g, f"{where} dephasing pair ({n}, {m})")
        if g is not None and g < 0:
            col.add(f"{where} dephasing pair ({n}, {m}): gamma must be >= 0, got {g!r}")
            continue
        deph.append((n, m, g))
    dips = []
    for i, entry in enumerate(raw.get("dipoles") or []):
        if not isinstance(entry, list) or len(entry) != 3:
            col.add(f"{where} dipoles[{i}]: expected [n, m, [x, y, z]]")
            continue
        n, m, vec = entry
        if not pair(n, m, "dipole"):
            continue
        vec = col.vector(vec, f"{where} dipole pair ({n}, {m})")
        if vec is not None:
            dips.append((n, m, vec))
    position = raw.get("position")
    if position is not None:
        position = col.vector(position, f"{where} position")
    labels = raw.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != d or \
                not all(isinstance(s, str) for s in labels):
            col.add(f"{where}: labels must be {d} strings")
            labels = None
        else:
            labels = tuple(labels)
    if any(e is None for e in energies):
        return None
    return MoleculeSpec(tag, energies, tuple(deph), tuple(dips), position, labels)


def _parse_pulse(col, raw, idx):
    where = f"pulses[{idx}]"
    req = ("role", "center_time", "center_frequency", "width")
    if not col.keys(raw, _PULSE, where, req):
        return None
    name = raw.get("name", f"E{idx + 1}")
    if not isinstance(name, str):
        col.add(f"{where}: name must be a string")
        name = f"E{idx + 1}"
    role = col.choice(raw.get("role"), {"drive", "detection"}, f"{where} role")
    t0 = col.number(raw.get("center_time"), f"{where} center_time")
    w0 = col.number(raw.get("center_frequency"), f"{where} center_frequency", positive=True)
    width = col.number(raw.get("width"), f"{where} width", positive=True)
    re_ = col.number(raw.get("amplitude_re", 1.0), f"{where} amplitude_re")
    im_ = col.number(raw.get("amplitude_im", 0.0), f"{where} amplitude_im")
    amp = None if re_ is None or im_ is None else complex(re_, im_)
    direction = col.vector(raw.get("k_direction", [1.0, 0.0, 0.0]), f"{where} k_direction")
    pol = col.vector(raw.get("polarization", [0.0, 0.0, 1.0]), f"{where} polarization")
    if None in (role, t0, w0, width, amp, direction, pol):
        return None
    return PulseSpec(name, role, t0, w0, width, amp, direction, pol)


def _parse_geometry(col, raw):
    if raw is None:
        return GeometrySpec()
    if not col.keys(raw, _GEOMETRY, "geometry"):
        return GeometrySpec()
    c = col.number(raw.get("c", 1.0), "geometry c", positive=True)
    lattice = chain = sep = None
    if "lattice" in raw and "chain" in raw:
        col.add("geometry: give either lattice or chain, not both")
    if "lattice" in raw:
        lat = raw["lattice"]
        if col.keys(lat, _LATTICE, "geometry lattice", ("spacing", "M")):
            s = col.number(lat.get("spacing"), "geometry lattice spacing", positive=True)
            m = col.number(lat.get("M"), "geometry lattice M", positive=True, integer=True)
            if s is not None and m is not None:
                lattice = (s, m)
    if "chain" in raw:
        ch = raw["chain"]
        if col.keys(ch, _CHAIN, "geometry chain", ("spacing", "N")):
            s = col.number(ch.get("spacing"), "geometry chain spacing", positive=True)
            n = col.number(ch.get("N"), "geometry chain N", positive=True, integer=True)
            axis = col.vector(ch.get("axis", [0.0, 0.0, 1.0]), "geometry chain axis")
            if axis is not None and not np.linalg.norm(axis) > 0:
                col.add("geometry chain axis: must be nonzero")
                axis = None
            if None not in (s, n, axis):
                chain = (s, n, axis)
    if raw.get("coupling_separation") is not None:
        sep = col.vector(raw["coupling_separation"], "geometry coupling_separation")
        if sep is not None and not np.linalg.norm(sep) > 0:
            col.add("geometry coupling_separation: must be nonzero")
    unit = col.flag(raw.get("unit_phases", False), "geometry unit_phases")
    return GeometrySpec(c if c is not None else 1.0, lattice, chain, sep, bool(unit))


def _parse_run(col, raw):
    if raw is None:
        return RunSpec()
    if not col.keys(raw, _RUN, "run"):
        return RunSpec()
    d = RunSpec()
    order = col.number(raw.get("order", d.order), "run order", integer=True)
    if order is not None and order not in (1, 2, 3):
        col.add(f"run order: must be 1, 2 or 3, got {order}")
    domain = raw.get("domain", d.domain)
    domain = {"freq": "frequency"}.get(domain, domain)
    domain = col.choice(domain, {"time", "frequency"}, "run domain")
    vmi = col.flag(raw.get("vmi", d.vmi), "run vmi")
    kernel = col.choice(raw.get("kernel", d.kernel), {"full", "static"}, "run kernel")
    rwa = col.flag(raw.get("rwa", d.rwa), "run rwa")
    tol = col.number(raw.get("tolerance", d.tolerance), "run tolerance", positive=True)
    window = col.number(raw.get("window", d.window), "run window", positive=True)
    scan = None
    if raw.get("scan") is not None:
        sc = raw["scan"]
        if col.keys(sc, _SCAN, "run scan", ("axis", "start", "stop", "steps")):
            axis = sc.get("axis")
            start = col.number(sc.get("start"), "run scan start")
            stop = col.number(sc.get("stop"), "run scan stop")
            steps = col.number(sc.get("steps"), "run scan steps", positive=True, integer=True)
            if None not in (start, stop, steps):
                try:
                    ScanSpec(axis, tuple(np.linspace(start, stop, steps)))
                    scan = (axis, start, stop, steps)
                except (ValueError, TypeError, AttributeError) as exc:
                    col.add(f"run scan: {exc}")
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        col.add("run output: must be a path string")
        output = None
    breakdown = col.flag(raw.get("breakdown", d.breakdown), "run breakdown")
    return RunSpec(order if order in (1, 2, 3) else d.order, domain or d.domain,
                   d.vmi if vmi is None else vmi, kernel or d.kernel,
                   d.rwa if rwa is None else rwa, tol or d.tolerance, window or d.window,
                   scan, output, d.breakdown if breakdown is None else breakdown)


def config_from_dict(data, require_detection: bool = True) -> RunConfig:
    """Validate a decoded mapping; raises :class:`ConfigError` with every problem."""
    col = _Collector()
    if not col.keys(data, _TOP, "config", ("version", "molecules", "pulses")):
        raise ConfigError(col.errors)
    version = data.get("version")
    if version != SCHEMA_VERSION:
        col.add(f"config: unsupported version {version!r} (expected {SCHEMA_VERSION})")
    mols_raw = data.get("molecules")
    mols = []
    if not isinstance(mols_raw, list) or not mols_raw:
        col.add("molecules: expected a non-empty list")
    else:
        mols = [_parse_molecule(col, m, i) for i, m in enumerate(mols_raw)]
    pulses_raw = data.get("pulses")
    pulses = []
    if not isinstance(pulses_raw, list) or not pulses_raw:
        col.add("pulses: expected a non-empty list")
    else:
        pulses = [_parse_pulse(col, p, i) for i, p in enumerate(pulses_raw)]
    geometry = _parse_geometry(col, data.get("geometry"))
    run = _parse_run(col, data.get("run"))
    cfg = RunConfig(SCHEMA_VERSION, tuple(m for m in mols if m is not None),
                    tuple(p for p in pulses if p is not None), geometry, run)
    _cross_check(col, cfg, require_detection)
    if col.errors:
        raise ConfigError(col.errors)
    return cfg


def _cross_check(col, cfg: RunConfig, require_detection: bool):
    tags = [m.tag for m in cfg.molecules]
    for t in sorted({t for t in tags if tags.count(t) > 1}):
        col.add(f"molecules: duplicate tag {t!r}")
    replicate = cfg.geometry.lattice is not None or cfg.geometry.chain is not None
    if replicate and len(cfg.molecules) != 1:
        col.add("geometry: lattice/chain replicate exactly one template molecule")
    for m in cfg.molecules:
        if not replicate and m.position is None:
            col.add(f"molecule {m.tag!r}: position is required without a lattice or chain")
        try:
            _build_model(m, m.position or (0.0, 0.0, 0.0), m.tag)
        except ModelError as exc:
            col.add(f"molecule {m.tag!r}: {exc}")
    n_det = sum(p.role == "detection" for p in cfg.pulses)
    if require_detection and n_det != 1:
        col.add(f"pulses: exactly one detection pulse is required, found {n_det}")
    n_drive = sum(p.role == "drive" for p in cfg.pulses)
    if n_drive != cfg.run.order:
        col.add(f"pulses: run order {cfg.run.order} needs {cfg.run.order} drive pulses, "
                f"found {n_drive}")
    names = [p.name for p in cfg.pulses]
    for nm in sorted({n for n in names if names.count(n) > 1}):
        col.add(f"pulses: duplicate name {nm!r}")
    for p in cfg.pulses:
        try:
            _build_pulse(p, cfg.geometry.c)
        except ValueError as exc:
            col.add(f"pulse {p.name!r}: {exc}")
    n_mol = len(cfg.molecules)
    if cfg.geometry.lattice is not None:
        n_mol = cfg.geometry.lattice[1] ** 3
    elif cfg.geometry.chain is not None:
        n_mol = cfg.geometry.chain[1]
    if cfg.run.vmi and n_mol < 2:
        col.add("run vmi: vacuum-exchange signals need at least two molecules")
    if cfg.run.scan is not None:
        axis = cfg.run.scan[0]
        if axis.startswith(("omega_", "delay_")) and axis != "omega_s":
            try:
                j = int(axis.split("_")[1])
            except ValueError:
                j = 0
            if not 1 <= j <= n_drive:
                col.add(f"run scan: axis {axis!r} names no drive pulse")
        if axis == "separation" and n_mol != 2:
            col.add("run scan: separation scans need exactly two molecules")
    if cfg.run.order == 3 and not cfg.run.vmi and cfg.run.domain == "frequency":
        col.add("run: third-order baseline is only available in the time domain")


def parse_config(text: str, require_detection: bool = True) -> RunConfig:
    """Parse YAML text into a validated :class:`RunConfig`."""
    try:
        data = yaml.load(text, Loader=_StrictLoader)
    except yaml.YAMLError as exc:
        raise ConfigError([f"yaml: {exc}"]) from None
    return config_from_dict(data, require_detection)


def load_config(path, require_detection: bool = True) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror or exc}"]) from None
    return parse_config(text, require_detection)


# ---------------------------------------------------------------- building

def _build_model(spec: MoleculeSpec, position, tag):
    gam = {(min(n, m), max(n, m)): g for n, m, g in spec.dephasing}
    dip = {(min(n, m), max(n, m)): v for n, m, v in spec.dipoles}
    transitions = [(n, m, gam.get((n, m), 0.0), dip.get((n, m), (0.0, 0.0, 0.0)))
                   for n, m in sorted(set(gam) | set(dip))]
    return model_from_transitions(spec.energies, transitions, position=position, tag=tag,
                                  labels=spec.labels or ())


def _build_pulse(spec: PulseSpec, c: float) -> Pulse:
    return Pulse(spec.center_time, spec.center_frequency, spec.width, spec.amplitude,
                 spec.direction, spec.polarization, spec.role, c=c, name=spec.name)


def molecule_positions(cfg: RunConfig):
    g = cfg.geometry
    if g.lattice is not None:
        spacing, m = g.lattice
        return cubic_lattice(m, spacing)
    if g.chain is not None:
        spacing, n, axis = g.chain
        axis = np.asarray(axis) / np.linalg.norm(axis)
        return spacing * np.arange(n)[:, None] * axis[None, :]
    return np.array([m.position for m in cfg.molecules], dtype=float)


def build_scenario(cfg: RunConfig) -> Scenario:
    g, r = cfg.geometry, cfg.run
    positions = molecule_positions(cfg)
    if g.lattice is not None or g.chain is not None:
        tmpl = cfg.molecules[0]
        width = len(str(len(positions) - 1))
        first = _build_model(tmpl, positions[0], f"{tmpl.tag}{0:0{width}d}")
        mols = [first] + [first.moved(pos, f"{tmpl.tag}{i:0{width}d}")
                          for i, pos in enumerate(positions) if i > 0]
    else:
        mols = [_build_model(m, m.position, m.tag) for m in cfg.molecules]
    pulses = [_build_pulse(p, g.c) for p in cfg.pulses]
    scan = None
    if r.scan is not None:
        axis, start, stop, steps = r.scan
        scan = ScanSpec(axis, tuple(np.linspace(start, stop, steps)))
    return Scenario(tuple(mols), tuple(pulses), c=g.c, order=r.order, domain=r.domain,
                    vmi=r.vmi, kernel=r.kernel, rwa=r.rwa, tolerance=r.tolerance,
                    window=r.window, unit_phases=g.unit_phases,
                    coupling_separation=g.coupling_separation, scan=scan)


def with_chain_length(cfg: RunConfig, n: int) -> RunConfig:
    """Same configuration with ``n`` molecules on its chain (for scaling families)."""
    if cfg.geometry.chain is None:
        raise ValueError("configuration has no chain geometry")
    spacing, _, axis = cfg.geometry.chain
    return replace(cfg, geometry=replace(cfg.geometry, chain=(spacing, n, axis)))


# ---------------------------------------------------------------- serialization

def format_float(x: float) -> str:
    if math.isnan(x):
        return ".nan"
    if math.isinf(x):
        return ".inf" if x > 0 else "-.inf"
    s = format(x, ".17g")
    mant, e, exp = s.partition("e")
    if "." not in mant:
        mant += ".0"
    return mant + e + exp


class _Dumper(yaml.SafeDumper):
    pass


_Dumper.add_representer(float, lambda d, x: d.represent_scalar("tag:yaml.org,2002:float", format_float(x)))


def config_to_dict(cfg: RunConfig) -> dict:
    mols = []
    for m in cfg.molecules:
        d = {"tag": m.tag, "energies": [float(e) for e in m.energies],
             "dephasing": [[n, k, float(g)] for n, k, g in m.dephasing],
             "dipoles": [[n, k, [float(v) for v in vec]] for n, k, vec in m.dipoles]}
        if m.position is not None:
            d["position"] = [float(v) for v in m.position]
        if m.labels is not None:
            d["labels"] = list(m.labels)
        mols.append(d)
    pulses = [{"name": p.name, "role": p.role, "center_time": float(p.center_time),
               "center_frequency": float(p.center_frequency), "width": float(p.width),
               "amplitude_re": float(complex(p.amplitude).real),
               "amplitude_im": float(complex(p.amplitude).imag),
               "k_direction": [float(v) for v in p.direction],
               "polarization": [float(v) for v in p.polarization]} for p in cfg.pulses]
    g = cfg.geometry
    geo = {"c": float(g.c), "unit_phases": g.unit_phases}
    if g.lattice is not None:
        geo["lattice"] = {"spacing": float(g.lattice[0]), "M": int(g.lattice[1])}
    if g.chain is not None:
        geo["chain"] = {"spacing": float(g.chain[0]), "N": int(g.chain[1]),
                        "axis": [float(v) for v in g.chain[2]]}
    if g.coupling_separation is not None:
        geo["coupling_separation"] = [float(v) for v in g.coupling_separation]
    r = cfg.run
    run = {"order": r.order, "domain": r.domain, "vmi": r.vmi, "kernel": r.kernel,
           "rwa": r.rwa, "tolerance": float(r.tolerance), "window": float(r.window),
           "breakdown": r.breakdown}
    if r.scan is not None:
        axis, start, stop, steps = r.scan
        run["scan"] = {"axis": axis, "start": float(start), "stop": float(stop),
                       "steps": int(steps)}
    if r.output is not None:
        run["output"] = r.output
    return {"version": cfg.version, "molecules": mols, "pulses": pulses,
            "geometry": geo, "run": run}


def serialize_config(cfg: RunConfig) -> str:
    return yaml.dump(config_to_dict(cfg), Dumper=_Dumper, sort_keys=False,
                     default_flow_style=None, width=100)


# ---------------------------------------------------------------- output

def software_version() -> str:
    from . import __version__
    return __version__


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def grid_to_csv(grid: SignalGrid, breakdown: bool = False) -> str:
    names = [name for name, _ in grid.axes]
    terms = sorted(grid.terms) if breakdown else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names + ["signal"] + [f"term_{t}" for t in terms])
    values = np.atleast_1d(grid.values)
    axes = [np.asarray(v) for _, v in grid.axes]
    shape = values.shape
    for flat, idx in enumerate(np.ndindex(*shape)):
        row = [format_float(float(axes[k][i])) for k, i in enumerate(idx)] if axes else []
        row.append(format_float(float(values[idx])))
        row += [format_float(float(np.ravel(grid.terms[t])[flat])) for t in terms]
        w.writerow(row)
    return buf.getvalue()


def emit_grid(grid: SignalGrid, path, breakdown: bool = False) -> Path:
    """Write the CSV plus a ``<name>.json`` metadata sidecar; returns the CSV path."""
    path = Path(path)
    meta = {
        "software_version": software_version(),
        "digest": grid.metadata.get("digest"),
        "kind": grid.metadata.get("kind"),
        "domain": grid.metadata.get("domain"),
        "prefactor": grid.metadata.get("prefactor"),
        "steps": [float(s) for s in grid.metadata.get("steps", [])],
        "axes": [name for name, _ in grid.axes],
        "terms": sorted(grid.terms) if breakdown else [],
        "n_baseline_terms": grid.metadata.get("n_baseline_terms"),
        "n_pair_terms": grid.metadata.get("n_pair_terms"),
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(grid_to_csv(grid, breakdown), encoding="utf-8")
        sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write signal output to {path}: {exc.strerror or exc}") from exc
    return path


def resolve_output(path: str | None) -> Path | None:
    """Apply the output-directory environment override to a requested path."""
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        return Path(override) / Path(path or "signal.csv").name
    return None if path is None else Path(path)
