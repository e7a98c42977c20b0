"""Command-line interface: ``cascadesim {respond,signal,diagrams,preset,validate}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import (ConfigError, config_from_dict, config_to_dict, emit_grid, format_float,
                     grid_to_csv, load_config, resolve_output, serialize_config)
from .core import ModelError, SingularResolventError
from .diagrams import (count_equal_order_cascading, count_total, enumerate_2vmi,
                       generate_diagrams)
from .presets import PRESETS, preset
from .response import (alpha_bar_time, alpha_freq, beta_bar_time, beta_freq, gamma_bar_time,
                       gamma_freq)
from .signals import QuadratureError, ScanSpec, evaluate, space_of

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("cascadesim")


def _load(args, require_detection=True):
    if args.config and args.preset:
        raise ConfigError(["give either --config or --preset, not both"])
    if args.preset:
        try:
            return preset(args.preset)
        except KeyError as exc:
            raise ConfigError([str(exc.args[0])]) from None
    if not args.config:
        raise ConfigError(["a --config file or --preset name is required"])
    return load_config(args.config, require_detection)


def _revalidate(cfg, **run_changes):
    data = config_to_dict(replace(cfg, run=replace(cfg.run, **run_changes)))
    return config_from_dict(data)


# ---------------------------------------------------------------- subcommands

_RESPONSES = {
    ("alpha", "freq"): (alpha_freq, 1),
    ("alpha", "time"): (alpha_bar_time, 1),
    ("beta", "freq"): (beta_freq, 2),
    ("beta", "time"): (beta_bar_time, 2),
    ("gamma", "freq"): (gamma_freq, 3),
    ("gamma", "time"): (gamma_bar_time, 3),
}


def cmd_respond(args):
    cfg = _load(args, require_detection=False)
    mols = {m.tag: m for m in cfg.scenario().molecules}
    tag = args.molecule or sorted(mols)[0]
    if tag not in mols:
        raise ConfigError([f"no molecule tagged {tag!r}; have {sorted(mols)}"])
    func, nargs = _RESPONSES[args.kind, args.domain]
    if len(args.args) != nargs:
        raise ConfigError([f"{args.kind} in the {args.domain} domain takes {nargs} arguments"])
    indices = args.indices or "z" * (nargs + 1)
    if len(indices) != nargs + 1 or any(c not in "xyz" for c in indices):
        raise ConfigError([f"--indices needs {nargs + 1} letters from x, y, z"])
    value = func(space_of(mols[tag]), *args.args, *indices)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["kind", "indices"] + [f"arg{i + 1}" for i in range(nargs)] + ["re", "im"])
    w.writerow([args.kind, indices] + [format_float(a) for a in args.args]
               + [format_float(float(np.real(value))), format_float(float(np.imag(value)))])
    return EXIT_OK


def cmd_signal(args):
    cfg = _load(args)
    changes = {}
    for key in ("order", "kernel", "tolerance"):
        val = getattr(args, key)
        if val is not None:
            changes[key] = val
    if args.domain is not None:
        changes["domain"] = "frequency" if args.domain == "freq" else "time"
    if args.vmi is not None:
        changes["vmi"] = args.vmi
    if args.rwa:
        changes["rwa"] = True
    if args.breakdown:
        changes["breakdown"] = True
    if args.scan is not None:
        try:
            spec = ScanSpec.parse(args.scan)
        except (ValueError, TypeError) as exc:
            raise ConfigError([f"--scan {args.scan!r}: {exc}"]) from None
        changes["scan"] = (spec.axis, spec.values[0], spec.values[-1], len(spec.values))
    if args.output is not None:
        changes["output"] = args.output
    if changes:
        cfg = _revalidate(cfg, **changes)
    grid = evaluate(cfg.scenario())
    target = resolve_output(cfg.run.output)
    if target is None:
        sys.stdout.write(grid_to_csv(grid, cfg.run.breakdown))
    else:
        emit_grid(grid, target, cfg.run.breakdown)
        log.info("wrote %s", target)
    return EXIT_OK


def cmd_diagrams(args):
    n = args.order
    if n > 3:
        if args.classify not in (None, "equal_order_cascading") or args.permutations:
            raise ConfigError([f"order {n} supports counting only"])
        out = {"order": n, "count_total": count_total(n)}
        if n % 2:
            out["count_equal_order_cascading"] = count_equal_order_cascading(n)
        out["enumerated"] = sum(1 for _ in generate_diagrams(n))
        print(json.dumps(out, indent=2))
        return EXIT_OK
    terms = enumerate_2vmi(n, include_permutations=args.permutations, kind=args.classify)
    if args.count:
        print(len(terms))
    else:
        print(json.dumps([t.to_dict() for t in terms], indent=2))
    return EXIT_OK


def cmd_preset(args):
    try:
        cfg = preset(args.name)
    except KeyError as exc:
        raise ConfigError([str(exc.args[0])]) from None
    text = serialize_config(cfg)
    if args.output:
        target = resolve_output(args.output)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args):
    cfg = load_config(args.config, require_detection=not args.no_detection)
    sc = cfg.scenario()
    print(f"ok: {len(sc.molecules)} molecules, {len(sc.pulses)} pulses, order {sc.order}, "
          f"digest {sc.digest()[:12]}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cascadesim",
                                 description="Vacuum-mediated corrections to optical signals")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def source(p):
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--preset", choices=sorted(PRESETS), help="named reference scenario")

    p = sub.add_parser("respond", help="evaluate a molecular response function")
    source(p)
    p.add_argument("--molecule", help="molecule tag (default: first by tag)")
    p.add_argument("--kind", choices=["alpha", "beta", "gamma"], default="alpha")
    p.add_argument("--domain", choices=["freq", "time"], default="freq")
    p.add_argument("--args", type=float, nargs="+", required=True,
                   help="frequencies or time intervals")
    p.add_argument("--indices", help="Cartesian indices, e.g. zz or xzz")
    p.set_defaults(func=cmd_respond)

    p = sub.add_parser("signal", help="compute a heterodyne signal grid")
    source(p)
    p.add_argument("--order", type=int, choices=[1, 2, 3])
    p.add_argument("--domain", choices=["time", "freq"])
    p.add_argument("--vmi", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--scan", help="<axis>=<start>:<stop>:<steps>")
    p.add_argument("--breakdown", action="store_true", help="add per-term columns")
    p.add_argument("--output", help="CSV path (a .json sidecar is written next to it)")
    p.add_argument("--kernel", choices=["full", "static"])
    p.add_argument("--tolerance", type=float)
    p.add_argument("--rwa", action="store_true",
                   help="keep only near-resonant conjugation branches (diagnostic)")
    p.set_defaults(func=cmd_signal)

    p = sub.add_parser("diagrams", help="enumerate or count exchange diagrams")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--permutations", action="store_true")
    p.add_argument("--classify", choices=["local_field", "cascading", "equal_order_cascading"])
    p.add_argument("--count", action="store_true", help="print only the number of terms")
    p.set_defaults(func=cmd_diagrams)

    p = sub.add_parser("preset", help="print a named reference configuration")
    p.add_argument("name")
    p.add_argument("--output")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("validate", help="check a configuration file")
    p.add_argument("config")
    p.add_argument("--no-detection", action="store_true",
                   help="allow configs without a detection pulse")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, SingularResolventError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
