"""Command-line entry point: ``relsim check | spring-mass | fluids-lite | dump``.

Exit status is 0 on success, 1 for user or diagnostic errors (bad files,
bad config, kernels that fail to check) and 2 for faults raised while
kernels run (NaN guard, out-of-range neighbor access).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import Kernel
from .errors import ConfigError, ExecutionError, RelsimError
from .io import save_field
from .lang import parse_kernels
from .sim.config import FluidsConfig, SpringMassConfig, describe, load_config
from .sim.fluids import Fluids
from .sim.schema import build_runtime, read_schema
from .sim.spring_mass import SpringMass

EXIT_OK, EXIT_USER, EXIT_FAULT = 0, 1, 2
SIMS = {"spring-mass": SpringMassConfig, "fluids-lite": FluidsConfig}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USER, f"{self.prog}: error: {message}\n")


def _where(path: str, exc: RelsimError) -> str:
    if exc.span is not None:
        return f"{path}:{exc.span.line}:{exc.span.col}: {exc.kind}: {exc.message}"
    return f"{path}: {exc.kind}: {exc.message}"


def _phase_table(k: Kernel) -> dict[str, str]:
    """Data-field phases under their short names where unambiguous, then globals."""
    pm = k.phases
    data = {q: str(p) for q, p in pm.fields.items() if q not in pm.key_fields}
    short = [q.rsplit(".", 1)[-1] for q in data]
    out = {}
    for q, s in sorted(zip(data, short), key=lambda t: t[1]):
        out[s if short.count(s) == 1 else q] = data[q]
    out.update(sorted((g, str(p)) for g, p in pm.globals.items()))
    return out


def cmd_check(args) -> int:
    try:
        text = Path(args.kernel).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read kernel file {args.kernel}: {exc.strerror or exc}") from None
    rt = build_runtime(read_schema(args.schema))
    report = {"kernels": [], "errors": []}
    try:
        asts = parse_kernels(text)
    except RelsimError as exc:
        asts = []
        report["errors"].append(exc)
    for ast in asts:
        try:
            k = Kernel(rt, ast)
        except RelsimError as exc:
            report["errors"].extend(getattr(exc, "conflicts", (exc,)))
            continue
        phases = _phase_table(k)
        report["kernels"].append({"name": k.name, "signature": k.signature(), "phases": phases,
                                  "vectorizable": k.vectorizable})
    if args.json:
        out = dict(report, errors=[e.as_dict() for e in report["errors"]])
        print(json.dumps(out, indent=2))
    else:
        for k in report["kernels"]:
            print(k["signature"])
            print("  phases:")
            for name, ph in k["phases"].items():
                print(f"    {name}: {ph}")
        for exc in report["errors"]:
            print(_where(args.kernel, exc), file=sys.stderr)
    return EXIT_USER if report["errors"] else EXIT_OK


def _config(args, sim: str):
    cls = SIMS[sim]
    cfg = load_config(args.config, cls) if args.config else cls().validate()
    return cfg.with_overrides(steps=args.steps, workers=args.workers, out=args.out,
                              deterministic=True if args.deterministic else None,
                              strict_nan=True if args.strict_nan else None)


def _run_sim(sim: str, cfg):
    if sim == "spring-mass":
        s = SpringMass(cfg)
        s.run()
        return s, s.runtime
    s = Fluids(cfg)
    s.run()
    return s, s.runtime


def cmd_spring_mass(args) -> int:
    cfg = _config(args, "spring-mass")
    if args.show_config:
        print(describe(SpringMassConfig))
        return EXIT_OK
    sim, _ = _run_sim("spring-mass", cfg)
    for r in sim.energy_log:
        print(f"step {r.step}: E = {r.kinetic!r}  potential = {r.potential!r}  total = {r.total!r}")
    if cfg.out:
        for p in sim.write_outputs(cfg.out):
            print(f"wrote {p}")
    return EXIT_OK


def cmd_fluids_lite(args) -> int:
    cfg = _config(args, "fluids-lite")
    if args.show_config:
        print(describe(FluidsConfig))
        return EXIT_OK
    sim, _ = _run_sim("fluids-lite", cfg)
    speed = (sim.velocity ** 2).sum(axis=1) ** 0.5
    print(f"{sim.steps_done} steps on {cfg.nx}x{cfg.ny}: max speed {float(speed.max())!r}, "
          f"{sim.particles.particles.count} particles")
    if cfg.out:
        for p in sim.write_outputs(cfg.out):
            print(f"wrote {p}")
    return EXIT_OK


def cmd_dump(args) -> int:
    cfg = _config(args, args.sim)
    _, rt = _run_sim(args.sim, cfg)
    rel = rt.relation(args.relation)
    if args.field not in rel.fields:
        raise ConfigError(f"{rel.name} has no field {args.field!r}; "
                          f"fields: {', '.join(sorted(rel.fields))}")
    try:
        save_field(rel[args.field], args.path, args.format)
    except OSError as exc:
        raise ConfigError(f"cannot write {args.path}: {exc.strerror or exc}") from None
    print(f"wrote {rel.name}.{args.field} ({rel.count} rows) to {args.path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    run_opts = _Parser(add_help=False)
    run_opts.add_argument("--config", metavar="PATH", help="flat key = value config file")
    run_opts.add_argument("--workers", type=int, metavar="N", help="worker threads per launch")
    run_opts.add_argument("--deterministic", action="store_true",
                          help="bitwise-reproducible reductions across worker counts")
    run_opts.add_argument("--steps", type=int, metavar="N", help="override the step count")
    run_opts.add_argument("--out", metavar="DIR", help="write output files here")
    run_opts.add_argument("--strict-nan", action="store_true", help="fail on NaN writes")

    p = _Parser(prog="relsim", description="Relational simulation kernels: check and run.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="typecheck kernels and print their phases")
    c.add_argument("kernel", help="kernel source file")
    c.add_argument("schema", help="JSON schema path, or spring-mass / fluids-lite")
    c.add_argument("--json", action="store_true", help="machine-readable report")
    c.set_defaults(func=cmd_check)

    for name, func in (("spring-mass", cmd_spring_mass), ("fluids-lite", cmd_fluids_lite)):
        s = sub.add_parser(name, parents=[run_opts], help=f"run the {name} simulation")
        s.add_argument("--show-config", action="store_true", help="list config keys and defaults")
        s.set_defaults(func=func)

    d = sub.add_parser("dump", parents=[run_opts], help="run a simulation, then save one field")
    d.add_argument("relation")
    d.add_argument("field")
    d.add_argument("path")
    d.add_argument("--format", choices=("raw", "csv"), help="default: csv for .csv paths, else raw")
    d.add_argument("--sim", choices=tuple(SIMS), default="spring-mass",
                   help="simulation to run first (default spring-mass)")
    d.set_defaults(func=cmd_dump)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExecutionError as exc:
        print(f"relsim: runtime fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except RelsimError as exc:
        print(f"relsim: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
