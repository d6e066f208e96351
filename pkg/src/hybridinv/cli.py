"""Command-line entry point.

Subcommands: cruise (emit the platoon benchmark), reduce (input lift and
algebraic projection), synth (invariant-set synthesis), verify
(certification), mpc (closed-loop simulation), plot (SVG figures).

Exit codes: 0 success / verification PASS, 1 verification FAIL,
2 usage error, 3 solver failure or infeasibility.
The solver backend can be selected with the HYBRIDINV_SOLVER environment
variable (default CLARABEL).
"""

from __future__ import annotations

import argparse
import json
import sys as _sys

import numpy as np

from . import cruise as cruise_mod
from . import model, plot as plot_mod, synth as synth_mod, verify as verify_mod
from .mpc import MpcScenario, simulate
from .reduce import ReductionTrace, lift_inputs, to_algebraic

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _write_json(path, obj) -> None:
    if path == "-":
        json.dump(obj, _sys.stdout, indent=1)
        _sys.stdout.write("\n")
        return
    with open(path, "w") as f:
        json.dump(obj, f, indent=1)
        f.write("\n")


def cmd_cruise(args) -> int:
    params = cruise_mod.CruiseParams(trailers=args.trailers)
    system = cruise_mod.build_automaton(params, horizon_steps=args.horizon_steps)
    model.save_problem(args.output, system)
    return EXIT_OK


def cmd_reduce(args) -> int:
    system = model.load_problem(args.problem)
    lifted, trace = lift_inputs(system, merge=not args.no_merge)
    if args.algebraic:
        has = to_algebraic(lifted)
        obj = {
            "nodes": [model._node_to_json(has.nodes[k]) for k in sorted(has.nodes)],
            "transitions": [
                {"from": t.source, "to": t.target, "label": t.label,
                 "A": t.A.tolist(), "E": t.E.tolist(), "c": t.c.tolist()}
                for t in has.transitions
            ],
        }
        _write_json(args.output, obj)
    else:
        model.save_problem(args.output, lifted)
    if args.trace:
        trace.save(args.trace)
    return EXIT_OK


def _reduced(system):
    lifted, trace = lift_inputs(system, merge=True)
    return lifted, to_algebraic(lifted), trace


def cmd_synth(args) -> int:
    system = model.load_problem(args.problem)
    lifted, has, trace = _reduced(system)
    sets, report = synth_mod.synthesize(
        has, eps_psd=args.eps_psd, eps_int=args.eps_int,
        residual_samples=args.residual_samples)
    if args.report:
        _write_json(args.report, report.to_json())
    if sets is None:
        print(f"synthesis did not reach optimality: {report.status}", file=_sys.stderr)
        return EXIT_SOLVER
    model.save_sets(args.output, sets,
                    node_dims={k: n.state_dim for k, n in has.nodes.items()})
    print(f"status={report.status} objective={report.objective:.6f} "
          f"solve_s={report.solve_seconds:.2f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    system = model.load_problem(args.problem)
    sets = model.load_sets(args.sets)
    if args.mode == "has":
        _, has, _ = _reduced(system)
        report = verify_mod.verify_has(has, sets, samples=args.samples, tol=args.tol)
    else:
        if set(sets) == set(system.nodes):
            original_sets = sets
        else:
            _, _, trace = _reduced(system)
            original_sets = trace.original_sets(sets)
        report = verify_mod.verify_hcs(system, original_sets,
                                       samples=args.samples, tol=args.tol)
    payload = report.to_json()
    if args.report:
        _write_json(args.report, payload)
    else:
        _write_json("-", payload)
    return EXIT_OK if report.verdict == "PASS" else EXIT_FAIL


def cmd_mpc(args) -> int:
    system = model.load_problem(args.problem)
    sets = trace = None
    if args.mode == "safe":
        if not args.sets:
            raise CliError("safe mode requires --sets")
        sets = model.load_sets(args.sets)
        _, _, trace = _reduced(system)
    params = cruise_mod.CruiseParams()
    scenario = MpcScenario(
        system=system, initial_node=args.start_node,
        initial_state=np.array([float(v) for v in args.initial_state.split(",")]),
        horizon=args.horizon, mode=args.mode, duration=args.duration,
        period=params.period, events=tuple((args.event_time, args.event_label)
                                           for _ in range(1) if args.event_label),
        sets=sets, trace=trace, announced=args.announced)
    traj = simulate(scenario)
    traj.to_csv(args.output)
    bad = traj.first_infeasible_step()
    if bad is not None:
        print(f"controller infeasible at step {bad} "
              f"(t = {bad * scenario.period:.1f} s)", file=_sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_plot(args) -> int:
    if args.kind in ("speed", "acceleration"):
        if not args.trajectory:
            raise CliError(f"--kind {args.kind} requires a trajectory CSV")
        data = plot_mod.read_trajectory_csv(args.trajectory)
        svg = (plot_mod.plot_speed(data) if args.kind == "speed"
               else plot_mod.plot_acceleration(data))
    else:
        if not args.sets or not args.node:
            raise CliError("--kind set-projection requires --sets and --node")
        sets = model.load_sets(args.sets)
        coords = tuple(int(v) for v in args.coords.split(","))
        if len(coords) != 2:
            raise CliError("--coords must be two comma-separated indices")
        svg = plot_mod.plot_set_projection(sets, args.node, coords)
    with open(args.output, "w") as f:
        f.write(svg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridinv", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", help="JSON file whose keys mirror any long flag")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cruise", help="emit the truck-platoon benchmark problem")
    c.add_argument("--trailers", type=int, default=1)
    c.add_argument("--horizon-steps", type=int, default=2)
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_cruise)

    r = sub.add_parser("reduce", help="lift inputs and optionally project to algebraic form")
    r.add_argument("problem")
    r.add_argument("-o", "--output", required=True)
    r.add_argument("--trace", help="write the reduction trace JSON here")
    r.add_argument("--no-merge", action="store_true")
    r.add_argument("--algebraic", action="store_true",
                   help="emit the algebraic system instead of the lifted control system")
    r.set_defaults(func=cmd_reduce)

    s = sub.add_parser("synth", help="compute maximum-volume invariant ellipsoids")
    s.add_argument("problem")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--eps-psd", type=float, default=1e-6)
    s.add_argument("--eps-int", type=float, default=1e-6)
    s.add_argument("--residual-samples", type=int, default=0)
    s.add_argument("--report")
    s.set_defaults(func=cmd_synth)

    v = sub.add_parser("verify", help="certify candidate invariant sets")
    v.add_argument("problem")
    v.add_argument("sets")
    v.add_argument("--samples", type=int, default=1000)
    v.add_argument("--tol", type=float, default=1e-6)
    v.add_argument("--mode", choices=["has", "hcs"], default="hcs")
    v.add_argument("--report")
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("mpc", help="closed-loop receding-horizon simulation")
    m.add_argument("problem")
    m.add_argument("--sets")
    m.add_argument("--mode", choices=["safe", "unsafe"], required=True)
    m.add_argument("--horizon", type=int, required=True)
    m.add_argument("--duration", type=float, default=60.0)
    m.add_argument("--start-node", default="q_d0")
    m.add_argument("--initial-state", default="0,10,10")
    m.add_argument("--event-time", type=float, default=30.0)
    m.add_argument("--event-label", default="a")
    m.add_argument("--announced", action="store_true",
                   help="let the controller see scheduled events inside its horizon")
    m.add_argument("-o", "--output", required=True)
    m.set_defaults(func=cmd_mpc)

    g = sub.add_parser("plot", help="emit a deterministic SVG figure")
    g.add_argument("--kind", choices=["speed", "acceleration", "set-projection"], required=True)
    g.add_argument("--trajectory", help="trajectory CSV (speed/acceleration kinds)")
    g.add_argument("--sets", help="sets JSON (set-projection kind)")
    g.add_argument("--node", help="node id for set-projection")
    g.add_argument("--coords", default="0,1", help="two coordinate indices for the projection")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_plot)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Prepend defaults from a --config JSON file as long flags."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    try:
        path = argv[i + 1]
    except IndexError as exc:
        raise CliError("--config needs a file path") from exc
    with open(path) as f:
        cfg = json.load(f)
    extra = []
    for key, value in cfg.items():
        flag = "--" + key.replace("_", "-")
        if value is True:
            extra.append(flag)
        elif value is not False:
            extra += [flag, str(value)]
    return argv[:i] + argv[i + 2:] + extra


def main(argv: list[str] | None = None) -> int:
    argv = list(_sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return exc.code
    except (model.ParseError, model.ValidationError, plot_mod.PlotError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_USAGE
    except synth_mod.SynthesisError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
