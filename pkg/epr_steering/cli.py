"""
Command-line front end.

    epr-steering classify     --p 0.6 --theta 0.2618
    epr-steering radius       --p 1 --theta 0.7854 --k 3 --direction ab
    epr-steering scan-region  --p-steps 50 --theta-steps 50 --out region.csv
    epr-steering scan-linear  --p 0.6 --theta 0.2618 --n 2 3 4 6 10
    epr-steering simulate     --p 0.75 --theta 0.2618 --counts 1e5 --k 2
    epr-steering boundaries   --theta-steps 100

Exit codes: 0 success, 2 usage or input error, 3 solver failure.
"""

import argparse
import json
import logging
import math
import shlex
import sys
import time

from epr_steering import __version__
from epr_steering.api.run_log import RunLogger, get_run_metrics
from epr_steering.api.steering_errors import (
    EXIT_OK,
    ParamError,
    SteeringError,
    build_error_response,
    exit_code_for,
)
from epr_steering.hooks import command_routes, get_attr, report_routes
from epr_steering.steering.config.steering_settings import LOG_LEVELS, get_settings
from epr_steering.utils.output import FORMATS, jsonable, render_json, render_table, write_text

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML settings file (default: $EPR_STEERING_CONFIG)")
    common.add_argument("--log-level", choices=LOG_LEVELS, help="logging level for stderr")
    common.add_argument("--json-errors", action="store_true", help="write errors as JSON on stderr")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--threads", type=int, help="worker processes (0 = available parallelism)")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--tol", type=float, help="radius tolerance")
    common.add_argument("--degrees", action="store_true", help="angles are given in degrees")
    return common


def _state_args(parser):
    parser.add_argument("--p", type=float, help="mixing weight p of the state family")
    parser.add_argument("--theta", type=float, help="Schmidt angle theta")
    parser.add_argument("--state-file", help="JSON state file instead of --p/--theta")


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="epr-steering",
        description="Decide and quantify EPR steering of two-qubit states",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    classify = sub.add_parser("classify", parents=[common], help="closed-form region labels")
    classify.add_argument("--p", type=float, required=True)
    classify.add_argument("--theta", type=float, required=True)
    classify.add_argument("--format", choices=("text", "json"), default="text")

    radius = sub.add_parser("radius", parents=[common], help="steering radius by settings search")
    _state_args(radius)
    radius.add_argument("--k", type=int, default=3, help="number of measurement settings")
    radius.add_argument("--direction", choices=("ab", "ba", "both"), default="both")
    radius.add_argument("--restarts", type=int, help="search restarts")
    radius.add_argument("--no-canonical", action="store_true", help="leave the canonical axes out of the search")
    radius.add_argument("--canonical-only", action="store_true", help="radius at the canonical axes, no search")
    radius.add_argument("--dump-assemblage", help="write the assemblage at the best axes as JSON")

    scan = sub.add_parser("scan-region", parents=[common], help="region map over a (p, theta) grid")
    scan.add_argument("--p-min", type=float, default=0.0)
    scan.add_argument("--p-max", type=float, default=1.0)
    scan.add_argument("--p-steps", type=int, default=50)
    scan.add_argument("--theta-min", type=float, default=0.0)
    scan.add_argument("--theta-max", type=float)
    scan.add_argument("--theta-steps", type=int, default=50)
    scan.add_argument("--scenario", choices=("2", "3", "infinite"), default="3")
    scan.add_argument("--with-solver", action="store_true", help="add canonical-axes radii per point")
    scan.add_argument("--k", type=int, default=3)
    scan.add_argument("--format", choices=FORMATS, default="csv")

    linear = sub.add_parser("scan-linear", parents=[common], help="linear steering inequality S_n vs C_n")
    _state_args(linear)
    linear.add_argument("--n", type=int, nargs="+", default=[2, 3, 4, 6, 10])
    linear.add_argument("--direction", choices=("ab", "ba"), default="ba")
    linear.add_argument("--format", choices=FORMATS, default="csv")

    simulate = sub.add_parser("simulate", parents=[common], help="Poisson counts and bootstrap error bars")
    _state_args(simulate)
    simulate.add_argument("--counts", type=float, help="mean total coincidence counts")
    simulate.add_argument("--counts-file", help="bootstrap a recorded count CSV instead of simulating")
    simulate.add_argument("--counts-out", help="write the simulated count record as CSV")
    simulate.add_argument("--k", type=int, default=3)
    simulate.add_argument("--direction", choices=("ab", "ba"), default="ab")
    simulate.add_argument("--resamples", type=int)

    bounds = sub.add_parser("boundaries", parents=[common], help="region-map boundary curves")
    bounds.add_argument("--theta-min", type=float, default=0.0)
    bounds.add_argument("--theta-max", type=float)
    bounds.add_argument("--theta-steps", type=int, default=100)
    bounds.add_argument("--format", choices=FORMATS, default="csv")

    runs = sub.add_parser("runs", parents=[common], help="summarize a run log file")
    runs.add_argument("--path", help="run log to read (default: run_log_path from the settings)")

    return parser


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _angle(args, value):
    if value is None:
        return None
    return math.radians(value) if args.degrees else value


def load_state_from_args(args):
    from epr_steering.steering.states import FamilyParams, load_state, make_family_state

    if args.state_file:
        if args.p is not None or args.theta is not None:
            raise ParamError("give either --state-file or --p/--theta, not both")
        return load_state(args.state_file)
    if args.p is None or args.theta is None:
        raise ParamError("a state needs --p and --theta, or --state-file")
    return make_family_state(FamilyParams(args.p, _angle(args, args.theta)))


def _search_config(args, settings):
    from epr_steering.steering.settings_search import SearchConfig

    return SearchConfig.from_settings(
        settings,
        restarts=getattr(args, "restarts", None),
        include_canonical=not getattr(args, "no_canonical", False),
    )


def _solver_options(settings):
    from epr_steering.steering.lhsm import SolverOptions

    return SolverOptions(feas_tol=settings.feas_tol, max_iter=settings.max_iter)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_classify(args, settings, invocation):
    from epr_steering.steering.criteria import (
        classify_infinite_settings,
        classify_three_settings,
        classify_two_settings,
        steerable_a_to_b_infinite,
        unsteerable_b_to_a_infinite,
    )

    p, theta = args.p, _angle(args, args.theta)
    verdict = {
        "p": p,
        "theta": theta,
        "two_settings": classify_two_settings(p, theta),
        "three_settings": classify_three_settings(p, theta),
        "infinite_settings": classify_infinite_settings(p, theta),
        "bowles_unsteerable_b_to_a": unsteerable_b_to_a_infinite(p, theta),
        "steerable_a_to_b_infinite": steerable_a_to_b_infinite(p),
    }
    if args.format == "json":
        write_text(render_json(verdict), args.out)
        return

    lines = [
        f"p = {p:.9g}, theta = {theta:.9g}",
        f"2-setting: {verdict['two_settings']}",
        f"3-setting: {verdict['three_settings']}",
        f"infinite-setting: {verdict['infinite_settings']}",
        f"Bowles curve (B cannot steer A): {str(verdict['bowles_unsteerable_b_to_a']).lower()}",
    ]
    write_text("\n".join(lines) + "\n", args.out)


def cmd_radius(args, settings, invocation):
    from epr_steering.steering.criteria import canonical_settings
    from epr_steering.steering.settings_search import (
        measuring_side,
        settings_radius,
        steering_radius,
        steering_verdict,
    )

    rho = load_state_from_args(args)
    cfg = _search_config(args, settings)
    run_log = RunLogger(settings)
    started = time.monotonic()

    if args.canonical_only:
        axes = canonical_settings(args.k)
        directions = ("ab", "ba") if args.direction == "both" else (args.direction,)
        document = {"k": args.k, "settings": [s.to_list() for s in axes]}
        for direction in directions:
            result = settings_radius(rho, axes, direction, settings.tol, cfg.solver)
            document[f"r_{direction}"] = result.r
            document[direction] = result.to_dict(with_ensemble=True)
            run_log.log_radius(direction, args.k, result.r, document["settings"],
                               result.evaluations, time.monotonic() - started)
        best = {d: axes for d in directions}
    elif args.direction == "both":
        verdict = steering_verdict(rho, args.k, cfg)
        document = verdict.to_dict()
        best = {"ab": verdict.ab.best_settings, "ba": verdict.ba.best_settings}
        for report in (verdict.ab, verdict.ba):
            run_log.log_radius(report.direction, args.k, report.R, [s.to_list() for s in report.best_settings],
                               report.radius.evaluations, report.elapsed_s)
    else:
        report = steering_radius(rho, args.k, args.direction, cfg)
        document = report.to_dict()
        best = {args.direction: report.best_settings}
        run_log.log_radius(args.direction, args.k, report.R, [s.to_list() for s in report.best_settings],
                           report.radius.evaluations, report.elapsed_s)

    if args.dump_assemblage:
        from epr_steering.steering.assemblage import build_assemblage

        dump = {d: build_assemblage(rho, axes, measuring_side(d)).to_dict() for d, axes in best.items()}
        write_text(render_json(dump), args.dump_assemblage)

    write_text(render_json(document), args.out)


def _write_report(route, filters, args, invocation, action):
    started = time.monotonic()
    columns, data = get_attr(report_routes[route])(filters)
    path = write_text(render_table(columns, data, args.format, invocation), args.out)
    return RunLogger(args.settings).log_scan(action, len(data), str(path) if path else None,
                                             time.monotonic() - started)


def cmd_scan_region(args, settings, invocation):
    from epr_steering.steering.report.region_map.region_map import ScanSpec
    from epr_steering.steering.states import THETA_MAX

    spec = ScanSpec(
        p_min=args.p_min,
        p_max=args.p_max,
        p_steps=args.p_steps,
        theta_min=_angle(args, args.theta_min),
        theta_max=THETA_MAX if args.theta_max is None else _angle(args, args.theta_max),
        theta_steps=args.theta_steps,
        scenario=args.scenario,
        with_solver=args.with_solver,
        k=args.k,
        tol=settings.tol,
        threads=settings.threads,
        solver=_solver_options(settings),
    )
    _write_report("scan-region", spec, args, invocation, "scan-region")


def cmd_scan_linear(args, settings, invocation):
    filters = {"state": load_state_from_args(args), "n": args.n, "direction": args.direction}
    _write_report("scan-linear", filters, args, invocation, "scan-linear")


def cmd_boundaries(args, settings, invocation):
    from epr_steering.steering.states import THETA_MAX

    filters = {
        "theta_min": _angle(args, args.theta_min),
        "theta_max": THETA_MAX if args.theta_max is None else _angle(args, args.theta_max),
        "theta_steps": args.theta_steps,
    }
    _write_report("boundaries", filters, args, invocation, "boundaries")


def cmd_simulate(args, settings, invocation):
    from epr_steering.steering.criteria import canonical_settings
    from epr_steering.steering.settings_search import settings_radius
    from epr_steering.steering.stats_sim import (
        BOOTSTRAP,
        SIMULATION,
        CountRecord,
        bootstrap_radius,
        derive_seed,
        simulate_counts,
    )

    options = _solver_options(settings)
    document = {}
    if args.counts_file:
        counts = CountRecord.from_csv(args.counts_file)
        k, direction = counts.k, ("ab" if counts.measuring_side == "A" else "ba")
    else:
        rho = load_state_from_args(args)
        k, direction = args.k, args.direction
        axes = canonical_settings(k)
        mean_counts = settings.mean_counts if args.counts is None else args.counts
        counts = simulate_counts(rho, axes, direction, mean_counts, derive_seed(settings.seed, SIMULATION))
        document["mean_counts"] = mean_counts
        document["noiseless_r"] = settings_radius(rho, axes, direction, settings.tol, options).r
        if args.counts_out:
            counts.to_csv(args.counts_out)

    bootstrap_seed = derive_seed(settings.seed, BOOTSTRAP)
    summary = bootstrap_radius(counts, k, direction, settings.resamples, bootstrap_seed,
                               settings.tol, options, settings.threads)
    document.update({"k": k, "direction": direction, "total_counts": counts.total, **summary.to_dict()})
    RunLogger(settings).log_simulation(counts.total, summary.resamples, summary.seed,
                                       summary.mean, summary.std)
    write_text(render_json(document), args.out)


def cmd_runs(args, settings, invocation):
    path = args.path or settings.run_log_path
    if not path:
        raise ParamError("no run log: pass --path or set run_log_path", field="run_log_path")
    write_text(render_json(get_run_metrics(path)), args.out)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _report_error(exc, args, command):
    if getattr(args, "json_errors", False):
        sys.stderr.write(json.dumps(jsonable(build_error_response(exc))) + "\n")
    else:
        sys.stderr.write(f"epr-steering {command}: error: {exc}\n")


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    invocation = "epr-steering " + " ".join(shlex.quote(a) for a in argv)

    try:
        settings = get_settings(args.config).merged(
            threads=args.threads,
            seed=args.seed,
            tol=args.tol,
            resamples=getattr(args, "resamples", None),
            log_level=args.log_level,
        )
    except SteeringError as e:
        _report_error(e, args, args.command)
        return exit_code_for(e)

    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    args.settings = settings

    handler = get_attr(command_routes[args.command])
    try:
        handler(args, settings, invocation)
    except SteeringError as e:
        RunLogger(settings).log_error(e.code, e.message, args.command, e.context)
        _report_error(e, args, args.command)
        return exit_code_for(e)
    except OSError as e:
        _report_error(e, args, args.command)
        return exit_code_for(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
