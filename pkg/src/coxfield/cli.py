"""Command-line front end.

Each subcommand reads JSON inputs, writes its primary output files plus a
run manifest into --out, and returns 0 on success, 1 when the math
rejects the input or a verification fails, and 2 on malformed input.
Primary outputs are deterministic given the same inputs and seed; the
manifest additionally records wall-clock time and the tool version.
"""

import argparse
import csv
import json
import os
import sys
import time
from itertools import combinations_with_replacement

import numpy as np

from .dist import (
    SchemaError,
    MomentTriple,
    cdf,
    coxian_to_mixture,
    distribution_from_dict,
    distribution_to_dict,
    fit_hyperexp2,
    has_decreasing_completion_rates,
    hyperexp_to_coxian,
    moments,
    normalized_moments,
    CoxianDistribution,
)
from .mfode import (
    FixedPointError,
    IntegrationError,
    fixed_point,
    fixed_point_structure_residual,
    integrate,
    lyapunov_rates,
    lyapunov_values,
    model_from_dict,
    model_to_dict,
    attraction_report,
    monotonicity_report,
    _rk4,
    step_bound,
)
from .order import (
    _as_h,
    full_state,
    level_phase_mass,
    leq,
    random_state,
    state_from_dict,
    state_to_dict,
    upper_envelope,
    zero_state,
)
from .sim import SimConfig, compare_to_fixed_point, replicate

VERSION = "0.1.0"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def _write_manifest(args, inputs, outputs, started, error=None):
    manifest = {
        "command": args.command,
        "argv": list(args.raw_argv),
        "tool_version": VERSION,
        "seed": args.seed,
        "tol": args.tol,
        "out_dir": os.path.abspath(args.out),
        "inputs": _jsonable(inputs),
        "outputs": sorted(outputs),
        "wall_clock_s": round(time.monotonic() - started, 6),
    }
    if error is not None:
        manifest["error"] = error
    _write_json(os.path.join(args.out, "manifest.json"), manifest)


def _cmd_convert(args):
    data = _load_json(args.input)
    dist = distribution_from_dict(data)
    cox = dist if isinstance(dist, CoxianDistribution) else hyperexp_to_coxian(dist)
    check = has_decreasing_completion_rates(cox)
    mix = coxian_to_mixture(cox)
    out = {
        "input": distribution_to_dict(dist),
        "coxian": distribution_to_dict(cox),
        "completion_rates": cox.completion_rates,
        "class": {
            "is_member": check.is_member,
            "margin": check.margin,
            "boundary": check.boundary,
        },
        "mixture": {
            "weights": list(mix.weights),
            "rates": list(mix.rates),
            "is_hyperexponential": mix.is_hyperexponential,
        },
        "moments": {
            "m1": moments(dist, 1),
            "m2": moments(dist, 2),
            "m3": moments(dist, 3),
        },
    }
    if not isinstance(dist, CoxianDistribution):
        grid = np.linspace(0.1, 5.0, 50) * moments(dist, 1)
        gap = float(np.max(np.abs(cdf(dist, grid) - cdf(cox, grid))))
        out["cdf_max_gap"] = gap
        if gap > (args.tol or 1e-10):
            path = os.path.join(args.out, "convert.json")
            _write_json(path, out)
            print(f"conversion CDF gap {gap:.3e} exceeds tolerance", file=sys.stderr)
            return 1, {"input": data}, [path]
    path = os.path.join(args.out, "convert.json")
    _write_json(path, out)
    return 0, {"input": data}, [path]


def _cmd_fit(args):
    target = MomentTriple(args.m1, args.n2, args.n3)
    hyper = fit_hyperexp2(target, region_tol=args.tol or 0.0)
    achieved = normalized_moments(hyper)
    out = {
        "target": {"m1": target.m1, "n2": target.n2, "n3": target.n3},
        "hyperexp": distribution_to_dict(hyper),
        "coxian": distribution_to_dict(hyperexp_to_coxian(hyper)),
        "achieved": {"m1": achieved.m1, "n2": achieved.n2, "n3": achieved.n3},
    }
    path = os.path.join(args.out, "fit.json")
    _write_json(path, out)
    return 0, {"target": out["target"]}, [path]


def _cmd_fixed_point(args):
    model = model_from_dict(_load_json(args.model))
    result = fixed_point(model, residual_tol=args.tol or 1e-12)
    structure = fixed_point_structure_residual(result.pi, model.service)
    out = {
        "pi": state_to_dict(result.pi),
        "residual": result.residual,
        "newton_steps": result.newton_steps,
        "structure": {
            "phase_residual": structure.phase_residual,
            "generator_residual": structure.generator_residual,
        },
    }
    path = os.path.join(args.out, "fixed_point.json")
    _write_json(path, out)
    return 0, {"model": model_to_dict(model)}, [path]


def _initial_state(init, model):
    if init == "empty":
        if model.B is None:
            raise SchemaError("model needs a finite B to integrate")
        return zero_state(model.B, model.n)
    if init == "full":
        if model.B is None:
            raise SchemaError("model needs a finite B to integrate")
        return full_state(model.B, model.n)
    state = state_from_dict(_load_json(init))
    if (model.B is not None and state.B != model.B) or state.n != model.n:
        raise SchemaError(
            f"initial state is {state.B}x{state.n}, model needs "
            f"{model.B}x{model.n}"
        )
    return state


def _cmd_integrate(args):
    model = model_from_dict(_load_json(args.model))
    h0 = _initial_state(args.init, model)
    if model.B is None:
        model = model.with_buffer(h0.B)
    traj = integrate(model, h0, args.t_final, dt=args.dt, samples=args.samples)
    path = os.path.join(args.out, "trajectory.csv")
    B, n = h0.B, h0.n
    header = ["t"] + [f"h_{l}_{i}" for l in range(1, B + 1) for i in range(1, n + 1)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, state in zip(traj.times, traj.states):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in state.ravel()])
    return 0, {"model": model_to_dict(model), "init": args.init}, [path]


def _cmd_simulate(args):
    data = _load_json(args.config)
    if not isinstance(data, dict) or "model" not in data:
        raise SchemaError("simulation config needs a 'model' object")
    for key in ("N", "horizon"):
        if key not in data:
            raise SchemaError(f"simulation config is missing {key!r}")
    model = model_from_dict(data["model"])
    config = SimConfig(
        model=model,
        N=int(data["N"]),
        horizon=float(data["horizon"]),
        seed=int(data.get("seed", args.seed)),
        warmup=data.get("warmup"),
        replications=int(data.get("replications", 1)),
    )
    estimate = replicate(config)
    pi = fixed_point(model)
    report = compare_to_fixed_point(estimate, pi.pi)
    out = {
        "h_bar": estimate.h_bar,
        "half_width": estimate.half_width,
        "n_servers": estimate.n_servers,
        "replications": estimate.replications,
        "drop_fraction": estimate.drop_fraction,
        "pi": state_to_dict(pi.pi),
        "pi_residual": pi.residual,
        "distance_to_pi": report.distance,
        "excess_entries": report.excess_entries,
        "total_entries": report.total_entries,
    }
    path = os.path.join(args.out, "simulate.json")
    _write_json(path, out)
    inputs = {"config": data, "resolved_warmup": config.resolved_warmup}
    return 0, inputs, [path]


def _leq_enumerate(lo, hi, tol):
    """Reference order decision straight from the definition."""
    a, b = _as_h(lo), _as_h(hi)
    if float((b - a).min()) < -tol:
        return False
    B, n = a.shape
    for combo in combinations_with_replacement(range(1, B + 1), n):
        seq = tuple(reversed(combo))
        if seq[0] > seq[-1]:
            if level_phase_mass(hi, seq) - level_phase_mass(lo, seq) < -tol:
                return False
    return True


def _ordered_pair(rng, B, n, pick):
    """Ordered (lo, hi) pairs from a few qualitatively different recipes."""
    if pick == 0:
        lo = random_state(B, n, rng)
        return lo, upper_envelope(lo, random_state(B, n, rng))
    if pick == 1:
        hi = random_state(B, n, rng)
        return _as_h(hi) * rng.uniform(0.0, 1.0), hi
    return zero_state(B, n), random_state(B, n, rng)


def _suite_monotone(args, rng):
    model = model_from_dict(_load_json(args.model))
    B = model.B or 10
    model = model.with_buffer(B)
    cases = []
    for k in range(args.count):
        lo, hi = _ordered_pair(rng, B, model.n, k % 3)
        report = monotonicity_report(
            model, lo, hi, args.T, samples=20, tol=args.tol or 1e-8
        )
        cases.append(
            {
                "ok": report.ok,
                "min_margin": report.min_margin,
                "violation_time": report.violation_time,
            }
        )
    out = {
        "suite": "monotone",
        "model": model_to_dict(model),
        "cases": cases,
        "pass": all(c["ok"] for c in cases),
    }
    return out, {"model": model_to_dict(model)}


def _suite_attract(args, rng):
    model = model_from_dict(_load_json(args.model))
    B = model.B or 10
    model = model.with_buffer(B)
    starts = np.stack(
        [_as_h(random_state(B, model.n, rng)) for _ in range(args.count)]
    )
    report = attraction_report(model, starts, args.T, tol=args.tol or 1e-6)
    out = {
        "suite": "attract",
        "model": model_to_dict(model),
        "distances": report.distances,
        "max_distance": report.max_distance,
        "pairwise_max": report.pairwise_max,
        "pass": report.ok,
    }
    return out, {"model": model_to_dict(model)}


def _suite_lyapunov(args, rng):
    model = model_from_dict(_load_json(args.model))
    B = model.B or 10
    model = model.with_buffer(B)
    pi = fixed_point(model).pi
    delta = min(5e-4, step_bound(model) / 4)
    tol = args.tol or 1e-9
    cases = []
    for _ in range(args.count):
        h = _as_h(upper_envelope(random_state(B, model.n, rng), pi))
        traj = integrate(model, h, args.T, samples=10)
        worst_rate = -np.inf
        worst_fd = 0.0
        for state in traj.states:
            # central difference around the one-step image of the sample
            mid = _rk4(model, state.copy(), delta, 1)
            fwd = _rk4(model, mid.copy(), delta, 1)
            dz1, dz2 = lyapunov_rates(model, mid)
            fd = (
                sum(lyapunov_values(fwd, model.service))
                - sum(lyapunov_values(state, model.service))
            ) / (2 * delta)
            worst_rate = max(worst_rate, dz1 + dz2)
            worst_fd = max(worst_fd, abs(fd - (dz1 + dz2)))
        cases.append(
            {
                "max_rate": worst_rate,
                "max_fd_gap": worst_fd,
                "ok": worst_rate <= tol and worst_fd <= 1e-6,
            }
        )
    out = {
        "suite": "lyapunov",
        "model": model_to_dict(model),
        "cases": cases,
        "pass": all(c["ok"] for c in cases),
    }
    return out, {"model": model_to_dict(model)}


def _suite_order_oracle(args, rng):
    B, n = args.B, args.phases
    tol = args.tol or 1e-9
    agree = 0
    cases = []
    for k in range(args.count):
        if k % 4 == 0:
            lo, hi = _ordered_pair(rng, B, n, k % 3)
        else:
            lo, hi = random_state(B, n, rng), random_state(B, n, rng)
        got = leq(lo, hi, tol=tol)
        want = _leq_enumerate(lo, hi, tol)
        agree += got == want
        if got != want:
            cases.append({"case": k, "dp": got, "enumeration": want})
    out = {
        "suite": "order-oracle",
        "B": B,
        "n": n,
        "count": args.count,
        "agreements": agree,
        "disagreements": cases,
        "pass": agree == args.count,
    }
    return out, {"B": B, "n": n, "count": args.count}


_SUITES = {
    "monotone": _suite_monotone,
    "attract": _suite_attract,
    "lyapunov": _suite_lyapunov,
    "order-oracle": _suite_order_oracle,
}


def _cmd_verify(args):
    if args.suite != "order-oracle" and not args.model:
        raise SchemaError(f"suite {args.suite!r} needs --model")
    rng = np.random.default_rng(args.seed)
    out, inputs = _SUITES[args.suite](args, rng)
    path = os.path.join(args.out, f"verify_{args.suite.replace('-', '_')}.json")
    _write_json(path, out)
    return (0 if out["pass"] else 1), inputs, [path]


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base RNG seed")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument(
        "--tol", type=float, default=None, help="override the command's tolerance"
    )

    parser = argparse.ArgumentParser(
        prog="coxfield",
        description="mean-field models of load balancing with Coxian job sizes",
    )
    parser.add_argument("--version", action="version", version=VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "convert", parents=[common], help="hyperexponential to Coxian, with checks"
    )
    p.add_argument("input", help="distribution JSON file")

    p = sub.add_parser(
        "fit", parents=[common], help="two-branch hyperexponential from moments"
    )
    p.add_argument("--m1", type=float, required=True, help="mean")
    p.add_argument("--n2", type=float, required=True, help="m2 / m1^2")
    p.add_argument("--n3", type=float, required=True, help="m3 / (m1 m2)")

    p = sub.add_parser(
        "fixed-point", parents=[common], help="solve for the stationary profile"
    )
    p.add_argument("model", help="model JSON file")

    p = sub.add_parser("integrate", parents=[common], help="sample an ODE trajectory")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--init", default="empty", help="'empty', 'full' or a state JSON")
    p.add_argument("--t-final", type=float, required=True, help="horizon")
    p.add_argument("--dt", type=float, default=None, help="RK4 step")
    p.add_argument("--samples", type=int, default=50, help="rows after the first")

    p = sub.add_parser(
        "simulate", parents=[common], help="finite-N chain vs the fixed point"
    )
    p.add_argument("config", help="simulation config JSON file")

    p = sub.add_parser("verify", parents=[common], help="randomized structure checks")
    p.add_argument("suite", choices=sorted(_SUITES))
    p.add_argument("--model", default=None, help="model JSON file")
    p.add_argument("--count", type=int, default=None, help="number of cases")
    p.add_argument("--T", type=float, default=None, help="integration horizon")
    p.add_argument("--B", type=int, default=5, help="buffer size (order-oracle)")
    p.add_argument("--phases", type=int, default=3, help="phase count (order-oracle)")
    return parser


_COMMANDS = {
    "convert": _cmd_convert,
    "fit": _cmd_fit,
    "fixed-point": _cmd_fixed_point,
    "integrate": _cmd_integrate,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
}

_SUITE_COUNTS = {"monotone": 25, "attract": 10, "lyapunov": 5, "order-oracle": 200}
_SUITE_HORIZONS = {"monotone": 50.0, "attract": 200.0, "lyapunov": 20.0}


def main(argv=None):
    raw = list(sys.argv[1:] if argv is None else argv)
    args = _build_parser().parse_args(raw)
    args.raw_argv = raw
    if args.command == "verify":
        if args.count is None:
            args.count = _SUITE_COUNTS[args.suite]
        if args.T is None:
            args.T = _SUITE_HORIZONS.get(args.suite, 50.0)
    os.makedirs(args.out, exist_ok=True)
    started = time.monotonic()
    try:
        code, inputs, outputs = _COMMANDS[args.command](args)
    except SchemaError as exc:
        print(f"coxfield {args.command}: {exc}", file=sys.stderr)
        _write_manifest(args, {}, [], started, error=str(exc))
        return 2
    except (ValueError, FixedPointError, IntegrationError) as exc:
        print(f"coxfield {args.command}: {exc}", file=sys.stderr)
        _write_manifest(args, {}, [], started, error=str(exc))
        return 1
    _write_manifest(args, inputs, [os.path.basename(p) for p in outputs], started)
    return code


if __name__ == "__main__":
    sys.exit(main())
