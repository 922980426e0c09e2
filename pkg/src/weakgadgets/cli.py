"""Command-line entry point.

Subcommands: ``build``, ``build3``, ``amplify``, ``verify``, ``selfenergy``,
``subspace``, ``sweep``, ``demo-appxC``.  Structured artifacts are JSON
(sweep tables CSV); report paths also render a PNG figure alongside unless
``--no-plot``.  Exit codes: 0 pass, 1 verification failure, 2 usage/parse
error, 3 resource/numeric error.

Outputs are byte-deterministic for a fixed seed: JSON is dumped with sorted
keys, sweeps record ``runtime_ms = 0`` unless ``--timing`` asks for real
wall-clock values, and eigensolver starts are seeded.  The sweep fan-out
width comes from ``WEAKGADGETS_THREADS`` (default 1).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, gadget2, gadget3, model, pauli, verify
from ._linalg import EIGS_SEED
from .errors import GadgetError, MalformedInputError, NumericError, ResourceLimitError

log = logging.getLogger("weakgadgets")

DEFAULT_EPSILON = 0.1
DEFAULT_D = 0.5
DEFAULT_SAFETY = 10.0
DEFAULT_ZPOINTS = 21


def _positive(value: str) -> float:
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return x


def _float_list(value: str) -> list[float]:
    try:
        return [float(v) for v in value.split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}")


def parse_target(path: str) -> model.TargetHamiltonian:
    """Load and schema-validate a target file."""
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise MalformedInputError(f"cannot read target file {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: invalid JSON ({exc})") from exc
    return model.target_from_dict(data, where=path)


def parse_gadget(path: str) -> gadget2.GadgetHamiltonian:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise MalformedInputError(f"cannot read gadget file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: invalid JSON ({exc})") from exc
    if isinstance(data, dict) and "gadget" in data:  # build-report wrapper
        data = data["gadget"]
    return gadget2.gadget_from_dict(data, where=path)


def _write_json(path: str, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    log.info("wrote %s", path)


def _payload(args, body: dict, plan=None) -> dict:
    out = {
        "command": args.command,
        "tool_version": __version__,
        "seed": args.seed,
    }
    if plan is not None:
        out["resolved_plan"] = plan.to_dict() if hasattr(plan, "to_dict") else plan
    out.update(body)
    return out


def _plot_path(output: str) -> str:
    return str(Path(output).with_suffix(".png"))


def _log_plan(plan) -> None:
    d = plan.to_dict() if hasattr(plan, "to_dict") else plan
    log.info("resolved plan: %s", json.dumps(d, sort_keys=True))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_build(args) -> int:
    target = parse_target(args.target)
    psd_shift = 0.0
    report = model.validate(target)
    if not report.psd_ok:
        if args.psd_shift:
            target, psd_shift = model.shifted_to_psd(target)
            log.warning("h_else not PSD; shifted by %+g (recorded)", psd_shift)
        else:
            log.warning(
                "h_else has negative spectrum (lambda_min=%g); the analysis assumes PSD "
                "(pass --psd-shift to shift explicitly)",
                report.h_else_lambda_min,
            )
    if args.desk:
        if args.R is None or args.C is None or args.J is None:
            raise MalformedInputError("desk mode requires --R, --C and --J")
        plan = gadget2.desk_plan(
            target, R=args.R, C=args.C, J=args.J, epsilon=args.epsilon, d=args.d
        )
    else:
        plan = gadget2.plan_parameters(
            target, epsilon=args.epsilon, d=args.d, safety=(args.cr, args.cc)
        )
    _log_plan(plan)
    if not plan.subspace_ok:
        log.warning(
            "Delta = %g is below 160*M*gamma_max = %g; subspace condition not guaranteed",
            plan.Delta,
            160 * target.m_terms * target.gamma_max,
        )
    g = gadget2.build_gadget(target, plan)
    if psd_shift:
        from dataclasses import replace

        g = replace(g, psd_shift=psd_shift)
    _write_json(args.output, _payload(args, {"gadget": g.to_dict(), "validation": report.to_dict()}, plan))
    return 0


def cmd_build3(args) -> int:
    target = parse_target(args.target)
    plan = gadget3.SerialPlan(
        delta1=args.delta1,
        c1=args.c1,
        r2=args.r2,
        c2=args.c2,
        delta2=args.delta2,
        epsilon=args.epsilon,
        split_cap=args.cap,
    )
    log.info("resolved serial plan: %s", json.dumps(plan.to_dict(), sort_keys=True))
    g = gadget3.build_serial_3body(target, plan)
    _write_json(
        args.output,
        _payload(args, {"gadget": g.to_dict(), "serial_plan": plan.to_dict()}, g.plan),
    )
    return 0


def cmd_amplify(args) -> int:
    target = parse_target(args.target)
    template = gadget2.desk_plan(
        target, R=args.R, C=args.C, J=args.J, epsilon=args.epsilon
    )
    g = gadget3.amplify(target, args.theta, template)
    _log_plan(g.plan)
    amped = gadget3.amplified_target(target, args.theta)
    _write_json(args.output, _payload(args, {"gadget": g.to_dict()}, g.plan))
    target_out = args.amplified_target_out or str(
        Path(args.output).with_suffix(".target.json")
    )
    _write_json(target_out, model.target_to_dict(amped))
    return 0


def cmd_verify(args) -> int:
    target = parse_target(args.target)
    gadget = parse_gadget(args.gadget)
    levels = args.levels or min(1 << gadget.n_target, 16)
    report = verify.compare_spectra(
        target, gadget, levels=levels, eps=args.eps, align=args.align, seed=args.seed
    )
    body = {"report": report.to_dict()}
    _write_json(args.output, _payload(args, body, gadget.plan))
    if not args.no_plot:
        from .plots import render_spectrum_plot

        render_spectrum_plot(report.to_dict(), _plot_path(args.output))
    log.info(
        "verify: max_abs_error=%.6g eps=%g -> %s",
        report.max_abs_error,
        args.eps,
        "pass" if report.passed else "FAIL",
    )
    return 0 if report.passed else 1


def cmd_selfenergy(args) -> int:
    target = parse_target(args.target)
    gadget = parse_gadget(args.gadget)
    report = analysis.self_energy_report(
        gadget,
        target,
        epsilon=args.epsilon,
        max_order=args.orders,
        z_points=args.zpoints,
        seed=args.seed,
    )
    _write_json(args.output, _payload(args, {"report": report.to_dict()}, gadget.plan))
    if not args.no_plot:
        from .plots import render_selfenergy_plot

        render_selfenergy_plot(report.to_dict(), _plot_path(args.output))
    ok = report.bounds_ok and report.subspace["ok"]
    log.info(
        "selfenergy: max deviation %.6g, bounds %s, subspace %s",
        report.max_deviation,
        "ok" if report.bounds_ok else "VIOLATED",
        "ok" if report.subspace["ok"] else "FAIL",
    )
    return 0 if ok else 1


def cmd_subspace(args) -> int:
    gadget = parse_gadget(args.gadget)
    report = analysis.check_subspace_condition(gadget, seed=args.seed)
    mono = None
    if args.monotonicity_trials:
        mono = analysis.check_energy_lowering_monotonicity(
            gadget, trials=args.monotonicity_trials, seed=args.seed
        )
    body = {"report": report.to_dict()}
    if mono is not None:
        body["monotonicity"] = mono.to_dict()
    _write_json(args.output, _payload(args, body, gadget.plan))
    ok = report.ok and (mono is None or mono.ok)
    return 0 if ok else 1


def cmd_sweep(args) -> int:
    target = parse_target(args.target)
    fixed = {}
    if args.R is not None:
        fixed["R"] = args.R
    if args.C is not None:
        fixed["C"] = args.C
    if args.J is not None:
        fixed["J"] = args.J
    if args.Delta is not None:
        fixed["Delta"] = args.Delta
    workers = int(os.environ.get("WEAKGADGETS_THREADS", "1"))
    result = verify.sweep(
        target,
        args.vary,
        args.values,
        fixed,
        levels=args.levels,
        eps=args.eps,
        seed=args.seed,
        timing=args.timing,
        workers=workers,
    )
    Path(args.csv).write_text(result.to_csv())
    log.info("wrote %s (%d rows, slope %s)", args.csv, len(result.rows), result.slope)
    if not args.no_plot:
        from .plots import render_sweep_plot

        render_sweep_plot(result, _plot_path(args.csv), args.vary)
    return 0 if all(not r.error for r in result.rows) else 1


def cmd_demo_appxc(args) -> int:
    target = parse_target(args.target)
    deltas = args.deltas
    order3_residuals = []
    exact_residuals = []
    identity_residual = 0.0
    for delta in deltas:
        plan = gadget3.direct3_plan(target, R=args.R, C=args.C, J=delta / args.C)
        g = gadget3.build_direct_3local(target, plan)
        identity_residual = max(
            identity_residual,
            plan.coefficient_identity_residual([ct.gamma for ct in target.coupled_terms]),
        )
        h_eff = pauli.to_dense_operator(target.total_sum()) + g.known_shift * np.eye(
            1 << target.n_qubits
        )
        upto3 = sum(
            analysis.self_energy_term(g, k, 0.0).operator for k in (1, 2, 3)
        )
        order3_residuals.append(float(np.linalg.norm(upto3 - h_eff, 2)))
        exact_residuals.append(
            float(np.linalg.norm(analysis.self_energy_exact(g, 0.0) - h_eff, 2))
        )
    pathology = gadget3.direct3_pathology_table(
        target.m_terms, target.gamma_max, args.pathology_R
    )
    decreasing = all(
        b < a for a, b in zip(exact_residuals, exact_residuals[1:])
    )
    report = {
        "experimental": True,
        "coefficient_identity_residual": identity_residual,
        "delta_sweep": {
            "deltas": list(deltas),
            "order3_residuals": order3_residuals,
            "exact_residuals": exact_residuals,
            "decreasing": decreasing,
        },
        "pathology": pathology,
        "pathology_note": "with Delta = M^3 R^2 the couplings grow linearly in R; "
        "this construction cannot keep all terms weak (informational)",
    }
    _write_json(args.output, _payload(args, {"report": report}))
    if not args.no_plot:
        from .plots import render_direct3_plot

        render_direct3_plot(report, _plot_path(args.output))
    ok = identity_residual <= 1e-12 and decreasing
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weakgadgets",
        description="Build weak-interaction gadget Hamiltonians and verify them "
        "by exact numerics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output=True):
        p.add_argument("--seed", type=int, default=EIGS_SEED, help="eigensolver seed")
        p.add_argument("--quiet", action="store_true", help="warnings only")
        p.add_argument("--json-logs", action="store_true", help="JSON log lines")
        p.add_argument("--no-plot", action="store_true", help="skip PNG rendering")
        if output:
            p.add_argument("-o", "--output", required=True, help="output JSON path")

    p = sub.add_parser("build", help="build a 2-body gadget")
    p.add_argument("--target", required=True)
    p.add_argument("--desk", action="store_true", help="use explicit R, C, J")
    p.add_argument("--R", type=int)
    p.add_argument("--C", type=int)
    p.add_argument("--J", type=_positive)
    p.add_argument("--epsilon", type=_positive, default=DEFAULT_EPSILON)
    p.add_argument("--d", type=float, default=DEFAULT_D)
    p.add_argument("--cr", type=_positive, default=DEFAULT_SAFETY)
    p.add_argument("--cc", type=_positive, default=DEFAULT_SAFETY)
    p.add_argument("--psd-shift", action="store_true",
                   help="shift a non-PSD h_else and record the shift")
    common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("build3", help="build a serial 3-body gadget")
    p.add_argument("--target", required=True)
    p.add_argument("--delta1", type=_positive, required=True)
    p.add_argument("--c1", type=int, default=1)
    p.add_argument("--r2", type=int, default=1)
    p.add_argument("--c2", type=int, default=1)
    p.add_argument("--delta2", type=_positive, required=True)
    p.add_argument("--cap", type=_positive, default=None,
                   help="split stage-2 strengths at this cap")
    p.add_argument("--epsilon", type=_positive, default=DEFAULT_EPSILON)
    common(p)
    p.set_defaults(func=cmd_build3)

    p = sub.add_parser("amplify", help="gadgetize theta * target")
    p.add_argument("--target", required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--R", type=int, required=True)
    p.add_argument("--C", type=int, required=True)
    p.add_argument("--J", type=_positive, required=True)
    p.add_argument("--epsilon", type=_positive, default=DEFAULT_EPSILON)
    p.add_argument("--amplified-target-out", default=None,
                   help="where to write the split theta*target (default: <output>.target.json)")
    common(p)
    p.set_defaults(func=cmd_amplify)

    p = sub.add_parser("verify", help="compare gadget and target spectra")
    p.add_argument("--target", required=True)
    p.add_argument("--gadget", required=True)
    p.add_argument("--levels", type=int, default=None,
                   help="levels to compare (default 2**n_target capped at 16)")
    p.add_argument("--eps", type=_positive, required=True)
    p.add_argument("--align", choices=("analytic", "ground"), default="analytic")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("selfenergy", help="self-energy deviation and series bounds")
    p.add_argument("--target", required=True)
    p.add_argument("--gadget", required=True)
    p.add_argument("--orders", type=int, default=6)
    p.add_argument("--zpoints", type=int, default=DEFAULT_ZPOINTS)
    p.add_argument("--epsilon", type=_positive, default=DEFAULT_EPSILON)
    common(p)
    p.set_defaults(func=cmd_selfenergy)

    p = sub.add_parser("subspace", help="check the subspace condition")
    p.add_argument("--gadget", required=True)
    p.add_argument("--monotonicity-trials", type=int, default=0,
                   help="also run the energy-lowering simplification check")
    common(p)
    p.set_defaults(func=cmd_subspace)

    p = sub.add_parser("sweep", help="parameter sweep with CSV output")
    p.add_argument("--target", required=True)
    p.add_argument("--vary", choices=verify.SWEEP_PARAMETERS, required=True)
    p.add_argument("--values", type=_float_list, required=True)
    p.add_argument("--R", type=int)
    p.add_argument("--C", type=int)
    p.add_argument("--J", type=_positive)
    p.add_argument("--Delta", type=_positive)
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--eps", type=_positive, default=DEFAULT_EPSILON)
    p.add_argument("--timing", action="store_true",
                   help="record real wall-clock runtime_ms (breaks byte determinism)")
    p.add_argument("--csv", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, default=EIGS_SEED)
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--json-logs", action="store_true")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("demo-appxC", help="direct 3-local construction demonstrator")
    p.add_argument("--target", required=True)
    p.add_argument("--R", type=int, default=1)
    p.add_argument("--C", type=int, default=1)
    p.add_argument("--deltas", type=_float_list, default=[50.0, 100.0, 200.0])
    p.add_argument("--pathology-R", type=_float_list, default=[2.0, 4.0, 8.0, 16.0])
    common(p)
    p.set_defaults(func=cmd_demo_appxc)

    return parser


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        return json.dumps(
            {"level": record.levelname.lower(), "msg": record.getMessage()},
            sort_keys=True,
        )


def _configure_logging(args) -> None:
    handler = logging.StreamHandler(sys.stderr)
    if getattr(args, "json_logs", False):
        handler.setFormatter(_JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    root = logging.getLogger("weakgadgets")
    root.handlers.clear()
    root.addHandler(handler)
    root.setLevel(logging.WARNING if getattr(args, "quiet", False) else logging.INFO)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)
    try:
        return args.func(args)
    except MalformedInputError as exc:
        log.error("%s", exc)
        return 2
    except (ResourceLimitError, NumericError) as exc:
        log.error("%s", exc)
        return 3
    except GadgetError as exc:
        log.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
