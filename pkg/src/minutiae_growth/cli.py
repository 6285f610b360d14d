"""Command-line front end.

Subcommands: estimate, test, simulate, sweep, align-precision.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .anisotropy import (
    DistalTestConfig,
    build_confidence_rectangle,
    study_theta,
    test_distal_boot,
    test_distal_vm,
    test_joint,
    test_rayleigh,
    test_tau_ks,
)
from .circular import AngleSample
from .errors import (
    DegenerateConfigurationError,
    InvalidInputError,
    ParseError,
    UndefinedMeanError,
)
from .estimator import SolverConfig, estimate_study
from .patterns import StudyDataset
from .simulate import (
    GrowthSpec,
    NoiseModel,
    SimConfig,
    TruncatedGaussianLaw,
    estimate_alignment_precision,
    inject_growth_study,
    reference_tau_sample,
    simulate_study,
    standin_config,
    standin_dataset,
    standin_noise,
)
from .sweeps import (
    DISTAL_TESTS,
    SweepSpec,
    default_gamma_grid,
    distal_curve,
    fine_gamma_grid,
    tau_min_sweep,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the CLI contract wants 1
    def error(self, message):
        raise UsageError(message)


def _solver_from_args(args) -> SolverConfig:
    return SolverConfig(epsilon=args.epsilon, max_iterations=args.max_iterations)


def _load_law(payload, name: str):
    if isinstance(payload, (int, float)):
        return float(payload)
    if isinstance(payload, dict) and "mean" in payload and "sd" in payload:
        return TruncatedGaussianLaw(
            mean=float(payload["mean"]),
            sd=float(payload["sd"]),
            lower=float(payload.get("lower", 0.0)),
        )
    raise UsageError("%s must be a number or an object with mean/sd" % name)


def _growth_from_json(path) -> GrowthSpec:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return GrowthSpec(
        tau=_load_law(payload.get("tau", 0.0), "tau"),
        gamma=float(payload.get("gamma", 0.0)),
        lam=_load_law(payload.get("lambda", 1.0), "lambda"),
    )


def _dataset_from_args(args) -> StudyDataset:
    if getattr(args, "dataset", None):
        return io.load_study(args.dataset)
    if getattr(args, "preset", None) == "standin":
        return standin_dataset()
    raise UsageError("provide --dataset <csv> or --preset standin")


def _reference_from_args(args, seed: int) -> np.ndarray:
    if getattr(args, "reference", None):
        return io.load_estimates(args.reference).taus()
    if getattr(args, "reference_config", None):
        payload = json.loads(Path(args.reference_config).read_text(encoding="utf-8"))
        config = SimConfig.from_dict(payload)
        sigma = float(payload.get("sigma", 7.0))
        return reference_tau_sample(
            config, NoiseModel(sigma), np.random.default_rng(seed)
        )
    raise UsageError(
        "this test needs --reference <estimates csv> or --reference-config <json>"
    )


def _emit_report(report, args) -> None:
    text = report.to_json()
    print(text)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")


def cmd_estimate(args) -> int:
    dataset = io.load_study(args.input)
    table = estimate_study(dataset, _solver_from_args(args))
    for finger, impression, message in table.failures:
        print(
            "skipped (%s, %s): %s" % (finger, impression, message), file=sys.stderr
        )
    io.save_estimates(table, args.output)
    if len(table) == 0:
        print("no pair could be estimated", file=sys.stderr)
        return EXIT_NUMERICAL
    not_converged = sum(1 for row in table if not row.converged)
    if not_converged:
        print("%d fits did not converge" % not_converged, file=sys.stderr)
    return EXIT_OK


def cmd_test(args) -> int:
    table = io.load_estimates(args.estimates)
    if len(table) == 0:
        raise InvalidInputError("the estimates file has no rows")
    seed = args.seed if args.seed is not None else 0
    sample = AngleSample(table.doubled_gammas())

    if args.test == "rayleigh":
        report = test_rayleigh(sample, alpha=args.alpha)
    elif args.test == "tau_ks":
        reference = _reference_from_args(args, seed)
        report = test_tau_ks(table.taus(), reference, alpha=args.alpha)
    elif args.test == "joint":
        if not args.dataset:
            raise UsageError("--test joint needs --dataset for the residual scatter")
        if not args.reference_config:
            raise UsageError("--test joint needs --reference-config to simulate replicates")
        dataset = io.load_study(args.dataset)
        payload = json.loads(Path(args.reference_config).read_text(encoding="utf-8"))
        config = SimConfig.from_dict(payload)
        sigma = float(payload.get("sigma", 7.0))
        rngs = np.random.SeedSequence(seed).spawn(args.replicates)
        replicates = []
        for child in rngs:
            rng = np.random.default_rng(child)
            study = simulate_study(config, NoiseModel(sigma), rng, share_template=True)
            rep_table = estimate_study(study)
            replicates.append(study_theta(study, rep_table))
        rect = build_confidence_rectangle(np.asarray(replicates), alpha=args.alpha)
        report = test_joint(study_theta(dataset, table), rect, alpha=args.alpha)
    elif args.test == "distal_vm":
        cfg = DistalTestConfig(eta=args.eta, alpha=args.alpha, axis=args.axis)
        report = test_distal_vm(sample, cfg)
    elif args.test == "distal_boot":
        cfg = DistalTestConfig(
            eta=args.eta, alpha=args.alpha, bootstrap_b=args.B, axis=args.axis
        )
        report = test_distal_boot(sample, cfg, seed)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError("unknown test %r" % args.test)

    _emit_report(report, args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.preset == "standin":
        config = standin_config()
        sigma = standin_noise().sigma
        if args.seed is None:
            seed = config.seed
    elif args.config:
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
        config = SimConfig.from_dict(payload)
        sigma = float(payload.get("sigma", 7.0))
    else:
        raise UsageError("provide --config <json> or --preset standin")

    rng = np.random.default_rng(seed)
    dataset = simulate_study(
        config, NoiseModel(sigma), rng, share_template=not args.fresh_templates
    )
    if args.growth:
        spec = _growth_from_json(args.growth)
        dataset = inject_growth_study(dataset, spec, rng)
    io.save_study(dataset, args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    dataset = _dataset_from_args(args)
    seed = args.seed if args.seed is not None else 0
    meta = {
        "test": args.test,
        "alpha": args.alpha,
        "seed": seed,
        "note": "grid-ascending search; rejection need not be monotone in tau "
        "at finite Monte Carlo size",
    }

    if args.test in DISTAL_TESTS:
        grid = fine_gamma_grid(args.gamma_steps or 500)
        cfg = DistalTestConfig(eta=args.eta, alpha=args.alpha, bootstrap_b=args.B)
        curve = distal_curve(dataset, args.tau, cfg, grid, seed=seed)
        with open(args.output, "w", encoding="utf-8", newline="") as handle:
            handle.write("gamma,reject\n")
            column = 1 if args.test == "distal_vm" else 2
            for entry in curve:
                handle.write("%r,%d\n" % (entry[0], int(entry[column])))
        meta.update({"tau": args.tau, "eta": args.eta, "gamma_steps": len(grid) - 1})
    else:
        grid = default_gamma_grid(args.gamma_steps or 20)
        tau_grid = np.arange(args.tau_start, args.tau_stop + 1e-12, args.tau_step)
        spec = SweepSpec(
            gamma_grid=grid,
            tau_grid=tau_grid,
            test_id=args.test,
            alpha=args.alpha,
            seed=seed,
        )
        reference = None
        if args.test == "tau_ks":
            reference = _reference_from_args(args, seed)
        results = tau_min_sweep(dataset, spec, reference)
        with open(args.output, "w", encoding="utf-8", newline="") as handle:
            handle.write("gamma,tau_min\n")
            for gamma, tau_min in results:
                handle.write(
                    "%r,%s\n" % (gamma, "above-grid" if tau_min is None else repr(tau_min))
                )
        meta.update(
            {
                "gamma_steps": grid.size,
                "tau_grid": [float(t) for t in spec.tau_grid],
            }
        )
    io.write_json(meta, str(args.output) + ".meta.json")
    return EXIT_OK


def cmd_align_precision(args) -> int:
    table = io.load_estimates(args.estimates)
    if len(table) == 0:
        raise UsageError("the estimates file has no rows")
    betas = table.betas()
    eta = estimate_alignment_precision(betas)
    payload = {
        "eta": eta,
        "epsilon": 2.0 * eta,
        "eta_degrees": math.degrees(eta),
        "m": int(betas.size),
    }
    text = json.dumps(payload, indent=2)
    print(text)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    if args.boxplot:
        io.write_boxplot_csv({"beta_hat": betas}, args.boxplot)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (u64)")
    common.add_argument("--output", default=None, help="output path")
    common.add_argument(
        "--format",
        choices=["csv", "json"],
        default=None,
        help="output format (each command has a fixed native format)",
    )

    parser = _Parser(
        prog="minutiae-growth",
        description="Estimate and test anisotropic growth of matched minutiae patterns",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_est = sub.add_parser("estimate", parents=[common], help="fit growth parameters")
    p_est.add_argument("--input", required=True, help="matched-pairs CSV")
    p_est.add_argument("--epsilon", type=float, default=1e-10)
    p_est.add_argument("--max-iterations", type=int, default=1000)
    p_est.set_defaults(func=cmd_estimate, native_format="csv")

    p_test = sub.add_parser("test", parents=[common], help="run one hypothesis test")
    p_test.add_argument("--estimates", required=True, help="estimate CSV")
    p_test.add_argument(
        "--test",
        required=True,
        choices=["rayleigh", "tau_ks", "joint", "distal_vm", "distal_boot"],
    )
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--eta", type=float, default=0.075)
    p_test.add_argument("--axis", type=float, default=0.0)
    p_test.add_argument("--B", type=int, default=100)
    p_test.add_argument("--replicates", type=int, default=1000)
    p_test.add_argument("--dataset", default=None, help="matched-pairs CSV (joint test)")
    p_test.add_argument("--reference", default=None, help="reference estimates CSV")
    p_test.add_argument("--reference-config", default=None, help="SimConfig JSON")
    p_test.set_defaults(func=cmd_test, native_format="json")

    p_sim = sub.add_parser("simulate", parents=[common], help="generate a synthetic study")
    p_sim.add_argument("--config", default=None, help="SimConfig JSON")
    p_sim.add_argument("--preset", choices=["standin"], default=None)
    p_sim.add_argument("--growth", default=None, help="GrowthSpec JSON")
    p_sim.add_argument(
        "--fresh-templates",
        action="store_true",
        help="independent template per pair instead of one per individual",
    )
    p_sim.set_defaults(func=cmd_simulate, native_format="csv")

    p_sweep = sub.add_parser("sweep", parents=[common], help="sensitivity sweep")
    p_sweep.add_argument(
        "--test",
        required=True,
        choices=["rayleigh", "tau_ks", "distal_vm", "distal_boot"],
    )
    p_sweep.add_argument("--dataset", default=None, help="matched-pairs CSV")
    p_sweep.add_argument("--preset", choices=["standin"], default=None)
    p_sweep.add_argument("--alpha", type=float, default=0.05)
    p_sweep.add_argument("--gamma-steps", type=int, default=None)
    p_sweep.add_argument("--tau-start", type=float, default=0.002)
    p_sweep.add_argument("--tau-stop", type=float, default=0.12)
    p_sweep.add_argument("--tau-step", type=float, default=0.002)
    p_sweep.add_argument("--tau", type=float, default=0.05, help="fixed rate (distal sweeps)")
    p_sweep.add_argument("--eta", type=float, default=0.075)
    p_sweep.add_argument("--B", type=int, default=100)
    p_sweep.add_argument("--reference", default=None)
    p_sweep.add_argument("--reference-config", default=None)
    p_sweep.set_defaults(func=cmd_sweep, native_format="csv")

    p_align = sub.add_parser(
        "align-precision", parents=[common], help="alignment precision from rotations"
    )
    p_align.add_argument("--estimates", required=True, help="estimate CSV")
    p_align.add_argument("--boxplot", default=None, help="five-number summary CSV")
    p_align.set_defaults(func=cmd_align_precision, native_format="json")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.format is not None and args.format != args.native_format:
            raise UsageError(
                "command emits %s output; --format %s is not supported"
                % (args.native_format, args.format)
            )
        if args.func in (cmd_estimate, cmd_sweep, cmd_simulate) and not args.output:
            raise UsageError("--output is required for this command")
        return args.func(args)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return EXIT_DATA
    except (
        InvalidInputError,
        DegenerateConfigurationError,
        UndefinedMeanError,
    ) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
