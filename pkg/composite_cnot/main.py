import argparse
import logging
import sys
import traceback

import yaml

from composite_cnot import catalog
from composite_cnot import checks as checks_module
from composite_cnot import config as config_module
from composite_cnot import csv_output
from composite_cnot import error_analysis
from composite_cnot import noise_sim
from composite_cnot import optimizer
from composite_cnot import params as params_module

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler()],
)
logger = logging.getLogger("composite_cnot")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

SWEEP_FIELDS = ["sequence_id", "sigma", "mean_infidelity", "std_error", "n_samples", "seed"]
ANALYZE_FIELDS = ["sequence_id", "channel", "abs_coefficient", "suppressed", "empirical_order", "slope"]
LOCAL_NOISE_FIELDS = [
    "sequence_id", "mode", "scale", "sigma", "cnot_infidelity", "local_infidelity",
    "single_qubit_infidelity", "ratio", "n_samples", "seed",
]


def _csv_list(value: str) -> list:
    return [v.strip() for v in value.split(",") if v.strip()]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", type=str, help="Path to a YAML/JSON run configuration.")
    parser.add_argument("--samples", type=int, help="Monte Carlo samples per grid point.")
    parser.add_argument("--seed", type=int, help="Run seed.")
    parser.add_argument("--out", "-o", type=str, help="Output path ('-' for stdout).")
    parser.add_argument("--workers", type=int, help="Worker threads.")
    parser.add_argument(
        "--params",
        choices=config_module.PARAM_SOURCES,
        help="Use printed-precision or refined sequence parameters.",
    )
    parser.add_argument(
        "--debug",
        "-d",
        action="store_true",
        help="Enable debug mode for verbose output.",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="composite_cnot",
        description="Build, check and simulate composite pulse sequences for corrected CNOT gates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="Run the verification suite.")
    verify.add_argument(
        "--check", action="append", help="Run only this check (repeatable)."
    )
    _add_common(verify)

    analyze = sub.add_parser("analyze", help="First-order error report per channel.")
    analyze.add_argument("sequence_id", nargs="?", help="Sequence id, e.g. length5.")
    analyze.add_argument("--sequence", type=str, help="Sequence id (alternative to the positional).")
    analyze.add_argument("--orders", action="store_true", help="Also fit empirical suppression orders.")
    _add_common(analyze)

    sweep = sub.add_parser("sweep", help="Mean infidelity against noise strength.")
    sweep.add_argument("--sequence", type=str, help="Comma-separated sequence ids.")
    sweep.add_argument("--sigma", type=str, help="Comma-separated sigma/alpha grid.")
    sweep.add_argument("--scenario", type=str, help="Scenario type (heisenberg, ising, ...).")
    _add_common(sweep)

    opt = sub.add_parser("optimize", help="Search for the tilt angles psi.")
    opt.add_argument("--target", choices=("cnot", "self-similar"), default="cnot")
    opt.add_argument("--k", type=int, choices=params_module.VALID_K, default=20)
    opt.add_argument("--n", type=str, help="Repetition counts a,b,c,d.")
    opt.add_argument("--seeds", type=int, default=50, help="Number of random starting points.")
    opt.add_argument("--tol", type=float, default=optimizer.DEFAULT_TOL)
    opt.add_argument(
        "--compositions", action="store_true", help="Search all four compositions of n."
    )
    _add_common(opt)

    local = sub.add_parser("local-noise", help="CNOT infidelity under imperfect local gates.")
    local.add_argument("--sequence", type=str, help="Comma-separated sequence ids.")
    local.add_argument("--mode", action="append", choices=config_module.LOCAL_MODES)
    local.add_argument("--scale", type=str, help="Comma-separated local perturbation scales.")
    local.add_argument("--sigma", type=str, help="Comma-separated sigma/alpha grid.")
    _add_common(local)
    return parser


def _run_config(args, **extra) -> config_module.RunConfig:
    overrides = {
        "command": args.command,
        "n_samples": args.samples,
        "seed": args.seed,
        "output_path": args.out,
        "workers": args.workers,
        "params": args.params,
    }
    overrides.update(extra)
    return config_module.load_run_config(args.config, overrides)


def _provenance(cfg: config_module.RunConfig) -> dict:
    return {
        "command": cfg.command,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "params": cfg.params,
        "version": csv_output.PACKAGE_VERSION,
    }


def cmd_verify(args) -> int:
    table = params_module.PUBLISHED
    try:
        results = checks_module.run_checks(args.check, table)
    except checks_module.UnknownCheckError as e:
        logger.error(str(e))
        return EXIT_USAGE

    print("\n" + "=" * 70)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"  [{status}] {result.name:<18} {result.detail}")
    print("=" * 70)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}\n")
        return EXIT_FAILED
    print(f"All {len(results)} checks passed\n")
    return EXIT_OK


def cmd_analyze(args) -> int:
    sequence_id = args.sequence or args.sequence_id
    if not sequence_id:
        logger.error("analyze needs a sequence id")
        return EXIT_USAGE
    cfg = _run_config(args, sequence_ids=[sequence_id])
    spec = catalog.build_sequence(sequence_id, cfg.params)
    try:
        reports = error_analysis.channel_report(
            spec.node, spec.target, orders=args.orders, workers=cfg.workers
        )
    except error_analysis.MiswiredSequenceError as e:
        logger.error(f"{sequence_id}: {e}")
        return EXIT_FAILED
    suppressed = sum(r.suppressed for r in reports)
    logger.info(f"{sequence_id}: {suppressed} of {len(reports)} channels suppressed at first order")
    rows = [dict(r.as_row(), sequence_id=spec.name) for r in reports]
    csv_output.write_rows(cfg.output_path, ANALYZE_FIELDS, rows, _provenance(cfg))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _run_config(
        args,
        sequence_ids=_csv_list(args.sequence) if args.sequence else None,
        sigma_grid=args.sigma,
        scenario_type=args.scenario,
    )
    if not cfg.sequence_ids:
        logger.error("No sequences to sweep; use --sequence or run.sequences in the config")
        return EXIT_USAGE
    scenario = noise_sim.scenario_from_config(cfg.scenario)
    logger.info(
        f"Sweeping {len(cfg.sequence_ids)} sequences over {len(cfg.sigma_grid)} sigma values "
        f"({cfg.n_samples} samples, seed {cfg.seed}, scenario {scenario.kind})"
    )
    rows = []
    for sequence_id in cfg.sequence_ids:
        results = noise_sim.run_sweep(
            sequence_id, scenario, cfg.sigma_grid, cfg.n_samples, cfg.seed, cfg.workers, cfg.params
        )
        rows.extend(r.as_row() for r in results)
    csv_output.write_rows(cfg.output_path, SWEEP_FIELDS, rows, _provenance(cfg))
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = _run_config(args)
    if args.n:
        try:
            n = tuple(int(x) for x in _csv_list(args.n))
        except ValueError:
            raise config_module.ConfigError(f"--n expects four integers, got '{args.n}'") from None
    elif args.target == "cnot":
        n = optimizer.CNOT_COMPOSITION
    else:
        n = optimizer.SELF_SIMILAR_COMPOSITION
    seeds = optimizer.random_seeds(args.seeds, cfg.seed)
    published = params_module.published_params(args.target, args.k)
    report = {
        "target": args.target,
        "k": args.k,
        "seeds": args.seeds,
        "seed": cfg.seed,
        "tol": args.tol,
        "config_hash": cfg.config_hash(),
    }
    if args.compositions:
        found = optimizer.search_compositions(args.target, args.k, seeds, args.tol, cfg.workers)
        report["compositions"] = [
            {
                "n": list(comp),
                "psi": list(result.psi),
                "objective": result.objective_value,
                "converged": result.converged,
            }
            for comp, result in found.items()
        ]
        best = optimizer.best_result(list(found.values()))
    else:
        spec = optimizer.ObjectiveSpec(n, optimizer.target_invariants(args.target, args.k))
        best = optimizer.minimize(spec, seeds, args.tol, cfg.workers)
    report["best"] = {
        "n": list(best.n),
        "psi": list(best.psi),
        "objective": best.objective_value,
        "converged": best.converged,
        "restarts_used": best.restarts_used,
        "seed_index": best.seed_index,
    }
    report["published"] = {
        "n": list(published.n),
        "psi": list(published.psi),
        "objective": optimizer.objective(published.psi, optimizer.ObjectiveSpec.for_params(published)),
    }
    report["comparison"] = optimizer.compare_with_published(best, published)

    text = yaml.safe_dump(report, sort_keys=False)
    if cfg.output_path in (None, "-"):
        print(text)
    else:
        try:
            with open(cfg.output_path, "w") as f:
                f.write(text)
        except OSError as e:
            raise csv_output.OutputError(f"Cannot write report to '{cfg.output_path}': {e}") from e
        logger.info(f"Wrote optimization report to {cfg.output_path}")
    return EXIT_OK if best.converged else EXIT_FAILED


def cmd_local_noise(args) -> int:
    cfg = _run_config(
        args,
        sequence_ids=_csv_list(args.sequence) if args.sequence else None,
        modes=args.mode,
        scale_grid=args.scale,
        sigma_grid=args.sigma,
    )
    if not cfg.sequence_ids:
        logger.error("No sequences given; use --sequence or run.sequences in the config")
        return EXIT_USAGE
    rows = []
    for sequence_id in cfg.sequence_ids:
        for mode in cfg.modes:
            points = noise_sim.local_gate_study(
                sequence_id, mode, cfg.scale_grid, cfg.sigma_grid,
                cfg.n_samples, cfg.seed, cfg.workers, cfg.params,
            )
            rows.extend(p.as_row() for p in points)
    csv_output.write_rows(cfg.output_path, LOCAL_NOISE_FIELDS, rows, _provenance(cfg))
    return EXIT_OK


COMMAND_HANDLERS = {
    "verify": cmd_verify,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "local-noise": cmd_local_noise,
}


def run(argv=None) -> int:
    # Parse command-line arguments
    parser = build_parser()
    args = parser.parse_args(argv)
    debug = args.debug

    # Set logging level based on debug flag
    if debug:
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug("Debug mode enabled")

    try:
        return COMMAND_HANDLERS[args.command](args)
    except (config_module.ConfigError, catalog.UnknownSequenceError) as e:
        logger.error(f"Configuration error: {e}")
        if debug:
            traceback.print_exc()
        return EXIT_USAGE
    except (
        optimizer.InvalidCompositionError,
        noise_sim.ScenarioError,
        csv_output.OutputError,
    ) as e:
        logger.error(f"{args.command} failed: {e}")
        if debug:
            traceback.print_exc()
        return EXIT_USAGE if not isinstance(e, csv_output.OutputError) else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(run())
