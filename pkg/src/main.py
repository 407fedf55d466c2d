"""Command-line entry point: ``python -m src.main <subcommand> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 unsupported model,
4 numerical failure.
"""
import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from src.config import IsolatedSettings, Settings, use_settings
from src.estimator_schemas import EstimatorConfig, EstimatorMethod, ExperimentConfig
from src.exceptions import ArgumentError, LevyError
from src.levy import io
from src.levy.bench import load_experiment_config, oracle_lambda, run_experiment, snr_improvement
from src.levy.estimators import bp_grid, denoise, linear_interpolate, mmse_interpolate
from src.levy.innovations import calibrated_spec
from src.levy.pdf_engine import (
    default_grid,
    increment_pdf,
    increment_pdf_char_inversion,
    increment_pdf_closed_form,
    psi,
)
from src.levy.sampler import add_noise, rng_stream, simulate_path
from src.schemas import CliInvocation, GridSpec, InnovationSpec, Observations

logger = logging.getLogger(__name__)

SPEC_FLAGS = ("sigma", "poisson_rate", "amplitude_sigma", "alpha", "stable_scale", "gamma")
NOISE_STREAM = 1


def _add_spec_flags(parser: argparse.ArgumentParser, required: bool) -> None:
    group = parser.add_argument_group("innovation law")
    group.add_argument("--innovation", required=required, help="gaussian, compound_poisson, cauchy, alpha_stable, variance_gamma")
    group.add_argument("--sigma", type=float)
    group.add_argument("--poisson-rate", type=float)
    group.add_argument("--amplitude-sigma", type=float)
    group.add_argument("--alpha", type=float)
    group.add_argument("--stable-scale", type=float)
    group.add_argument("--gamma", type=float)
    group.add_argument("--calibrated", action="store_true", help="entropy-matched benchmark parameters")


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(prog="levy-denoise", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="subcommand", required=True)

    simulate = commands.add_parser("simulate", help="sample a Lévy process, optionally observed in noise")
    _add_spec_flags(simulate, required=True)
    simulate.add_argument("--n", type=int, required=True, help="number of increments")
    simulate.add_argument("--T", type=float, default=1.0, help="sampling period")
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--noise-var", type=float, help="write observations with this noise variance")
    simulate.add_argument("--stride", type=int, help="observe every stride-th node")
    simulate.add_argument("--path-out", type=Path, help="also write the noiseless path here")
    simulate.add_argument("--out", type=Path, required=True)

    pdf = commands.add_parser("pdf", help="tabulate the increment density")
    _add_spec_flags(pdf, required=True)
    pdf.add_argument("--T", type=float, default=1.0)
    pdf.add_argument("--route", choices=["auto", "closed", "inversion"], default="auto")
    pdf.add_argument("--grid-n", type=int, help="grid points (power of two)")
    pdf.add_argument("--half-width", type=float, help="grid half-width W")
    pdf.add_argument("--potential", action="store_true", help="add the MAP potential Psi_T as a psi column")
    pdf.add_argument("--out", type=Path, required=True)

    den = commands.add_parser("denoise", help="estimate a signal from noisy observations")
    _add_spec_flags(den, required=False)
    den.add_argument("--in", dest="input", type=Path, required=True)
    den.add_argument("--method", choices=[m.value for m in EstimatorMethod], required=True)
    den.add_argument("--noise-var", type=float, help="override the noise variance of the file")
    den.add_argument("--lambda", dest="reg_weight", type=float)
    den.add_argument("--auto-lambda", action="store_true", help="calibrate lambda on simulated realizations")
    den.add_argument("--calibration-realizations", type=int, default=10)
    den.add_argument("--epsilon", type=float, default=1.0)
    den.add_argument("--grid-n", type=int)
    den.add_argument("--max-iter", type=int, default=500)
    den.add_argument("--seed", type=int)
    den.add_argument("--truth", type=Path, help="noiseless samples; prints the SNR improvement")
    den.add_argument("--dump-marginals", type=Path, help="directory for per-node posterior marginals")
    den.add_argument("--out", type=Path, required=True)

    interp = commands.add_parser("interpolate", help="fill the fine grid between exact samples")
    _add_spec_flags(interp, required=False)
    interp.add_argument("--in", dest="input", type=Path, required=True)
    interp.add_argument("--method", choices=["linear", "mmse"], default="mmse")
    interp.add_argument("--grid-n", type=int)
    interp.add_argument("--dump-marginals", type=Path)
    interp.add_argument("--out", type=Path, required=True)

    bench = commands.add_parser("benchmark", help="run a noise-variance sweep from a config file")
    bench.add_argument("--config", type=Path, required=True)
    bench.add_argument("--out", type=Path, default=Path("report.csv"))
    bench.add_argument("--workers", type=int)
    bench.add_argument("--dry-run", action="store_true", help="validate the config and exit")
    return parser


def spec_from_args(args: argparse.Namespace, fallback: InnovationSpec | None = None) -> InnovationSpec:
    """
    Innovation law from the command-line flags.

    Raises:
        ArgumentError: If no law is given and there is no fallback
    """
    if args.innovation is None:
        if fallback is None:
            raise ArgumentError("--innovation is required (the input file names no innovation law)")
        return fallback
    if args.calibrated:
        return calibrated_spec(args.innovation)
    fields = {"kind": args.innovation}
    fields.update({name: getattr(args, name) for name in SPEC_FLAGS if getattr(args, name) is not None})
    try:
        return InnovationSpec.from_mapping(fields)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from exc


def _seed(args: argparse.Namespace, settings: Settings) -> int:
    if args.seed is not None:
        return args.seed
    print(f"seed={settings.default_seed}", file=sys.stderr)
    return settings.default_seed


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    spec = spec_from_args(args)
    if args.n < 1:
        raise ArgumentError("--n must be at least 1")
    seed = _seed(args, settings)
    path = simulate_path(spec, args.T, args.n, seed)
    if args.noise_var is None and args.stride is None:
        io.write_sample_path(args.out, path)
        return 0

    noise_var = args.noise_var or 0.0
    if noise_var < 0:
        raise ArgumentError("--noise-var must be nonnegative")
    obs = add_noise(path, math.sqrt(noise_var), args.stride or 1, rng_stream(seed, NOISE_STREAM))
    io.write_observations(args.out, obs.model_copy(update={"seed": seed}))
    if args.path_out:
        io.write_sample_path(args.path_out, path)
    return 0


def cmd_pdf(args: argparse.Namespace, settings: Settings) -> int:
    spec = spec_from_args(args)
    grid = default_grid(spec, args.T, args.grid_n)
    if args.half_width is not None:
        grid = GridSpec(half_width=args.half_width, num_points=grid.num_points)
    if args.route == "closed":
        pdf = increment_pdf_closed_form(spec, args.T, grid)
    elif args.route == "inversion":
        pdf = increment_pdf_char_inversion(spec, args.T, grid, continuous_part=True, settings=settings)
    else:
        pdf = increment_pdf(spec, args.T, grid)
    potential = psi(spec, args.T, pdf.x) if args.potential else None
    io.write_grid_pdf(args.out, pdf, potential)
    return 0


def _truth_at_observations(path: Path, obs: Observations) -> np.ndarray:
    values = io.read_values(path)
    if values.size == obs.fine_grid_length:
        return values[:: obs.stride]
    if values.size == obs.noisy.size:
        return values
    raise ArgumentError(f"{path} has {values.size} samples; expected {obs.fine_grid_length} or {obs.noisy.size}")


def cmd_denoise(args: argparse.Namespace, settings: Settings) -> int:
    obs = io.read_observations(args.input)
    if args.noise_var is not None:
        obs = Observations(**{**obs.model_dump(), "noise_variance": args.noise_var})
    method = EstimatorMethod(args.method)
    needs_spec = method in (EstimatorMethod.MAP, EstimatorMethod.MMSE) or args.auto_lambda
    spec = spec_from_args(args, obs.spec) if needs_spec else None

    reg_weight = args.reg_weight
    if method.is_variational and reg_weight is None:
        if not args.auto_lambda:
            raise ArgumentError(f"method '{method.value}' needs --lambda or --auto-lambda")
        experiment = ExperimentConfig(
            spec=spec,
            period=obs.period,
            signal_length=max(obs.fine_grid_length - 1, 16),
            realizations=2,
            calibration_realizations=args.calibration_realizations,
            noise_variances=[obs.noise_variance],
            methods=[method],
            seed=_seed(args, settings),
            epsilon=args.epsilon,
        )
        reg_weight = oracle_lambda(method, spec, obs.noise_variance, experiment, settings=settings).reg_weight
        print(f"lambda={reg_weight!r}")

    grid = bp_grid(obs, spec, obs.period, args.grid_n) if method is EstimatorMethod.MMSE else None
    config = EstimatorConfig(
        method=method,
        reg_weight=reg_weight,
        epsilon=args.epsilon,
        grid=grid,
        max_iter=args.max_iter,
    )
    result = denoise(obs, config, spec, keep_marginals=args.dump_marginals is not None)
    io.write_denoise_result(args.out, result)
    if args.dump_marginals:
        io.write_marginals(args.dump_marginals, result)
    if args.truth:
        truth = _truth_at_observations(args.truth, obs)
        estimate = result.estimate[obs.observed_nodes()]
        snri = snr_improvement(truth, obs.noisy, np.concatenate(([0.0], estimate)))
        print(f"snri_db={snri!r}")
    return 0


def cmd_interpolate(args: argparse.Namespace, settings: Settings) -> int:
    obs = io.read_observations(args.input)
    if args.method == "linear":
        result = linear_interpolate(obs)
    else:
        spec = spec_from_args(args, obs.spec)
        grid = bp_grid(obs, spec, obs.period, args.grid_n)
        result = mmse_interpolate(obs, spec, obs.period, grid, keep_marginals=args.dump_marginals is not None)
    io.write_denoise_result(args.out, result)
    if args.dump_marginals and result.posterior_marginals:
        io.write_marginals(args.dump_marginals, result)
    return 0


def cmd_benchmark(args: argparse.Namespace, settings: Settings) -> int:
    config = load_experiment_config(args.config)
    if args.workers is not None:
        config = ExperimentConfig(**{**config.model_dump(), "workers": args.workers})
    if args.dry_run:
        logger.info(
            "config %s is valid: %d noise variances x %d methods",
            args.config, len(config.noise_variances), len(config.methods),
        )
        return 0
    report = run_experiment(config, settings)
    io.write_report(args.out, report)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "pdf": cmd_pdf,
    "denoise": cmd_denoise,
    "interpolate": cmd_interpolate,
    "benchmark": cmd_benchmark,
}


def invocation_from_args(args: argparse.Namespace) -> CliInvocation:
    flags = {k: v for k, v in vars(args).items() if k != "subcommand" and not isinstance(v, Path)}
    paths = {k: v for k, v in vars(args).items() if isinstance(v, Path)}
    inputs = [paths[k] for k in ("input", "config", "truth") if k in paths]
    outputs = [v for k, v in paths.items() if k not in ("input", "config", "truth")]
    return CliInvocation(subcommand=args.subcommand, flags=flags, inputs=inputs, outputs=outputs)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )


def main(argv: list[str] | None = None) -> int:
    """
    Run one subcommand.

    Args:
        argv: Arguments without the program name, ``sys.argv[1:]`` by default

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    settings = use_settings(IsolatedSettings(log_level=args.log_level))
    configure_logging(settings.log_level)
    invocation = invocation_from_args(args)
    logger.debug("invocation: %s", invocation.model_dump(mode="json"))

    try:
        return COMMANDS[invocation.subcommand](args, settings)
    except LevyError as exc:
        logger.error("%s", exc.detail)
        return exc.exit_code
    except ValidationError as exc:
        logger.error("invalid argument: %s", exc)
        return ArgumentError.exit_code
    except OSError as exc:
        logger.error("%s", exc)
        return ArgumentError.exit_code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
