"""
Main application entry point for charflow
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

# Add src to path
sys.path.append(str(Path(__file__).parent))

try:
    from .cli.config_schema import ConfigError, ScenarioConfig, config_from_dict, load_config
    from .cli.report import ReportWriteError, emit_report, write_trajectory
    from .cli.runner import build_model, run_scenario, sample_start
    from .cli.selftest import run_selftest
    from .config import Config
    from .dynamics.flow import integrate_characteristic
    from .dynamics.integrator import IntegrationError
except ImportError:
    from cli.config_schema import ConfigError, ScenarioConfig, config_from_dict, load_config
    from cli.report import ReportWriteError, emit_report, write_trajectory
    from cli.runner import build_model, run_scenario, sample_start
    from cli.selftest import run_selftest
    from config import Config
    from dynamics.flow import integrate_characteristic
    from dynamics.integrator import IntegrationError

# Configure logging
logging.basicConfig(
    level=getattr(logging, Config.LOG_LEVEL),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TASK = 3
EXIT_INVARIANT = 4

MODEL_CHOICES = ("t3_contact", "sphere", "ellipsoid", "magnetic_torus", "hyperbolic_utb")


def _model_section(args: argparse.Namespace) -> Dict[str, Any]:
    if args.model in ("sphere", "ellipsoid"):
        section: Dict[str, Any] = {"kind": "levelset", "hamiltonian": args.model}
        if args.model == "ellipsoid":
            section.update({"a": args.a, "b": args.b})
        return section
    section = {"kind": args.model}
    if args.model in ("magnetic_torus", "hyperbolic_utb"):
        section["epsilon"] = args.epsilon
    return section


def _command_config(args: argparse.Namespace, task: str) -> ScenarioConfig:
    """Scenario with one task, assembled from flags and validated like a scenario file"""
    data: Dict[str, Any] = {"model": _model_section(args), "tasks": [task], "seed": args.seed}
    if args.tol is not None:
        data["integrator"] = {"tol": args.tol}
    quadrature = {k: v for k, v in (("scheme", args.scheme), ("resolution", args.resolution)) if v is not None}
    if quadrature:
        data["quadrature"] = quadrature
    if task == "orbits" and args.seeds is not None:
        data["orbits"] = {"seeds": args.seeds}
    if task == "ergodicity":
        section: Dict[str, Any] = {}
        if args.seeds is not None:
            section["seeds"] = args.seeds
        if args.horizons is not None:
            section["horizons"] = args.horizons
        if section:
            data["ergodicity"] = section
    if task == "certify":
        data["certify"] = {"basis_cap": args.basis_cap, "samples": args.samples}
    return config_from_dict(data)


def _apply_overrides(config: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    changes: Dict[str, Any] = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output"] = args.out
    if args.format:
        changes["formats"] = tuple(args.format)
    if args.tol is not None:
        changes["integrator"] = replace(config.integrator, tol=args.tol)
    return replace(config, **changes) if changes else config


def _finish(report, config: ScenarioConfig, normalize: bool) -> int:
    written = emit_report(report, config.output, config.formats, normalize=normalize)
    for path in written:
        print(path)
    if report.failed_tasks:
        logger.error(f"Failed tasks: {report.failed_tasks}")
        return EXIT_TASK
    if report.failed_checks:
        logger.error(f"Failed consistency checks: {report.failed_checks}")
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_scenario(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.file), args)
    return _finish(run_scenario(config), config, args.normalize)


def cmd_task(args: argparse.Namespace) -> int:
    config = _apply_overrides(_command_config(args, args.command), args)
    return _finish(run_scenario(config), config, args.normalize)


def cmd_flow(args: argparse.Namespace) -> int:
    config = _apply_overrides(_command_config(args, "lk"), args)
    model = build_model(config.model)
    start = sample_start(model, config.seed) if args.x0 is None else args.x0
    trajectory = integrate_characteristic(model, start, args.time, tol=config.integrator.tol,
                                          samples=args.samples_out)
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    path = write_trajectory(trajectory, out / "trajectory.csv", getattr(model, "coordinates", None))
    print(json.dumps(trajectory.to_dict(), sort_keys=True))
    print(path)
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    results = run_selftest(extended=args.extended)
    for check in results:
        print(f"{'PASS' if check.passed else 'FAIL'}  {check.name:<28} {check.detail}")
    failed = [check.name for check in results if not check.passed]
    if failed:
        logger.error(f"Selftest failures: {failed}")
        return EXIT_INVARIANT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="charflow",
        description="Characteristic flows, self-linking and contact-type evidence on closed 3-manifolds",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed")
    common.add_argument("--tol", type=float, default=None, help="Integrator tolerance")
    common.add_argument("--out", type=str, default=None, help="Output directory")
    common.add_argument("--format", action="append", choices=Config.SUPPORTED_FORMATS,
                        help="Report format (repeatable)")
    common.add_argument("--normalize", action="store_true", help="Drop timings from the JSON report")

    model_options = argparse.ArgumentParser(add_help=False)
    model_options.add_argument("--model", choices=MODEL_CHOICES, default="t3_contact")
    model_options.add_argument("--epsilon", type=float, default=0.05, help="Energy / twist parameter")
    model_options.add_argument("--a", type=float, default=1.0, help="Ellipsoid capacity a")
    model_options.add_argument("--b", type=float, default=1.6180339887, help="Ellipsoid capacity b")
    model_options.add_argument("--scheme", choices=("grid", "monte_carlo"), default=None)
    model_options.add_argument("--resolution", type=int, default=None)
    model_options.add_argument("--seeds", type=int, default=None, help="Seed-point count")

    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("lk", "Self-linking number"), ("orbits", "Closed characteristics"),
                            ("ergodicity", "Unique-ergodicity diagnostic"),
                            ("certify", "Contact-type certification")):
        command = sub.add_parser(name, parents=[common, model_options], help=help_text)
        if name == "ergodicity":
            command.add_argument("--horizons", type=float, nargs="+", default=None)
        if name == "certify":
            command.add_argument("--basis-cap", type=int, default=3)
            command.add_argument("--samples", type=int, default=4096)
        command.set_defaults(handler=cmd_task)

    flow = sub.add_parser("flow", parents=[common, model_options], help="Integrate one trajectory")
    flow.add_argument("--time", type=float, default=20.0, help="Flow time (negative runs backwards)")
    flow.add_argument("--x0", type=float, nargs="+", default=None, help="Start point in chart coordinates")
    flow.add_argument("--samples-out", type=int, default=256, help="Output samples")
    flow.set_defaults(handler=cmd_flow)

    scenario = sub.add_parser("scenario", parents=[common], help="Run a TOML scenario file")
    scenario.add_argument("file", help="Scenario file")
    scenario.set_defaults(handler=cmd_scenario)

    selftest = sub.add_parser("selftest", help="Run the catalog invariant suite")
    selftest.add_argument("--extended", action="store_true", help="Include the hyperbolic bundle suite")
    selftest.set_defaults(handler=cmd_selftest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main application function"""
    args = build_parser().parse_args(argv)
    try:
        Config.validate()
        if getattr(args, "seed", None) is None and args.command != "selftest":
            args.seed = None if args.command == "scenario" else 0
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except ValueError as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_CONFIG
    except (IntegrationError, ReportWriteError) as e:
        logger.error(f"Task failed: {e}")
        return EXIT_TASK


if __name__ == "__main__":
    sys.exit(main())
