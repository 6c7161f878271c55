"""Command-line interface for the bibliographic connectivity pipeline."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from biblio_connectivity import __version__
from biblio_connectivity.config import NetworkKind
from biblio_connectivity.errors import PipelineError
from biblio_connectivity.pipeline import PipelineController
from biblio_connectivity.synth import fragmentation_config, load_synth_config, write_jsonl

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON configuration file")
    common.add_argument("--threads", type=int, help="Worker threads (default: all cores)")
    common.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity (default: INFO)",
    )
    common.add_argument("--log-file", type=Path, help="Also write log messages to this file")
    return common


def _add_record_inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--input", type=Path, nargs="+", required=True, help="Publication record file(s)"
    )
    parser.add_argument(
        "--format", choices=["jsonl", "tabular"], help="Input format (default: jsonl)"
    )


def _add_bundle_input(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", type=Path, required=True, help="Existing report bundle")


def _add_period_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--periods", help="Period set name or file for coupling networks")
    parser.add_argument("--text-periods", help="Period set name or file for text networks")


def _add_network_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--network",
        action="append",
        choices=[kind.value for kind in NetworkKind],
        help="Network kind to build; repeatable (default: all)",
    )


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per stage plus ``synth`` and ``run``."""
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="biblio-connectivity",
        description="Bibliographic coupling networks, percolation curves and indicators",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser("ingest", parents=[common], help="Parse publication records")
    _add_record_inputs(ingest)
    ingest.add_argument("--out", type=Path, help="Bundle directory")

    resolve = commands.add_parser(
        "resolve", parents=[common], help="Disambiguate references and authors"
    )
    _add_bundle_input(resolve)
    resolve.add_argument("--out", type=Path, help="Output bundle (default: the input bundle)")

    network = commands.add_parser("network", parents=[common], help="Build coupling networks")
    _add_bundle_input(network)
    _add_period_options(network)
    _add_network_option(network)
    network.add_argument("--out", type=Path, help="Output bundle (default: the input bundle)")

    percolate = commands.add_parser(
        "percolate", parents=[common], help="Sweep thresholds over built networks"
    )
    _add_bundle_input(percolate)
    _add_network_option(percolate)
    percolate.add_argument("--grid", type=Path, help="Threshold grid file, one value per line")
    percolate.add_argument("--out", type=Path, help="Output bundle (default: the input bundle)")

    indicators = commands.add_parser(
        "indicators", parents=[common], help="Price index and descriptive series"
    )
    _add_bundle_input(indicators)
    indicators.add_argument("--periods", help="Period set name or file")
    indicators.add_argument("--out", type=Path, help="Output bundle (default: the input bundle)")

    synth = commands.add_parser("synth", parents=[common], help="Generate a synthetic corpus")
    synth.add_argument(
        "--synth-config", type=Path, help="Generator config (default: fragmentation scenario)"
    )
    synth.add_argument("--seed", type=int, help="Random seed (overrides the generator config)")
    synth.add_argument("--out", type=Path, required=True, help="JSONL file to write")

    run = commands.add_parser("run", parents=[common], help="Run the full pipeline")
    _add_record_inputs(run)
    _add_period_options(run)
    _add_network_option(run)
    run.add_argument("--grid", type=Path, help="Threshold grid file, one value per line")
    run.add_argument("--out", type=Path, help="Bundle directory (default: ./bundle)")
    return parser


def setup_logging(level: str, log_file: Optional[Path] = None) -> None:
    """Log to stderr, and to ``log_file`` when given."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, level), format=LOG_FORMAT, handlers=handlers, force=True
    )


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Config overrides from CLI flags; flags left unset keep file or env values."""
    overrides: Dict[str, Any] = {"threads": args.threads}
    if args.command in ("ingest", "run"):
        overrides["inputs"] = args.input
        overrides["input_format"] = args.format
        overrides["out_dir"] = args.out
    for flag, field in (
        ("periods", "periods"),
        ("text_periods", "text_periods"),
        ("network", "networks"),
        ("grid", "grid_file"),
    ):
        overrides[field] = getattr(args, flag, None)
    return overrides


def _run_synth(args: argparse.Namespace) -> None:
    config = load_synth_config(args.synth_config) if args.synth_config else fragmentation_config()
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    data = write_jsonl(config, args.out)
    print(json.dumps({"seed": config.seed, "out": str(args.out), "bytes": len(data)}))


def _run_command(args: argparse.Namespace) -> None:
    if args.command == "synth":
        _run_synth(args)
        return

    controller = PipelineController(args.config, _overrides(args))
    if args.command == "run":
        controller.run()
        return
    if args.command == "ingest":
        out = controller.ingest()
        controller.finalize(out)
        return

    bundle: Path = args.input
    out: Path = args.out or bundle
    stage = {
        "resolve": controller.resolve,
        "network": controller.networks,
        "percolate": controller.percolate,
        "indicators": controller.indicators,
    }[args.command]
    stage(bundle, out)
    controller.finalize(out, source=bundle)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_file)

    try:
        _run_command(args)
    except PipelineError as e:
        logger.error(f"{e.stage} failed: {e.message}")
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return e.code
    except Exception as e:
        logger.exception(f"Fatal error: {e}")
        print(
            json.dumps({"stage": "pipeline", "code": 1, "message": str(e)}), file=sys.stderr
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
