import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import yaml

from torvan.errors import InputError, TorvanError
from torvan.modules.catalog import parse_module
from torvan.reportexport import VALID_OUTPUT_FORMATS, exportreport
from torvan.runmodes.certify import certifyreport
from torvan.runmodes.kunneth import default_factors, kunnethreport
from torvan.runmodes.tor import cereport, torreport
from torvan.runmodes.transition import transitionreport
from torvan.runmodes.validate import validatereport
from torvan.scalars import FieldSpec
from torvan.version import __version__

LOGGER = logging.getLogger("torvan")

DEFAULT_CONFIG_LOCATION = Path(__file__).parent.joinpath("data/config/torvan-config.yaml")

VALID_COMMANDS = [
    "validate",
    "tor",
    "ce",
    "transition-check",
    "certify",
    "kunneth-check",
]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def get_config_args(argv=None):
    # Define the parser
    parser = argparse.ArgumentParser(
        prog="torvan",
        description="Exact Koszul homology and colimit vanishing certificates",
    )
    parser.add_argument(
        "command",
        action="store",
        type=str,
        choices=VALID_COMMANDS,
        help="Command to run",
    )
    parser.add_argument(
        "--config-file",
        action="store",
        type=str,
        default=DEFAULT_CONFIG_LOCATION,
        help="Path to Configuration File",
    )
    parser.add_argument(
        "--field",
        action="store",
        type=str,
        help="Coefficient field: q or fp:<p>",
    )
    parser.add_argument(
        "--output",
        action="store",
        type=str,
        choices=VALID_OUTPUT_FORMATS,
        help="Report format",
    )
    parser.add_argument(
        "--ambient",
        action="store",
        type=int,
        help="Number of variables N of the tower",
    )
    parser.add_argument(
        "--level",
        action="store",
        type=int,
        help="Level n of the tower",
    )
    parser.add_argument(
        "--module",
        action="store",
        type=str,
        help="Module name (subset:n, quotient:N:n, trivial:N, dual:..., products with *) or JSON file",
    )
    parser.add_argument(
        "--degrees",
        action="store",
        type=str,
        help="all or a single degree j",
    )
    parser.add_argument(
        "--export-file",
        action="store",
        type=str,
        help="Write the report to this file instead of standard output",
    )
    parser.add_argument(
        "--workers",
        action="store",
        type=int,
        help="Processes used for the per-level homology in certify",
    )
    parser.add_argument(
        "--debug-logging",
        action="store_true",
        help="Enables Debug Level Logging",
    )
    parser.add_argument(
        "--info-logging",
        action="store_true",
        help="Enables Info Level Logging. Superseded by debug-logging",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    args = parser.parse_args(argv)

    return args


def configure_logging(debug_logging: bool = False, info_logging: bool = False):
    ch = logging.StreamHandler(sys.stderr)
    ch.setLevel(logging.DEBUG)

    if debug_logging:
        LOGGER.setLevel(logging.DEBUG)
    elif info_logging:
        LOGGER.setLevel(logging.INFO)
    else:
        LOGGER.setLevel(logging.WARNING)
    log_formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    ch.setFormatter(log_formatter)

    # make sure all other log handlers are removed before adding it back
    for handler in list(LOGGER.handlers):
        LOGGER.removeHandler(handler)
    LOGGER.addHandler(ch)


def load_settings(config_file: Path) -> dict:
    try:
        with open(config_file, "r", encoding="utf-8") as cf:
            config_settings = yaml.safe_load(cf) or {}
    except OSError as e:
        raise InputError(f"Cannot read configuration file {config_file}: {e}") from e
    except yaml.YAMLError as e:
        raise InputError(f"Configuration file {config_file} is not valid YAML: {e}") from e
    if not isinstance(config_settings, dict):
        raise InputError(f"Configuration file {config_file} must hold a mapping")
    return config_settings


@dataclass(frozen=True)
class RunConfig:
    command: str
    field: FieldSpec
    output: str = "table"
    ambient: int = 4
    level: int = 0
    module: str | None = None
    degree: int | None = None
    export_file: Path | None = None
    workers: int = 1
    max_ambient: int = 12
    crosscheck_prime: int = 1009
    dense_fallback_limit: int = 64

    def __post_init__(self):
        if self.command not in VALID_COMMANDS:
            raise InputError(f"Command {self.command} is not valid. Valid commands are {VALID_COMMANDS}")
        if self.output not in VALID_OUTPUT_FORMATS:
            raise InputError(f"Output {self.output} is not valid. Valid formats are {VALID_OUTPUT_FORMATS}")
        if not 0 <= self.ambient <= self.max_ambient:
            raise InputError(f"Ambient {self.ambient} must lie in 0..{self.max_ambient}")
        if self.level < 0 or self.level > self.ambient:
            raise InputError(f"Level {self.level} must lie in 0..{self.ambient}")
        if self.command in ("certify", "transition-check") and self.ambient < 1:
            raise InputError(f"{self.command} needs --ambient >= 1")
        if self.command == "transition-check" and self.level >= self.ambient:
            raise InputError(f"transition-check needs --level < --ambient ({self.ambient})")
        if self.degree is not None and self.degree < 0:
            raise InputError("Degrees must be non-negative")
        if self.workers < 1:
            raise InputError("--workers must be at least 1")
        if self.dense_fallback_limit < 0:
            raise InputError("linalg.dense-fallback-limit must be non-negative")
        FieldSpec.prime(self.crosscheck_prime)

    @property
    def module_name(self) -> str:
        if self.module:
            return self.module
        if self.command == "kunneth-check":
            return default_factors(self.ambient, self.level)
        return f"quotient:{self.ambient}:{self.level}"


def _parse_degrees(text) -> int | None:
    text = str(text).strip().lower()
    if text == "all":
        return None
    if not text.isdigit():
        raise InputError(f"--degrees takes all or a non-negative integer, got {text!r}")
    return int(text)


def build_run_config(config_args, config_settings: dict) -> RunConfig:
    """Command-line flags override the YAML defaults."""
    defaults = config_settings.get("defaults", {})

    def pick(flag, key, fallback):
        value = getattr(config_args, flag)
        return value if value is not None else defaults.get(key, fallback)

    try:
        return RunConfig(
            command=config_args.command,
            field=FieldSpec.parse(str(pick("field", "field", "q"))),
            output=str(pick("output", "output", "table")),
            ambient=int(pick("ambient", "ambient", 4)),
            level=int(pick("level", "level", 0)),
            module=config_args.module,
            degree=_parse_degrees(pick("degrees", "degrees", "all")),
            export_file=Path(config_args.export_file).absolute() if config_args.export_file else None,
            workers=int(
                config_args.workers
                if config_args.workers is not None
                else config_settings.get("certify", {}).get("workers", 1)
            ),
            max_ambient=int(config_settings.get("limits", {}).get("max-ambient", 12)),
            crosscheck_prime=int(config_settings.get("crosscheck", {}).get("prime", 1009)),
            dense_fallback_limit=int(
                config_settings.get("linalg", {}).get("dense-fallback-limit", 64)
            ),
        )
    except (TypeError, ValueError, AttributeError) as e:
        raise InputError(f"Invalid configuration value: {e}") from e


def build_report(config: RunConfig) -> dict:
    dense_limit = config.dense_fallback_limit
    match config.command:
        case "validate":
            return validatereport(parse_module(config.module_name, config.field))
        case "tor":
            return torreport(parse_module(config.module_name, config.field), config.degree, dense_limit)
        case "ce":
            return cereport(parse_module(config.module_name, config.field), config.degree, dense_limit)
        case "transition-check":
            return transitionreport(config.ambient, config.level, config.field, dense_limit)
        case "certify":
            return certifyreport(config.ambient, config.field, config.workers, dense_limit)
        case "kunneth-check":
            return kunnethreport(config.module_name, config.field, config.crosscheck_prime, dense_limit)


def _report_error(e: TorvanError):
    print(f"torvan: error: {e}", file=sys.stderr)
    witness = getattr(e, "witness", None)
    if witness is not None:
        rendered = {str(k): str(v) for k, v in witness.items()} if isinstance(witness, dict) else str(witness)
        print(f"torvan: witness: {json.dumps(rendered, sort_keys=True)}", file=sys.stderr)


def run(config: RunConfig) -> int:
    LOGGER.debug(f"Run configuration - {config}")

    try:
        report = build_report(config)
        exportreport(report, config.output, config.export_file)
    except TorvanError as e:
        LOGGER.debug("Run aborted", exc_info=True)
        _report_error(e)
        return EXIT_USAGE

    if report["status"] == "fail":
        LOGGER.warning(f"{config.command} found a failed check")
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main(argv=None):
    assert sys.version_info >= (3, 12)

    config_args = get_config_args(argv)

    configure_logging(
        debug_logging=config_args.debug_logging, info_logging=config_args.info_logging
    )

    LOGGER.debug(f"Configuration Arguments - {config_args}")

    try:
        config_settings = load_settings(Path(config_args.config_file).absolute())
        config = build_run_config(config_args, config_settings)
    except TorvanError as e:
        _report_error(e)
        sys.exit(EXIT_USAGE)

    sys.exit(run(config))


if __name__ == "__main__":
    main()
