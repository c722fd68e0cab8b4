#!/usr/bin/env python3
"""
Claims reserving CLI: classical log-Poisson and hybrid fuzzy least-squares fits.

Subcommands:
  fit-classical   Poisson GLM (or log-scale LS), dispersion test, crisp reserve
  fit-hybrid      full pipeline: GLM -> adjusted residuals -> fuzzification ->
                  fuzzy least squares -> fuzzy reserve -> defuzzified reserve
  compare         both models side by side with the R²_F vs R² verdict

Settings can be set via:
  1. CLI flags (highest priority)
  2. pyproject.toml [tool.hybrid-reserve] section (--config flag or ./pyproject.toml)
  3. Built-in defaults (lowest priority)

Exit codes: 0 success, 1 usage, 2 data validation, 3 numerical failure
(non-convergence of the fuzzy fit only counts as failure with --strict).
"""

import argparse
import logging
import os
import sys
import tomllib
from dataclasses import asdict, dataclass
from pathlib import Path

from classical_glm import (
    ClassicalFit,
    dispersion_test,
    fit_least_squares,
    fit_mle,
    residuals,
)
from errors import ConfigError, NotConverged, PiOutOfRange, ReservingError, ZeroVariance
from hybrid_fls import (
    ConvergenceOptions,
    fit_hybrid,
    fuzzify,
    predict_fuzzy,
    total_reserve,
)
from report import (
    build_metadata,
    classical_section,
    comparison_section,
    hybrid_section,
    intermediates_section,
    render_json,
    render_text,
    write_csv,
)
from triangle import RunOffTriangle, build_design_matrix, parse_triangle

__version__ = "0.1.0"

logger = logging.getLogger("reserve")

# ---------------------------------------------------------------------------
# Defaults: override via CLI flags or pyproject.toml [tool.hybrid-reserve]
# ---------------------------------------------------------------------------
DEFAULT_PI = 1.0  # maximum risk aversion
DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 200_000
DEFAULT_FORMAT = "json"
DEFAULT_ESTIMATOR = "mle"

OUTPUT_DIR_ENV = "HYBRID_RESERVE_OUTPUT_DIR"
FORMATS = ("json", "csv", "text")
ESTIMATORS = {"mle": "mle", "ls": "least-squares", "least-squares": "least-squares"}
REPORT_SUFFIX = {"json": ".json", "text": ".md"}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class RunConfig:
    input_path: Path
    pi: float = DEFAULT_PI
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    output_format: str = DEFAULT_FORMAT
    estimator: str = DEFAULT_ESTIMATOR
    emit_intermediates: bool = False
    strict: bool = False
    output_dir: Path | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.pi <= 1.0:
            raise PiOutOfRange(f"pi must lie in [0, 1], got {self.pi}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"unknown format {self.output_format!r}; choose from {FORMATS}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}; choose mle or ls")
        object.__setattr__(self, "estimator", ESTIMATORS[self.estimator])

    def echo(self) -> dict:
        """Config as echoed in report metadata (paths as strings)."""
        out = asdict(self)
        out["input_path"] = str(self.input_path)
        out["output_dir"] = None if self.output_dir is None else str(self.output_dir)
        return out


def load_pyproject_config(config_path: str | None) -> dict:
    """
    Read the [tool.hybrid-reserve] section from pyproject.toml. Returns an
    empty dict if the file is missing, malformed, or has no such section.
    """
    path = Path(config_path) if config_path is not None else Path.cwd() / "pyproject.toml"
    if not path.exists():
        return {}
    try:
        with path.open("rb") as f:
            data = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError):
        return {}

    section = data.get("tool", {}).get("hybrid-reserve", {})
    casts = {"pi": float, "tol": float, "max_iter": int, "format": str, "estimator": str}
    result: dict = {}
    for key, cast in casts.items():
        if key in section:
            try:
                result[key] = cast(section[key])
            except (TypeError, ValueError) as e:
                raise ConfigError(f"[tool.hybrid-reserve] {key} = {section[key]!r}: {e}") from e
    return result


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_pyproject_config(args.config)

    def resolve(cli_val, cfg_key: str, default):
        if cli_val is not None:
            return cli_val
        return cfg.get(cfg_key, default)

    output_dir = args.output_dir or os.environ.get(OUTPUT_DIR_ENV) or None
    return RunConfig(
        input_path=Path(args.input),
        pi=resolve(args.pi, "pi", DEFAULT_PI),
        tol=resolve(args.tol, "tol", DEFAULT_TOL),
        max_iter=resolve(args.max_iter, "max_iter", DEFAULT_MAX_ITER),
        output_format=resolve(args.format, "format", DEFAULT_FORMAT),
        estimator=resolve(args.estimator, "estimator", DEFAULT_ESTIMATOR),
        emit_intermediates=args.emit_intermediates,
        strict=args.strict,
        output_dir=Path(output_dir) if output_dir else None,
    )


# ---------------------------------------------------------------------------
# Pipeline stages
# ---------------------------------------------------------------------------
def _load(cfg: RunConfig) -> tuple[RunOffTriangle, dict]:
    raw = cfg.input_path.read_bytes()
    t = parse_triangle(raw.decode("utf-8-sig"))
    return t, {"metadata": build_metadata(cfg.input_path, raw, __version__, cfg.echo())}


def _classical_fit(t: RunOffTriangle, cfg: RunConfig) -> ClassicalFit:
    return fit_mle(t) if cfg.estimator == "mle" else fit_least_squares(t)


def _classical(t: RunOffTriangle, cfg: RunConfig) -> dict:
    fit = _classical_fit(t, cfg)
    dispersion = None
    if cfg.estimator == "mle":
        try:
            dispersion = dispersion_test(t, fit)
        except ZeroVariance as e:
            logger.warning("overdispersion test skipped: %s", e)
    return classical_section(t, fit, dispersion)


def _hybrid(t: RunOffTriangle, cfg: RunConfig) -> tuple[dict, dict | None, bool]:
    # Fuzzification always uses the Poisson MLE residuals.
    mle = fit_mle(t)
    res = residuals(t, mle)
    ft = fuzzify(t, res)
    fit = fit_hybrid(ft, build_design_matrix(t), ConvergenceOptions(cfg.tol, cfg.max_iter))
    reserve = total_reserve(predict_fuzzy(fit, t), cfg.pi)
    extra = intermediates_section(res, ft, fit) if cfg.emit_intermediates else None
    return hybrid_section(t, fit, reserve), extra, fit.converged


def cmd_fit_classical(cfg: RunConfig) -> tuple[dict, bool]:
    t, report = _load(cfg)
    report["classical"] = _classical(t, cfg)
    return report, True


def cmd_fit_hybrid(cfg: RunConfig) -> tuple[dict, bool]:
    t, report = _load(cfg)
    report["hybrid"], extra, converged = _hybrid(t, cfg)
    if extra is not None:
        report["intermediates"] = extra
    return report, converged


def cmd_compare(cfg: RunConfig) -> tuple[dict, bool]:
    t, report = _load(cfg)
    report["classical"] = _classical(t, cfg)
    report["hybrid"], extra, converged = _hybrid(t, cfg)
    if extra is not None:
        report["intermediates"] = extra
    report["comparison"] = comparison_section(report["classical"], report["hybrid"])
    return report, converged


COMMANDS = {
    "fit-classical": cmd_fit_classical,
    "fit-hybrid": cmd_fit_hybrid,
    "compare": cmd_compare,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------
def emit(report: dict, cfg: RunConfig, command: str) -> None:
    if cfg.output_format == "csv":
        out_dir = cfg.output_dir or Path.cwd()
        for path in write_csv(report, out_dir):
            print(f"CSV table written to {path}")
        return

    text = render_json(report) if cfg.output_format == "json" else render_text(report)
    if cfg.output_dir is not None:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        path = cfg.output_dir / f"{command}{REPORT_SUFFIX[cfg.output_format]}"
        path.write_text(text)
        logger.info("report written to %s", path)
    sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Main
# ---------------------------------------------------------------------------
class _ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="Run-off triangle CSV")
    common.add_argument("--pi", type=float, default=None, help="Risk aversion in [0, 1]")
    common.add_argument("--tol", type=float, default=None, help="FLS parameter-change tolerance")
    common.add_argument("--max-iter", type=int, default=None, help="FLS sweep cap")
    common.add_argument("--format", choices=FORMATS, default=None)
    common.add_argument("--estimator", choices=("mle", "ls"), default=None)
    common.add_argument(
        "--strict",
        action="store_true",
        help="Exit 3 if the fuzzy least-squares fit hits --max-iter",
    )
    common.add_argument(
        "--emit-intermediates",
        action="store_true",
        help="Include residuals, fuzzified triangle and objective trace in the report",
    )
    common.add_argument(
        "--config",
        default=None,
        help="Path to pyproject.toml to read [tool.hybrid-reserve] settings from",
    )
    common.add_argument(
        "--output-dir",
        default=None,
        help=f"Write reports/CSV tables here (default: ${OUTPUT_DIR_ENV})",
    )
    common.add_argument("--verbose", action="store_true", help="Log progress to stderr")

    parser = _ArgumentParser(prog="reserve", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="[%(name)s] %(levelname)s: %(message)s",
        force=True,
    )

    try:
        cfg = resolve_config(args)
        report, converged = COMMANDS[args.command](cfg)
        emit(report, cfg, args.command)
    except FileNotFoundError as e:
        print(f"error: input file not found: {e.filename}", file=sys.stderr)
        return 1
    except UnicodeDecodeError as e:
        print(f"error: input is not UTF-8 text: {e}", file=sys.stderr)
        return 2
    except ReservingError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code

    if not converged and cfg.strict:
        err = NotConverged(f"fuzzy least squares did not converge within {cfg.max_iter} sweeps")
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return err.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
