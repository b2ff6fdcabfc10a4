"""Command-line front end: ``zwmsim <subcommand> [--config PATH] [--out DIR] [--set key=value ...]``."""

from __future__ import annotations

import argparse
import ast
import math
import operator
import sys
from dataclasses import fields
from pathlib import Path
from typing import Sequence

from . import __version__
from .experiments import (
    ConfigError,
    ExperimentConfig,
    coincidence_curve,
    kcbs_sweep_alpha,
    kcbs_sweep_t,
    three_box_report,
    visibility_curve,
    zwm2_rate,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

SUBCOMMANDS = {
    "visibility": visibility_curve,
    "coincidence": coincidence_curve,
    "three-box": three_box_report,
    "kcbs-alpha": kcbs_sweep_alpha,
    "kcbs-t": kcbs_sweep_t,
    "zwm2-rate": zwm2_rate,
}

# config key -> (ExperimentConfig field, kind)
_KEYS = {
    "topology": ("topology", "str"),
    "g": ("g", "float"),
    "alpha": ("alpha_p", "float"),
    "order": ("order", "int"),
    "aligned": ("aligned", "bool"),
    "t": ("t", "float"),
    "phi_grid": ("phi_grid", "grid"),
    "t_grid": ("t_grid", "grid"),
    "alpha_grid": ("alpha_grid", "grid"),
    "max_photons": ("max_photons", "int"),
    "prune_epsilon": ("prune_epsilon", "float"),
    "workers": ("workers", "int"),
    "loss_tolerance": ("loss_tolerance", "float"),
    "collect_loss": ("collect_loss", "bool"),
}

DEFAULTS_HELP = """\
configuration keys (flat `key = value` file, `#` starts a comment):
  topology        zwm3        zwm2 or zwm3 (zwm2-rate always uses zwm2)
  g               1.0         nonlinear coupling
  alpha           0.2         pump amplitude before splitting
  order           per command regime order K: visibility 3, coincidence 3,
                              kcbs-alpha 3, kcbs-t 1, three-box 1, zwm2-rate 1
  aligned         true        idler link present (false: separate idlers)
  t               1.0         amplitude transmissivity of the idler link
  phi_grid        0:2*pi:pi/60
  t_grid          0:1:0.05
  alpha_grid      0.05:0.5:0.05
  max_photons     12          hard photon-number bound
  prune_epsilon   1e-14       drop amplitudes below this modulus
  workers         1           worker processes for grid sweeps
  loss_tolerance  1e-6        truncation loss above this exits with code 2
  collect_loss    true        KCBS idler detectors also cover the link's loss port

grids are `lo:hi:step` (inclusive) or comma-separated values; `pi` is allowed.
exit codes: 0 ok, 1 usage or configuration error, 2 truncation loss too large.
"""

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval_number(text: str) -> float:
    """Evaluate a numeric literal or simple arithmetic with ``pi``."""

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = walk(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        raise ValueError(f"unsupported expression {text!r}")

    return walk(ast.parse(text.strip(), mode="eval"))


def _parse_grid(text: str) -> tuple[float, ...]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("grid needs lo:hi:step")
        lo, hi, step = (_eval_number(p) for p in parts)
        if step <= 0 or hi < lo:
            raise ValueError("grid needs step > 0 and hi >= lo")
        n = int(math.floor((hi - lo) / step + 1e-9))
        return tuple(round(lo + k * step, 12) for k in range(n + 1))
    return tuple(_eval_number(p) for p in text.split(",") if p.strip())


def _parse_value(key: str, text: str):
    kind = _KEYS[key][1]
    text = text.strip()
    if kind == "str":
        return text
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind == "int":
        if text.lower() in ("default", "none"):
            return None
        return int(text)
    if kind == "float":
        return _eval_number(text)
    return _parse_grid(text)


def _split_assignment(line: str, origin: str) -> tuple[str, str]:
    if "=" not in line:
        raise ConfigError(origin, f"expected `key = value`, got {line!r}")
    key, value = line.split("=", 1)
    key = key.strip()
    if key not in _KEYS:
        raise ConfigError(key, "unknown configuration key")
    return key, value


def parse_config(path: str | Path | None, overrides: Sequence[str] = ()) -> ExperimentConfig:
    """Read a flat key-value file, apply ``key=value`` overrides, validate."""
    raw: dict[str, str] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError("config", f"no such file: {path}")
        for lineno, line in enumerate(path.read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if line:
                key, value = _split_assignment(line, f"line {lineno}")
                raw[key] = value
    for item in overrides:
        key, value = _split_assignment(item, "--set")
        raw[key] = value
    kwargs = {}
    for key, text in raw.items():
        try:
            kwargs[_KEYS[key][0]] = _parse_value(key, text)
        except (ValueError, SyntaxError) as exc:
            raise ConfigError(key, str(exc)) from None
    names = {f.name for f in fields(ExperimentConfig)}
    assert set(kwargs) <= names
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError as exc:
        # report under the file key rather than the dataclass field name
        field_to_key = {v[0]: k for k, v in _KEYS.items()}
        raise ConfigError(field_to_key.get(exc.key, exc.key), str(exc).split(": ", 1)[-1]) from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="zwmsim",
        description="Truncated Fock-space simulation of multi-crystal path-identity interferometers.",
        epilog=DEFAULTS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"zwmsim {__version__}")
    parser.add_argument("subcommand", choices=sorted(SUBCOMMANDS), help="experiment to run")
    parser.add_argument("--config", metavar="PATH", help="configuration file (defaults if omitted)")
    parser.add_argument("--out", metavar="DIR", default=".", help="output directory (default: .)")
    parser.add_argument(
        "--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides", help="override a key; repeatable"
    )
    parser.add_argument("--seedless", action="store_true", help="accepted for compatibility; runs are always deterministic")
    return parser


def run(subcommand: str, config: ExperimentConfig, out_dir: str | Path) -> int:
    out = Path(out_dir)
    table = SUBCOMMANDS[subcommand](config)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{subcommand}.csv").write_text(table.to_csv())
        (out / f"{subcommand}.meta").write_text(table.meta_text())
    except OSError as exc:
        print(f"zwmsim: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    loss = float(table.metadata["max_truncation_loss"])
    if loss > config.loss_tolerance:
        print(f"zwmsim: truncation loss {loss:.3e} exceeds tolerance {config.loss_tolerance:.1e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"zwmsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(args.subcommand, config, args.out)


if __name__ == "__main__":
    sys.exit(main())
