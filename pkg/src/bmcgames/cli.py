"""Command-line front end.

Every subcommand takes ``--key value`` flags, optionally preloaded from a
``--config`` file of ``key = value`` lines (or a previous JSON artifact, whose
embedded config is reused). Flags override the file. Results are written as
JSON (single results) or CSV (grids and sweeps), atomically when a path is
given.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import __version__
from ._accel import default_workers
from .channels import (
    BinaryChannel,
    InputDistribution,
    Metric,
    MetricBank,
    aposteriori_metric,
    capacity,
    class_of,
    likelihood_metric,
    mutual_information,
    z_channel_capacity,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


class ConfigError(ValueError):
    pass


class IoError(OSError):
    pass


def _channel_list(text: str) -> List[Tuple[float, float]]:
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ValueError(f"channel {chunk!r} must be 'a,b'")
        pairs.append((float(parts[0]), float(parts[1])))
    if not pairs:
        raise ValueError("empty channel list")
    return pairs


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _metric_list(text: str) -> List[list]:
    data = json.loads(text)
    if data and not isinstance(data[0][0], list):
        data = [data]
    return data


def _bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    return parse


@dataclass(frozen=True)
class Param:
    parse: Callable
    default: object
    help: str


_BANK = {
    "bank": Param(str, "", "metric channels 'a,b;a,b' (likelihood or a posteriori metrics)"),
    "metrics": Param(str, "", "explicit 2x2 metric tables as JSON, '-inf' allowed"),
    "bank_kind": Param(_choice("likelihood", "aposteriori"), "likelihood", "metric built from each bank channel"),
}

SCHEMAS: Dict[str, Dict[str, Param]] = {
    "capacity": {
        "a": Param(float, 0.89, "W(0|0)"),
        "b": Param(float, 0.89, "W(1|1)"),
    },
    "imis": {
        "a": Param(float, 0.2, "true channel W(0|0)"),
        "b": Param(float, 0.3, "true channel W(1|1)"),
        "p0": Param(float, 0.5, "input probability of 0"),
        **_BANK,
        "oracle_points": Param(int, 0, "also run the brute-force oracle with this many points (0 = skip)"),
    },
    "alpha": {
        "p_grid": Param(int, 1025, "input-law grid size"),
        "channel_grid": Param(int, 512, "channel grid size per axis"),
        "delta": Param(float, 1e-3, "zero-information exclusion band half-width"),
        "refine_levels": Param(int, 2, "local refinement levels"),
        "refine_factor": Param(int, 10, "refinement factor per level"),
    },
    "beta": {
        "p0": Param(float, 0.5, "input probability of 0"),
        **_BANK,
        "channel_grid": Param(int, 256, "channel grid size per axis"),
        "delta": Param(float, 1e-3, "zero-information exclusion band half-width"),
    },
    "compound": {
        "channels": Param(str, "0.89,0.89;0.11,0.11", "compound set 'a,b;a,b'"),
        "p_tolerance": Param(float, 1e-12, "ternary-search tolerance on p0"),
    },
    "simulate": {
        "a": Param(float, 0.2, "true channel W(0|0)"),
        "b": Param(float, 0.3, "true channel W(1|1)"),
        "n": Param(int, 1024, "block length"),
        "rate": Param(_float_list, "0.15", "rate(s) in bits/symbol, comma separated"),
        "p0": Param(float, 0.5, "codeword symbol probability of 0"),
        "decoder": Param(_choice("ml", "gld", "glrt", "mmi"), "ml", "decoder"),
        **_BANK,
        "trials": Param(int, 10000, "Monte Carlo trials"),
        "seed": Param(int, 0, "root seed"),
        "mode": Param(_choice("auto", "explicit", "ensemble"), "auto", "explicit codebook or codebook ensemble"),
        "fixed_composition": Param(_bool, False, "constant-composition codewords"),
    },
    "verify": {
        "seed": Param(int, 7, "root seed for random instances"),
        "only": Param(int, 0, "run a single criterion by number (0 = all)"),
    },
}

# subcommands whose results can be written as CSV
CSV_CAPABLE = {"alpha", "beta", "simulate", "capacity", "compound", "imis"}


@dataclass
class RunConfig:
    subcommand: str
    parameters: Dict[str, object] = field(default_factory=dict)
    output_path: Optional[str] = None
    format: str = "json"

    def __post_init__(self):
        if self.subcommand not in SCHEMAS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        if self.format == "csv" and self.subcommand not in CSV_CAPABLE:
            raise ConfigError(f"{self.subcommand} has no CSV output")
        schema = SCHEMAS[self.subcommand]
        unknown = sorted(set(self.parameters) - set(schema))
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {self.subcommand}: {', '.join(unknown)}")
        resolved = {}
        for key, spec in schema.items():
            raw = self.parameters.get(key, spec.default)
            if isinstance(raw, list):  # already parsed, e.g. from an artifact
                raw = ",".join(repr(float(v)) for v in raw)
            try:
                resolved[key] = spec.parse(raw if spec.parse in (str, float, int) else str(raw))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
        self.parameters = resolved

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "parameters": {k: _jsonable(v) for k, v in self.parameters.items()},
            "format": self.format,
        }

    @classmethod
    def from_dict(cls, data: dict, output_path: Optional[str] = None) -> "RunConfig":
        params = dict(data.get("parameters", {}))
        return cls(data["subcommand"], params, output_path, data.get("format", "json"))


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "-inf" if value < 0 else "inf"
    return value


def load_config_file(path: str) -> Tuple[Optional[str], Dict[str, str]]:
    """Read ``key = value`` lines, or reuse the config embedded in an artifact."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from None
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        conf = data.get("config", data)
        params = {k: (",".join(repr(float(v)) for v in val) if isinstance(val, list) else str(val))
                  for k, val in conf.get("parameters", {}).items()}
        return conf.get("subcommand"), params
    params = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        params[key.strip().replace("-", "_")] = value.strip()
    return None, params


# ---------------------------------------------------------------- handlers

def _bank_from(params) -> MetricBank:
    P = InputDistribution(params.get("p0", 0.5))
    metrics: List[Metric] = []
    if params["bank"]:
        build = likelihood_metric if params["bank_kind"] == "likelihood" else (
            lambda W: aposteriori_metric(P, W))
        metrics.extend(build(BinaryChannel(a, b)) for a, b in _channel_list(params["bank"]))
    if params["metrics"]:
        for table in _metric_list(params["metrics"]):
            metrics.append(Metric.from_dict({"d": table}))
    if not metrics:
        raise ConfigError("a metric bank is required (--bank or --metrics)")
    return MetricBank(metrics)


def _run_capacity(p, workers):
    W = BinaryChannel(p["a"], p["b"])
    value, P = capacity(W)
    result = {"value": value, "input": P.to_dict(), "channel": W.to_dict(), "class": class_of(W).value}
    if W.a == 1.0 or W.b == 1.0:
        eps = 1.0 - (W.b if W.a == 1.0 else W.a)
        result["z_closed_form"] = z_channel_capacity(eps)
    return result, [result_row(result)]


def _run_imis(p, workers):
    from .mismatch import i_mis, i_mis_oracle

    P = InputDistribution(p["p0"])
    W0 = BinaryChannel(p["a"], p["b"])
    bank = _bank_from(p)
    res = i_mis(P, W0, bank)
    result = {**res.to_dict(), "mutual_information": mutual_information(P, W0), "bank": bank.to_dict()}
    if p["oracle_points"]:
        result["oracle"] = i_mis_oracle(P, W0, bank, p["oracle_points"])
    row = {k: result[k] for k in ("value", "achieved_by", "mutual_information")}
    return result, [row]


def _run_alpha(p, workers):
    from .games import alpha_game, ratio_grid

    res = alpha_game(p["p_grid"], p["channel_grid"], p["delta"], p["refine_levels"], p["refine_factor"],
                     workers=workers)
    a, b, r = ratio_grid(res.witness_input, p["channel_grid"], p["delta"], workers)
    return res.to_dict(), [{"a": x, "b": y, "ratio": z} for x, y, z in zip(a, b, r)]


def _run_beta(p, workers):
    from .games import beta_cells, beta_game

    bank = _bank_from(p)
    P = InputDistribution(p["p0"])
    res = beta_game(bank, P, p["channel_grid"], p["delta"], workers)
    a, b, r = beta_cells(bank, P, p["channel_grid"], p["delta"], workers)
    rows = [{"a": x, "b": y, "ratio": z} for x, y, z in zip(a, b, r)]
    return {**res.to_dict(), "bank": bank.to_dict()}, rows


def _run_compound(p, workers):
    from .games import ChannelSet, compound_capacity

    S = ChannelSet(tuple(BinaryChannel(a, b) for a, b in _channel_list(p["channels"])))
    res = compound_capacity(S, p["p_tolerance"])
    result = res.to_dict()
    return result, [{"value": res.value, "p0": res.witness_input.p0}]


def _run_simulate(p, workers):
    from .simulator import Decoder, simulate

    W0 = BinaryChannel(p["a"], p["b"])
    P = InputDistribution(p["p0"])
    if p["decoder"] == "ml":
        dec = Decoder.ml(W0)
    elif p["decoder"] == "mmi":
        dec = Decoder.mmi()
    elif p["decoder"] == "glrt":
        if not p["bank"]:
            raise ConfigError("glrt needs --bank channels")
        dec = Decoder.glrt([BinaryChannel(a, b) for a, b in _channel_list(p["bank"])])
    else:
        dec = Decoder.gld(_bank_from(p))
    reports = []
    rows = []
    for rate in p["rate"]:
        rep = simulate(W0, p["n"], rate, P, dec, p["trials"], p["seed"], p["fixed_composition"],
                       p["mode"], workers)
        reports.append({"rate": rate, **rep.to_dict()})
        rows.append({"rate": rate, "p_e_hat": rep.p_e_hat, "ci95_halfwidth": rep.ci95_halfwidth,
                     "errors": rep.errors, "trials": rep.trials, "mode": rep.mode})
    result = reports[0] if len(reports) == 1 else {"reports": reports}
    return result, rows


def _run_verify(p, workers):
    from .acceptance import format_table, run_criteria

    results = run_criteria(seed=p["seed"], only=p["only"] or None, workers=workers, stream=sys.stderr)
    sys.stdout.write(format_table(results) + "\n")
    payload = {"criteria": [r.to_dict() for r in results], "all_passed": all(r.passed for r in results)}
    return payload, None


HANDLERS = {
    "capacity": _run_capacity,
    "imis": _run_imis,
    "alpha": _run_alpha,
    "beta": _run_beta,
    "compound": _run_compound,
    "simulate": _run_simulate,
    "verify": _run_verify,
}


def result_row(result: dict) -> dict:
    return {k: v for k, v in result.items() if isinstance(v, (int, float, str))}


# ---------------------------------------------------------------- output

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, float) or hasattr(value, "__float__") and not isinstance(value, str):
        value = float(value)
        if math.isinf(value):
            return "-inf" if value < 0 else "inf"
        return format(value, ".12g")
    return str(value)


def render_csv(rows: Sequence[dict], config: RunConfig) -> str:
    buf = io.StringIO()
    buf.write("# config=" + json.dumps(config.to_dict(), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0].keys()) if rows else []
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[h]) for h in header])
    return buf.getvalue()


def render_json(result: dict, config: RunConfig, timestamp: Optional[str]) -> str:
    doc = {
        "tool": "bmcgames",
        "version": __version__,
        "config": config.to_dict(),
        "result": result,
    }
    if timestamp is not None:
        doc["timestamp"] = timestamp
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False, default=_json_default) + "\n"


def _json_default(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".bmcgames-", dir=directory)
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def run(config: RunConfig, workers: Optional[int] = None, timestamp: Optional[str] = "now") -> Tuple[int, str]:
    """Execute ``config``; returns (exit status, emitted text).

    ``timestamp="now"`` stamps the artifact with the current UTC time,
    ``None`` leaves the field out.
    """
    workers = default_workers() if workers is None else workers
    if timestamp == "now":
        timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    result, rows = HANDLERS[config.subcommand](config.parameters, workers)
    if config.format == "csv":
        text = render_csv(rows or [], config)
    else:
        text = render_json(result, config, timestamp)
    if config.output_path:
        write_atomic(config.output_path, text)
    status = EXIT_OK
    if config.subcommand == "verify" and not result["all_passed"]:
        status = EXIT_FAILED
    return status, text


def strip_timestamp(text: str) -> str:
    doc = json.loads(text)
    doc.pop("timestamp", None)
    return json.dumps(doc, sort_keys=True, indent=2)


# ---------------------------------------------------------------- argv

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bmcgames", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="file of 'key = value' lines or a previous JSON artifact")
        sp.add_argument("--output", "-o", help="write the artifact here (atomically)")
        sp.add_argument("--format", choices=["json", "csv"], default=None)
        sp.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: $BMCGAMES_WORKERS or 1)")
        sp.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
        for key, spec in schema.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=f"{spec.help} "
                            f"(default: {spec.default})")
    return parser


def config_from_argv(argv: Sequence[str]) -> Tuple[RunConfig, argparse.Namespace]:
    args = build_parser().parse_args(argv)
    params: Dict[str, object] = {}
    fmt = "json"
    if args.config:
        sub, file_params = load_config_file(args.config)
        if sub is not None and sub != args.subcommand:
            raise ConfigError(f"config is for {sub!r}, not {args.subcommand!r}")
        params.update(file_params)
    for key in SCHEMAS[args.subcommand]:
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    if args.format:
        fmt = args.format
    return RunConfig(args.subcommand, params, args.output, fmt), args


def _fail(kind: str, message: str, status: int) -> int:
    sys.stderr.write(json.dumps({"error": {"type": kind, "message": message}}) + "\n")
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config, args = config_from_argv(argv)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        status, text = run(config, args.workers, None if args.no_timestamp else "now")
    except IoError as exc:
        return _fail("IoError", str(exc), EXIT_IO)
    except (ConfigError, ValueError) as exc:
        return _fail(type(exc).__name__ if isinstance(exc, ConfigError) else "ConfigError", str(exc),
                     EXIT_CONFIG)
    if not config.output_path and config.subcommand != "verify":
        sys.stdout.write(text)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
