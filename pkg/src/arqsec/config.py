"""Experiment configuration: parsing, validation, canonical round trips.

Configs are flat INI documents: an [experiment] section naming the kind,
the mandatory master seed and the output path, plus a [params] section
typed per kind. Validation never fails fast; every violation is reported
at once and no partially constructed spec escapes. Each output CSV embeds
a canonical one-line form of its spec, and parsing that line back yields
a spec that reproduces the file byte for byte.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass
from typing import Any, Callable, Optional

RATE_CURVES = "RateCurves"
DUMB_ANTENNA = "DumbAntenna"
TEMPORAL_ADAPTATION = "TemporalAdaptation"
DELAY_LIMITED = "DelayLimited"
CROWN_SECRECY = "CrownSecrecy"
CROWN_ATTACK = "CrownAttack"

KINDS = (RATE_CURVES, DUMB_ANTENNA, TEMPORAL_ADAPTATION, DELAY_LIMITED,
         CROWN_SECRECY, CROWN_ATTACK)


class ConfigError(Exception):
    """Carries the full list of validation errors."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    master_seed: int
    output_path: str
    params: dict[str, Any]


@dataclass(frozen=True)
class _Field:
    name: str
    parse: Callable[[str], Any]
    required: bool = False
    default: Any = None
    check: Optional[Callable[[Any], Optional[str]]] = None


def _parse_int(text: str) -> int:
    return int(text)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_str(text: str) -> str:
    return text.strip()


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _probability(value: float) -> Optional[str]:
    if not 0.0 <= value <= 1.0:
        return f"must lie in [0, 1], got {value}"
    return None


def _unit_interval_list(values) -> Optional[str]:
    for v in values:
        if not 0.0 <= v <= 1.0:
            return f"must lie in [0, 1], got {v}"
    return None


def _positive(value) -> Optional[str]:
    if value <= 0:
        return f"must be positive, got {value}"
    return None


def _at_least(n):
    def check(value) -> Optional[str]:
        if value < n:
            return f"must be >= {n}, got {value}"
        return None

    return check


def _even_counts(values) -> Optional[str]:
    for v in values:
        if v < 2 or v % 2:
            return f"initialization counts must be even and >= 2, got {v}"
    return None


def _positive_list(values) -> Optional[str]:
    for v in values:
        if v <= 0:
            return f"must be positive, got {v}"
    return None


def _nonnegative_list(values) -> Optional[str]:
    for v in values:
        if v < 0:
            return f"must be nonnegative, got {v}"
    return None


def _width(value: int) -> Optional[str]:
    if value not in (24, 48):
        return f"width must be 24 or 48, got {value}"
    return None


def _attack_kind(value: str) -> Optional[str]:
    if value not in ("inject", "replay"):
        return f"attack must be 'inject' or 'replay', got {value!r}"
    return None


def _gain_model(value: str) -> Optional[str]:
    if value not in ("faded", "los"):
        return f"gains must be 'faded' or 'los', got {value!r}"
    return None


_GRID_FIELDS = [
    _Field("r0_max", _parse_float, default=10.0, check=_positive),
    _Field("r0_step", _parse_float, default=0.1, check=_positive),
    _Field("n_power", _parse_int, default=20, check=_at_least(1)),
]

SCHEMAS: dict[str, list[_Field]] = {
    RATE_CURVES: [
        _Field("snr_db", _parse_float_list, required=True),
        _Field("rc", _parse_float_list, default=(0.0,), check=_nonnegative_list),
        _Field("n_samples", _parse_int, default=100_000, check=_at_least(1000)),
        *_GRID_FIELDS,
    ],
    DUMB_ANTENNA: [
        _Field("n_antennas", _parse_int_list, required=True, check=_positive_list),
        _Field("snr_db", _parse_float, default=10.0),
        _Field("n_samples", _parse_int, default=100_000, check=_at_least(1000)),
        _Field("gains", _parse_str, default="faded", check=_gain_model),
        *_GRID_FIELDS,
    ],
    TEMPORAL_ADAPTATION: [
        _Field("alpha", _parse_float_list, required=True, check=_unit_interval_list),
        _Field("snr_db", _parse_float, default=10.0),
        _Field("frames", _parse_int, default=10_000, check=_at_least(1000)),
        _Field("n_seeds", _parse_int, default=50, check=_at_least(2)),
        _Field("burn_in", _parse_int, default=0, check=_at_least(0)),
        _Field("r0_max", _parse_float, default=10.0, check=_positive),
        _Field("r0_step", _parse_float, default=0.1, check=_positive),
    ],
    DELAY_LIMITED: [
        _Field("k", _parse_int_list, required=True, check=_positive_list),
        _Field("r0", _parse_float_list, required=True, check=_positive_list),
        _Field("snr_db", _parse_float_list, required=True),
        _Field("rc", _parse_float_list, default=(0.0,), check=_nonnegative_list),
        _Field("episodes", _parse_int, default=100_000, check=_at_least(1000)),
    ],
    CROWN_SECRECY: [
        _Field("gamma_ab", _parse_float, required=True, check=_probability),
        _Field("gamma_ba", _parse_float, required=True, check=_probability),
        _Field("gamma_ae", _parse_float, required=True, check=_probability),
        _Field("gamma_be", _parse_float, required=True, check=_probability),
        _Field("n_init", _parse_int_list, required=True, check=_even_counts),
        _Field("n_data", _parse_int, default=10_000, check=_at_least(1)),
        _Field("n_seeds", _parse_int, default=100, check=_at_least(2)),
        _Field("width", _parse_int, default=24, check=_width),
        _Field("trace_path", _parse_str, default=""),
    ],
    CROWN_ATTACK: [
        _Field("attack", _parse_str, required=True, check=_attack_kind),
        _Field("at_frame", _parse_int, default=50, check=_at_least(1)),
        _Field("n_data", _parse_int, default=200, check=_at_least(2)),
        _Field("n_sessions", _parse_int, default=10_000, check=_at_least(1)),
        _Field("n_init", _parse_int, default=10, check=_at_least(2)),
        _Field("gamma_ab", _parse_float, default=0.0, check=_probability),
        _Field("gamma_ba", _parse_float, default=0.0, check=_probability),
        _Field("gamma_ae", _parse_float, default=0.0, check=_probability),
        _Field("gamma_be", _parse_float, default=0.0, check=_probability),
        _Field("width", _parse_int, default=24, check=_width),
    ],
}


def validate(spec_text: str) -> ExperimentSpec:
    """Parse and fully validate a config document.

    Raises ConfigError carrying every violation found; never returns a
    partially constructed spec.
    """
    errors: list[str] = []
    parser = configparser.ConfigParser()
    try:
        parser.read_string(spec_text)
    except configparser.Error as exc:
        raise ConfigError([f"config syntax: {exc}"]) from exc

    if not parser.has_section("experiment"):
        raise ConfigError(["missing [experiment] section"])

    exp = parser["experiment"]
    kind = exp.get("kind", "").strip()
    if kind not in KINDS:
        errors.append(
            f"experiment.kind: unknown kind {kind!r} (expected one of {', '.join(KINDS)})"
        )

    master_seed = None
    if "master_seed" not in exp:
        errors.append(
            "experiment.master_seed: required; reproducibility forbids implicit entropy"
        )
    else:
        try:
            master_seed = int(exp["master_seed"])
        except ValueError:
            errors.append("experiment.master_seed: must be an integer")
        else:
            if not 0 <= master_seed < 2 ** 64:
                errors.append("experiment.master_seed: must fit in 64 bits")

    output_path = exp.get("output_path", "").strip()
    if not output_path:
        errors.append("experiment.output_path: required")

    params: dict[str, Any] = {}
    if kind in SCHEMAS:
        raw = dict(parser["params"]) if parser.has_section("params") else {}
        schema = SCHEMAS[kind]
        known = {f.name for f in schema}
        for name in raw:
            if name not in known:
                errors.append(f"params.{name}: unknown parameter for {kind}")
        for f in schema:
            if f.name not in raw:
                if f.required:
                    errors.append(f"params.{f.name}: required for {kind}")
                else:
                    params[f.name] = f.default
                continue
            try:
                value = f.parse(raw[f.name])
            except ValueError:
                errors.append(f"params.{f.name}: cannot parse {raw[f.name]!r}")
                continue
            if f.check is not None:
                problem = f.check(value)
                if problem:
                    errors.append(f"params.{f.name}: {problem}")
                    continue
            params[f.name] = value

    if errors:
        raise ConfigError(errors)
    return ExperimentSpec(kind=kind, master_seed=master_seed,
                          output_path=output_path, params=params)


def load(path: str) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return validate(fh.read())


def _format_value(value: Any) -> str:
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def metadata_line(spec: ExperimentSpec) -> str:
    """Canonical single-line embedding of the full spec and seed."""
    parts = [f"kind={spec.kind}", f"master_seed={spec.master_seed}",
             f"output_path={spec.output_path}"]
    for name in sorted(spec.params):
        parts.append(f"{name}={_format_value(spec.params[name])}")
    return "# arqsec " + " ".join(parts)


def spec_from_metadata(line: str) -> ExperimentSpec:
    """Rebuild a spec from a CSV metadata comment line."""
    if not line.startswith("# arqsec "):
        raise ConfigError(["not an arqsec metadata line"])
    tokens = line[len("# arqsec "):].split()
    fields = dict(tok.split("=", 1) for tok in tokens)
    kind = fields.pop("kind", "")
    seed = fields.pop("master_seed", "")
    output_path = fields.pop("output_path", "")
    buf = io.StringIO()
    buf.write("[experiment]\n")
    buf.write(f"kind = {kind}\nmaster_seed = {seed}\noutput_path = {output_path}\n")
    buf.write("[params]\n")
    for name, value in fields.items():
        buf.write(f"{name} = {value}\n")
    return validate(buf.getvalue())
