"""Machine-readable forms of corrections, plus run configuration parsing."""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .diagrams import ModelSpec
from .effective import MAX_ORDER, EffectiveCorrection
from .errors import ConfigError
from .numerics import FockConfig
from .opalg import BosonicMonomial, OperatorExpr, Scalar

__all__ = [
    "RunConfig",
    "parse_config",
    "load_config",
    "fmt_float",
    "term_records",
    "expr_from_records",
    "correction_to_dict",
    "correction_from_dict",
    "correction_to_json",
    "correction_to_text",
    "correction_to_csv",
]

FORMATS = ("json", "csv", "text")

_RATIONAL = re.compile(r"^[+-]?\d+(?:/\d+)?$")
_DECIMAL = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")

_ALIASES = {
    "omega_e": "model.omega_e",
    "omega_c": "model.omega_c",
    "lambda": "model.lambda",
    "lam": "model.lambda",
    "model.lam": "model.lambda",
    "model": "model.kind",
    "model.type": "model.kind",
    "rwa": "model.rwa",
    "order": "expansion.order",
    "n_max": "numerics.n_max",
    "leakage_tolerance": "numerics.leakage_tolerance",
    "format": "output.format",
    "out": "output.path",
    "path": "output.path",
    "delta": "opspace.delta",
    "dressed": "opspace.dressed",
}
_KNOWN = {
    "model.omega_e",
    "model.omega_c",
    "model.lambda",
    "model.kind",
    "model.rwa",
    "expansion.order",
    "numerics.n_max",
    "numerics.leakage_tolerance",
    "output.format",
    "output.path",
    "opspace.delta",
    "opspace.dressed",
}


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec = field(default_factory=lambda: ModelSpec(1, Fraction(1, 3), Fraction(3, 100)))
    order: int = 2
    numerics: FockConfig = field(default_factory=FockConfig)
    output_format: str = "json"
    output_path: str | None = None
    delta: Fraction | None = None
    dressed: bool = True


def _frequency(key: str, raw: str) -> Fraction:
    if not _RATIONAL.match(raw):
        raise ConfigError(f"{key}: expected an exact rational such as 1 or 1/3, got {raw!r}")
    try:
        value = Fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    if value <= 0:
        raise ConfigError(f"{key}: must be positive")
    return value


def _real(key: str, raw: str, *, allow_negative: bool = False) -> Fraction:
    if not (_RATIONAL.match(raw) or _DECIMAL.match(raw)):
        raise ConfigError(f"{key}: expected a number, got {raw!r}")
    try:
        value = Fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    if value < 0 and not allow_negative:
        raise ConfigError(f"{key}: must be non-negative")
    return value


def _integer(key: str, raw: str, lo: int, hi: int | None = None) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if value < lo or (hi is not None and value > hi):
        bound = f"{lo}..{hi}" if hi is not None else f"≥ {lo}"
        raise ConfigError(f"{key}: {value} outside {bound}")
    return value


def _boolean(key: str, raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def parse_config(text: str, *, max_order: int | None = MAX_ORDER) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Frequencies must be exact rationals. The coupling accepts decimals.

    Raises
    ------
    ConfigError
        On syntax errors, unknown keys or out-of-range values.
    """
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key.lower(), key.lower())
        if key not in _KNOWN:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key}")
        raw[key] = value

    defaults = RunConfig()
    omega_e = _frequency("omega_e", raw["model.omega_e"]) if "model.omega_e" in raw else defaults.model.omega_e
    omega_c = _frequency("omega_c", raw["model.omega_c"]) if "model.omega_c" in raw else defaults.model.omega_c
    lam = _real("lambda", raw["model.lambda"]) if "model.lambda" in raw else defaults.model.lam
    rwa = False
    if "model.kind" in raw:
        kind = raw["model.kind"].lower()
        if kind not in ("rabi", "jc", "rwa"):
            raise ConfigError(f"model: expected rabi or jc, got {kind!r}")
        rwa = kind != "rabi"
    if "model.rwa" in raw:
        rwa = _boolean("rwa", raw["model.rwa"])
    order = defaults.order
    if "expansion.order" in raw:
        order = _integer("order", raw["expansion.order"], 0, max_order)
    n_max = _integer("n_max", raw["numerics.n_max"], 1) if "numerics.n_max" in raw else defaults.numerics.n_max
    tol = defaults.numerics.leakage_tolerance
    if "numerics.leakage_tolerance" in raw:
        tol = float(_real("leakage_tolerance", raw["numerics.leakage_tolerance"]))
        if tol <= 0:
            raise ConfigError("leakage_tolerance: must be positive")
    fmt = raw.get("output.format", defaults.output_format).lower()
    if fmt not in FORMATS:
        raise ConfigError(f"format: expected one of {', '.join(FORMATS)}, got {fmt!r}")
    delta = _real("delta", raw["opspace.delta"], allow_negative=True) if "opspace.delta" in raw else None
    dressed = _boolean("dressed", raw["opspace.dressed"]) if "opspace.dressed" in raw else True
    return RunConfig(
        ModelSpec(omega_e, omega_c, lam, rwa),
        order,
        FockConfig(n_max, tol),
        fmt,
        raw.get("output.path"),
        delta,
        dressed,
    )


def load_config(path: str | Path, **kw) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config {path} is not UTF-8") from exc
    return parse_config(text, **kw)


# -- corrections -----------------------------------------------------------


def fmt_float(x: float) -> str:
    # adding 0.0 maps -0.0 to 0.0 so equal outputs print identically
    return "%.12g" % (float(x) + 0.0)


def _coeff_fields(v: Scalar) -> dict:
    return {
        "coeff": str(v),
        "coeff_num": v.re.numerator,
        "coeff_den": v.re.denominator,
        "coeff_im_num": v.im.numerator,
        "coeff_im_den": v.im.denominator,
    }


def term_records(expr: OperatorExpr) -> list[dict]:
    """One record per term of the Pauli view (atomic ∈ {1, σz, σ+, σ-})."""
    out = []
    for lp, label, m, n, v in expr.pauli_terms():
        rec = {
            "atomic_label": label,
            "atomic": label,
            "bosonic": [{"m": m, "n": n, "weight": 1}],
            "bosonic_label": BosonicMonomial(m, n).label,
            **_coeff_fields(v),
            "lambda_power": lp,
            "omega_power": 1 - lp,
            "sqrt_factor": 1,
        }
        out.append(rec)
    return out


def expr_from_records(records: list[dict]) -> OperatorExpr:
    """Inverse of :func:`term_records`."""
    terms = []
    for rec in records:
        v = Scalar(
            Fraction(rec["coeff_num"], rec["coeff_den"]),
            Fraction(rec["coeff_im_num"], rec["coeff_im_den"]),
        )
        for mono in rec["bosonic"]:
            terms.append((rec["lambda_power"], rec["atomic_label"], mono["m"], mono["n"], v * mono["weight"]))
    return OperatorExpr.from_pauli(terms)


def _model_dict(model: ModelSpec) -> dict:
    return {
        "kind": model.name,
        "omega_e": str(model.omega_e),
        "omega_c": str(model.omega_c),
        "lambda": str(model.lam),
    }


def correction_to_dict(corr: EffectiveCorrection, model: ModelSpec) -> dict:
    discarded = []
    for d in corr.discarded_terms:
        discarded.append(
            {
                "terms": term_records(d.operator),
                "operator": d.operator.pauli_str(),
                "phase_detuning": str(d.phase_detuning),
                "weight": None if d.weight is None else str(d.weight),
                "products": list(d.products),
            }
        )
    return {
        "model": _model_dict(model),
        "order": corr.order,
        "resonant_terms": term_records(corr.resonant_terms),
        "discarded_terms": discarded,
        "audit": {
            "identity_dropped": term_records(corr.identity_dropped),
            "warnings": list(corr.warnings),
        },
    }


def correction_from_dict(data: dict) -> tuple[int, OperatorExpr, OperatorExpr]:
    """``(order, resonant_terms, identity_dropped)`` from :func:`correction_to_dict` output."""
    return (
        data["order"],
        expr_from_records(data["resonant_terms"]),
        expr_from_records(data["audit"]["identity_dropped"]),
    )


def correction_to_json(corr: EffectiveCorrection, model: ModelSpec) -> str:
    return json.dumps(correction_to_dict(corr, model), ensure_ascii=False, indent=2) + "\n"


def correction_to_text(corr: EffectiveCorrection, model: ModelSpec) -> str:
    lines = [
        f"model {model.name}: ω_e = {model.omega_e}, ω_c = {model.omega_c}, λ = {model.lam}",
        f"order {corr.order}",
        f"resonant: {corr.resonant_terms.pauli_str()}",
        f"identity dropped: {corr.identity_dropped.pauli_str()}",
        f"discarded ({len(corr.discarded_terms)}):",
    ]
    for d in corr.discarded_terms:
        w = "pole" if d.weight is None else str(d.weight)
        lines.append(f"  Δ = {str(d.phase_detuning):>6}   weight {w:>8}   {d.operator.pauli_str()}")
    for note in corr.warnings:
        lines.append(f"warning: {note}")
    return "\n".join(lines) + "\n"


def correction_to_csv(corr: EffectiveCorrection, model: ModelSpec) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["section", "order", "lambda_power", "atomic", "bosonic", "m", "n", "coeff", "phase_detuning", "weight"])
    for rec in term_records(corr.resonant_terms):
        mono = rec["bosonic"][0]
        writer.writerow(["resonant", corr.order, rec["lambda_power"], rec["atomic"], rec["bosonic_label"], mono["m"], mono["n"], rec["coeff"], 0, ""])
    for rec in term_records(corr.identity_dropped):
        mono = rec["bosonic"][0]
        writer.writerow(["identity", corr.order, rec["lambda_power"], rec["atomic"], rec["bosonic_label"], mono["m"], mono["n"], rec["coeff"], 0, ""])
    for d in corr.discarded_terms:
        w = "" if d.weight is None else str(d.weight)
        for rec in term_records(d.operator):
            mono = rec["bosonic"][0]
            writer.writerow(["discarded", corr.order, rec["lambda_power"], rec["atomic"], rec["bosonic_label"], mono["m"], mono["n"], rec["coeff"], str(d.phase_detuning), w])
    return buf.getvalue()
