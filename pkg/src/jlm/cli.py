"""``jlm`` command-line interface.

Exit codes: 0 success, 1 configuration error, 2 degenerate detunings,
3 numerical-validity failure (leakage, missing oscillation, failed check).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from fractions import Fraction

import numpy as np

from .diagrams import enumerate_diagrams, render_diagram, render_group
from .effective import MAX_ORDER, build_correction
from .errors import ConfigError, DegenerateDetunings, LeakageExceeded, NoPeak, NoSolution
from .numerics import (
    intrinsic_rabi_frequency,
    operator_space_matrix,
    projector_POmega,
    verify_three_photon,
)
from .serialize import (
    RunConfig,
    correction_to_csv,
    correction_to_json,
    correction_to_text,
    fmt_float,
    load_config,
)

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_NUMERIC = 0, 1, 2, 3


class _Failure(Exception):
    def __init__(self, code: int, message: str, output: str | None = None):
        super().__init__(message)
        self.code = code
        self.output = output


def _complex(z: complex) -> dict:
    return {"re": fmt_float(z.real), "im": fmt_float(z.imag)}


def _matrix_json(m: np.ndarray) -> list:
    return [[_complex(complex(z)) for z in row] for row in m]


def _matrix_text(m: np.ndarray, labels) -> str:
    def cell(z):
        z = complex(z)
        if z.imag == 0:
            return fmt_float(z.real)
        return f"{fmt_float(z.real)}{z.imag:+.12g}j"

    width = max(len(cell(z)) for z in m.flat)
    lw = max(len(s) for s in labels)
    rows = [f"{lab:>{lw}}  " + "  ".join(f"{cell(z):>{width}}" for z in row) for lab, row in zip(labels, m)]
    return "\n".join(rows)


# -- commands --------------------------------------------------------------


def cmd_expand(cfg: RunConfig) -> str:
    try:
        corr = build_correction(cfg.model, cfg.order)
    except DegenerateDetunings as exc:
        raise _Failure(EXIT_DEGENERATE, f"degenerate detunings: {exc}") from exc
    if cfg.output_format == "json":
        return correction_to_json(corr, cfg.model)
    if cfg.output_format == "csv":
        return correction_to_csv(corr, cfg.model)
    return correction_to_text(corr, cfg.model)


def cmd_verify(cfg: RunConfig) -> str:
    try:
        report = verify_three_photon(cfg.model, cfg.numerics)
    except LeakageExceeded as exc:
        raise _Failure(EXIT_NUMERIC, f"{exc} (current n_max = {cfg.numerics.n_max})") from exc
    except NoPeak as exc:
        out = _verify_output(cfg, None, note=f"no oscillation: {exc}")
        raise _Failure(EXIT_NUMERIC, f"no oscillation detected ({exc})", out) from exc
    except NoSolution as exc:
        raise _Failure(EXIT_CONFIG, str(exc)) from exc
    out = _verify_output(cfg, report)
    if not report.passed:
        raise _Failure(EXIT_NUMERIC, "three-photon check failed", out)
    return out


def _verify_output(cfg: RunConfig, report, note: str | None = None) -> str:
    fields: dict[str, object] = {"model": cfg.model.name, "omega_e": str(cfg.model.omega_e), "lambda": str(cfg.model.lam),
                                 "n_max": cfg.numerics.n_max}
    if report is None:
        fields.update({"status": "no oscillation", "passed": False, "note": note})
    else:
        fields.update(
            {
                "omega_c_star": fmt_float(report.omega_c),
                "predicted_frequency": fmt_float(report.predicted),
                "measured_frequency": fmt_float(report.measured),
                "relative_error": fmt_float(report.relative_error) if report.relative_error is not None else None,
                "contrast": fmt_float(report.contrast),
                "leakage": fmt_float(report.leakage),
                "tolerance": fmt_float(report.tolerance),
                "passed": report.passed,
            }
        )
    if cfg.output_format == "json":
        return json.dumps(fields, ensure_ascii=False, indent=2) + "\n"
    if cfg.output_format == "text":
        lines = [f"{k}: {v}" for k, v in fields.items()]
        if report is not None:
            lines.append("PASS" if report.passed else "FAIL")
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    for k, v in fields.items():
        buf.write(f"# {k}={v}\n")
    if report is not None and report.trajectory is not None:
        writer = csv.writer(buf, lineterminator="\n")
        traj = report.trajectory
        labels = list(traj.populations)
        writer.writerow(["time", *labels])
        for i, t in enumerate(traj.times):
            writer.writerow([fmt_float(t), *(fmt_float(traj.populations[lab][i]) for lab in labels)])
    return buf.getvalue()


def cmd_opspace(cfg: RunConfig) -> str:
    delta = cfg.delta if cfg.delta is not None else cfg.model.omega_c - cfg.model.omega_e
    lam = cfg.model.lam
    d, l = float(delta), float(lam)
    mat = operator_space_matrix(d, l, dressed=cfg.dressed)
    evals = mat.eigenvalues()
    omega = intrinsic_rabi_frequency(d, l, dressed=cfg.dressed)
    if d == 0 and l == 0:
        proj, resid = None, None
    else:
        proj = projector_POmega(d, l)
        resid = float(np.linalg.norm(proj @ proj - proj))
    fields = {
        "delta": str(delta),
        "lambda": str(lam),
        "dressed": cfg.dressed,
        "labels": list(mat.labels),
        "matrix": _matrix_json(mat.entries),
        "eigenvalues": [_complex(complex(z)) for z in evals],
        "omega": fmt_float(omega),
        "omega_formula": "sqrt(Δ²+4λ²)" if cfg.dressed else "sqrt(Δ²+2λ²)",
        "projector": None if proj is None else _matrix_json(proj),
        "projector_labels": list(operator_space_matrix(d, l, True).labels),
        "idempotence_residual": None if resid is None else fmt_float(resid),
    }
    if cfg.output_format == "json":
        return json.dumps(fields, ensure_ascii=False, indent=2) + "\n"
    if cfg.output_format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["quantity", "row", "col", "re", "im"])
        for i, row in enumerate(mat.entries):
            for j, z in enumerate(row):
                writer.writerow(["M", mat.labels[i], mat.labels[j], fmt_float(z.real), fmt_float(z.imag)])
        for k, z in enumerate(evals):
            writer.writerow(["eigenvalue", k, "", fmt_float(z.real), fmt_float(z.imag)])
        writer.writerow(["omega", "", "", fmt_float(omega), "0"])
        if proj is not None:
            labels = fields["projector_labels"]
            for i, row in enumerate(proj):
                for j, z in enumerate(row):
                    writer.writerow(["P_Omega", labels[i], labels[j], fmt_float(z.real), fmt_float(z.imag)])
            writer.writerow(["idempotence_residual", "", "", fields["idempotence_residual"], "0"])
        return buf.getvalue()
    lines = [
        f"Δ = {delta}, λ = {lam}, basis ({', '.join(mat.labels)})",
        "generator:",
        _matrix_text(mat.entries, mat.labels),
        "eigenvalues: " + ", ".join(fmt_float(z.real) if abs(z.imag) < 1e-12 else str(z) for z in evals),
        f"Ω = {fields['omega_formula']} = {fields['omega']}",
    ]
    if proj is not None:
        lines += [
            "P_Ω = M²/Ω² in the dressed basis:",
            _matrix_text(proj.real if np.allclose(proj.imag, 0) else proj, fields["projector_labels"]),
            f"‖P_Ω² − P_Ω‖ = {fields['idempotence_residual']}",
        ]
    return "\n".join(lines) + "\n"


def cmd_render(cfg: RunConfig) -> str:
    groups = enumerate_diagrams(cfg.model, cfg.order)
    notice = None
    if cfg.order > MAX_ORDER:
        notice = f"order {cfg.order}: enumeration only; averaged weights stop at order {MAX_ORDER}"
    if cfg.output_format == "json":
        data = {
            "model": cfg.model.name,
            "order": cfg.order,
            "notice": notice,
            "groups": [
                {
                    "composite": g.composite.pauli_str(),
                    "total_detuning": str(g.total_detuning),
                    "diagrams": [render_diagram(d) for d in g.diagrams],
                }
                for g in groups
            ],
        }
        return json.dumps(data, ensure_ascii=False, indent=2) + "\n"
    if cfg.output_format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["group", "composite", "total_detuning", "product", "n_left", "cumulative_detunings"])
        for k, g in enumerate(groups):
            for d in g.diagrams:
                writer.writerow([k, g.composite.pauli_str(), str(g.total_detuning),
                                 " · ".join(t.label for t in d.product), d.n_left,
                                 " ".join(str(x) for x in d.cumulative_detunings)])
        return buf.getvalue()
    blocks = [render_group(g) for g in groups]
    if notice:
        blocks.insert(0, notice)
    return "\n\n".join(blocks) + "\n"


COMMANDS = {"expand": cmd_expand, "verify": cmd_verify, "opspace": cmd_opspace, "render": cmd_render}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jlm", description="Transition-diagram perturbation theory for cavity QED.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="key = value configuration file")
    parser.add_argument("--order", type=int, help="expansion order (overrides the config)")
    parser.add_argument("--format", choices=["json", "csv", "text"], help="output format")
    parser.add_argument("--out", help="write output to this file instead of stdout")
    parser.add_argument("--delta", help="opspace: detuning ω_c − ω_e (default from the model)")
    parser.add_argument("--dressed", action=argparse.BooleanOptionalAction, default=None,
                        help="opspace: use the dressed operator basis")
    return parser


def _resolve(args) -> RunConfig:
    max_order = None if args.command == "render" else MAX_ORDER
    cfg = load_config(args.config, max_order=max_order)
    if args.order is not None:
        if args.order < 0 or (max_order is not None and args.order > max_order):
            raise ConfigError(f"--order {args.order} outside 0..{max_order}")
        cfg = replace(cfg, order=args.order)
    if args.format:
        cfg = replace(cfg, output_format=args.format)
    if args.out:
        cfg = replace(cfg, output_path=args.out)
    if args.delta is not None:
        try:
            cfg = replace(cfg, delta=Fraction(args.delta))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"--delta: not a number: {args.delta!r}") from None
    if args.dressed is not None:
        cfg = replace(cfg, dressed=args.dressed)
    return cfg


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); nothing left to report
            sys.stderr.close()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
    except (ConfigError, ValueError) as exc:
        print(f"jlm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = COMMANDS[args.command](cfg)
    except _Failure as exc:
        if exc.output:
            _emit(exc.output, cfg.output_path)
        print(f"jlm: {exc}", file=sys.stderr)
        return exc.code
    except DegenerateDetunings as exc:
        print(f"jlm: degenerate detunings: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"jlm: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(out, cfg.output_path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
