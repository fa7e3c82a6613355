"""Command-line surface: config ingestion, experiment orchestration, and
bit-stable result emission.

Every command is a deterministic function of (config, seed); reruns with
the same inputs produce byte-identical artifacts (no timestamps).  All
numbers are emitted with repr, the shortest decimal form that parses
back to the same double.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional

from . import analysis, cmv, construct, dirac
from .errors import (FloquetLabError, NumericalAssertionError, SearchFailure)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_SEARCH = 4


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    return cfg


def _potential_from(cfg: dict) -> dirac.PiecewisePotential:
    rows = cfg.get("potential")
    if not rows:
        raise ConfigError("config needs 'potential': [[length, re, im], ...]")
    try:
        segs = [(float(r[0]), complex(float(r[1]), float(r[2]))) for r in rows]
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"bad potential rows: {exc}") from exc
    return dirac.PiecewisePotential(segments=tuple(segs))


def _cycle_from(cfg: dict) -> cmv.VerblunskyCycle:
    rows = cfg.get("verblunsky")
    if not rows:
        raise ConfigError("config needs 'verblunsky': [[re, im], ...]")
    try:
        vals = [complex(float(r[0]), float(r[1])) for r in rows]
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"bad verblunsky rows: {exc}") from exc
    return cmv.VerblunskyCycle(values=tuple(vals))


def _kind(cfg: dict) -> str:
    kind = cfg.get("kind", "dirac")
    if kind not in ("dirac", "cmv"):
        raise ConfigError(f"kind must be 'dirac' or 'cmv', got {kind!r}")
    return kind


def _require_seed(cfg: dict, args) -> int:
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise ConfigError("a seed is mandatory for randomized commands")
    return int(seed)


def _tol(cfg: dict) -> float:
    tol = float(cfg.get("tol", 1e-8))
    if tol <= 0:
        raise ConfigError("tol must be positive")
    return tol


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_text(path: Path, text: str, fmt_wanted: str, fmt: str) -> None:
    if fmt in (fmt_wanted, "both"):
        path.write_text(text, encoding="utf-8")
        print(f"wrote {path}")


def _json_text(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _csv_text(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_bands(cfg: dict, args) -> int:
    kind = _kind(cfg)
    tol = _tol(cfg)
    out = _out_dir(args)
    if kind == "dirac":
        phi = _potential_from(cfg)
        R = float(cfg.get("window", 3.0))
        bandset = dirac.bands(phi, R, tol,
                              oversample=float(cfg.get("oversample", 1.0)))
        intervals = bandset.intervals
    else:
        alpha = _cycle_from(cfg)
        arcset = cmv.cmv_bands(alpha, tol)
        intervals = arcset.arcs
    rows = [[i, a, b, b - a] for i, (a, b) in enumerate(intervals)]
    summary = {
        "kind": kind,
        "count": len(intervals),
        "measure": float(sum(b - a for a, b in intervals)),
        "bands": [[a, b] for a, b in intervals],
    }
    _write_text(out / "bands.csv",
                _csv_text(["index", "left", "right", "length"], rows),
                "csv", args.format)
    _write_text(out / "bands.json", _json_text(summary), "json", args.format)
    return EXIT_OK


def cmd_dos(cfg: dict, args) -> int:
    phi = _potential_from(cfg)
    tol = _tol(cfg)
    out = _out_dir(args)
    R = float(cfg.get("window", 3.0))
    nodes = int(cfg.get("dos", {}).get("nodes", 48))
    bandset = dirac.bands(phi, R, tol)
    rows = []
    for i, (a, b) in enumerate(bandset.intervals):
        complete = a > -R and b < R
        weight = dirac.dos_band_weight(phi, (a, b), nodes=nodes) if complete else None
        rows.append([i, a, b, weight if weight is not None else "", complete])
    summary = {
        "period": phi.period,
        "expected_weight": 1.0 / phi.period,
        "bands": [
            {"left": a, "right": b}
            for a, b in bandset.intervals
        ],
        "weights": [r[3] if r[3] != "" else None for r in rows],
    }
    _write_text(out / "dos.csv",
                _csv_text(["index", "left", "right", "weight", "complete"], rows),
                "csv", args.format)
    _write_text(out / "dos.json", _json_text(summary), "json", args.format)
    return EXIT_OK


def cmd_lyapunov(cfg: dict, args) -> int:
    kind = _kind(cfg)
    out = _out_dir(args)
    n = int(cfg.get("grid_points", 512))
    rows = []
    if kind == "dirac":
        phi = _potential_from(cfg)
        R = float(cfg.get("window", 3.0))
        import numpy as np
        grid = np.linspace(-R, R, n)
        vals = dirac.lyapunov_profile(phi, grid)
    else:
        alpha = _cycle_from(cfg)
        import numpy as np
        grid = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        vals = cmv.cmv_lyapunov_profile(alpha, grid)
    rows = [[float(x), float(v)] for x, v in zip(grid, vals)]
    _write_text(_out_dir(args) / "lyapunov.csv",
                _csv_text(["point", "lyapunov"], rows), "csv", args.format)
    _write_text(out / "lyapunov.json",
                _json_text({"kind": kind, "values": rows}), "json", args.format)
    return EXIT_OK


def _certificate_dict(cert: construct.GapCertificate) -> dict:
    if cert.kind == "dirac":
        base = [[l, v.real, v.imag] for l, v in cert.base.segments]
        partner = ([[l, v.real, v.imag] for l, v in cert.partner.segments]
                   if cert.partner is not None else None)
    else:
        base = [[v.real, v.imag] for v in cert.base.values]
        partner = ([[v.real, v.imag] for v in cert.partner.values]
                   if cert.partner is not None else None)
    return {
        "kind": cert.kind,
        "target": cert.target,
        "case": cert.case,
        "word": cert.word_label(),
        "word_runs": [list(r) for r in cert.word.runs] if cert.word else None,
        "base": base,
        "partner": partner,
        "result_period": cert.result_period,
        "achieved_trace": cert.achieved_trace,
        "distance": cert.distance,
        "preperturbations": list(cert.preperturbations),
    }


def cmd_open_gap(cfg: dict, args) -> int:
    kind = _kind(cfg)
    out = _out_dir(args)
    seed = _require_seed(cfg, args)
    gap_cfg = cfg.get("open_gap", {})
    eps = float(gap_cfg.get("epsilon", 0.2))
    target = float(gap_cfg["target"]) if "target" in gap_cfg else None
    if target is None:
        raise ConfigError("open_gap config needs 'target'")
    if kind == "dirac":
        phi = _potential_from(cfg)
        phit, cert = construct.open_gap(phi, target, eps, seed)
        checks = construct.verify_gap_certificate(phit, cert)
    else:
        alpha = _cycle_from(cfg)
        tilde, cert = construct.cmv_open_gap(alpha, target, eps, seed)
        checks = construct.verify_gap_certificate(tilde, cert)
    doc = _certificate_dict(cert)
    doc["verification"] = checks
    _write_text(out / "gap_certificate.json", _json_text(doc), "json", args.format)
    if args.format in ("csv", "both"):
        rows = [[cert.target, cert.case, cert.achieved_trace, cert.distance,
                 cert.result_period]]
        _write_text(out / "gap_certificate.csv",
                    _csv_text(["target", "case", "trace", "distance", "period"],
                              rows), "csv", args.format)
    return EXIT_OK


def _thin_common(cfg: dict, args, kind: str) -> int:
    out = _out_dir(args)
    seed = _require_seed(cfg, args)
    tol = _tol(cfg)
    ccfg = cfg.get("construction", {})
    eps = float(ccfg.get("epsilon", 0.3))
    n_values = ccfg.get("n_values")
    summary_rows = []
    reports = []
    partial_error: Optional[SearchFailure] = None

    try:
        if kind == "dirac":
            phi = _potential_from(cfg)
            R = float(cfg.get("window", 2.0))
            cover = construct.resolvent_cover(phi, R, eps, seed)
            m, ratio = len(cover), int(round(cover[0].period / phi.period))
            n0 = construct.feasibility_threshold(m, ratio)
            if not n_values:
                n_values = [n0, n0 + m * ratio, n0 + 2 * m * ratio]
            for N in n_values:
                _, report = construct.thin_spectrum(
                    phi, R, eps, int(N), seed, tol=tol, cover=cover)
                reports.append(report)
                summary_rows.append([int(N), report.final_period, report.measure,
                                     math.log(max(report.measure, 1e-300))])
        else:
            alpha = _cycle_from(cfg)
            cover = construct.cmv_resolvent_cover(alpha, eps, seed)
            m, ratio = len(cover), cover[0].q // alpha.q
            n0 = construct.feasibility_threshold(m, ratio)
            if not n_values:
                n_values = [n0, n0 + m * ratio, n0 + 2 * m * ratio]
            for N in n_values:
                _, report = construct.cmv_thin_spectrum(
                    alpha, eps, int(N), seed, tol=tol, cover=cover)
                reports.append(report)
                summary_rows.append([int(N), report.final_period, report.measure,
                                     math.log(max(report.measure, 1e-300))])
    except SearchFailure as exc:
        partial_error = exc

    fitted = None
    if len(reports) >= 2:
        fitted = construct.fit_decay_rate(
            [r.final_period for r in reports], [r.measure for r in reports])
    for i, report in enumerate(reports):
        doc = report.to_json_dict()
        doc["fitted_rate"] = fitted
        name = f"thin_N{report.n_value}.json"
        _write_text(out / name, _json_text(doc), "json", args.format)
    _write_text(out / "thin_summary.csv",
                _csv_text(["N", "final_period", "measure", "log_measure"],
                          summary_rows), "csv", args.format)
    if args.format in ("json", "both"):
        measures = [r[2] for r in summary_rows]
        summary = {
            "kind": kind,
            "seed": seed,
            "epsilon": eps,
            "fitted_rate": fitted,
            "monotone_non_increasing": all(
                a >= b for a, b in zip(measures, measures[1:])),
            "rows": [dict(zip(("N", "final_period", "measure", "log_measure"), r))
                     for r in summary_rows],
        }
        if partial_error is not None:
            summary["error"] = str(partial_error)
        _write_text(out / "thin_summary.json", _json_text(summary),
                    "json", args.format)
    if partial_error is not None:
        print(f"search failure (partial results kept): {partial_error}",
              file=sys.stderr)
        return EXIT_SEARCH
    return EXIT_OK


def cmd_thin(cfg: dict, args) -> int:
    return _thin_common(cfg, args, "dirac")


def cmd_cmv_thin(cfg: dict, args) -> int:
    return _thin_common(cfg, args, "cmv")


def cmd_cmv_bands(cfg: dict, args) -> int:
    cfg = dict(cfg)
    cfg["kind"] = "cmv"
    return cmd_bands(cfg, args)


def cmd_dimension(cfg: dict, args) -> int:
    out = _out_dir(args)
    seed = _require_seed(cfg, args)
    tol = _tol(cfg)
    dcfg = cfg.get("dimension", {})
    phi = _potential_from(cfg)
    eps = float(dcfg.get("epsilon", 0.4))
    n_stages = int(dcfg.get("n_stages", 2))
    window = float(dcfg.get("window", 0.5))
    scales = dcfg.get("scales") or [2.0 ** -k for k in range(3, 11)]
    schedule = analysis.build_schedule(phi, eps, n_stages, seed,
                                       window=window, tol=tol)
    stage_docs = []
    for i, stage in enumerate(schedule.stages):
        rep = analysis.box_counting(stage.spectrum, scales)
        stage_docs.append({"stage": i, "period": stage.period,
                           "measure": stage.measure,
                           "target": stage.target,
                           "epsilon": stage.epsilon,
                           "box": rep.to_json_dict()})
        rows = [[e, c, s] for e, c, s in
                zip(rep.scales, rep.counts, list(rep.slopes) + [""])]
        _write_text(out / f"dimension_stage{i}.csv",
                    _csv_text(["epsilon", "count", "slope"], rows),
                    "csv", args.format)
    _write_text(out / "dimension.json",
                _json_text({"window": schedule.window, "seed": seed,
                            "stages": stage_docs}), "json", args.format)
    return EXIT_OK


def cmd_gordon(cfg: dict, args) -> int:
    kind = _kind(cfg)
    out = _out_dir(args)
    gcfg = cfg.get("gordon", {})
    q = gcfg.get("q")
    if q is None:
        raise ConfigError("gordon config needs 'q'")
    C = float(gcfg.get("c", 2.0))
    if kind == "dirac":
        data = _potential_from(cfg)
    else:
        data = _cycle_from(cfg)
    value = analysis.gordon_defect(data, q, C)
    doc = {"kind": kind, "q": q, "c": C, "defect": value}
    _write_text(out / "gordon.json", _json_text(doc), "json", args.format)
    _write_text(out / "gordon.csv",
                _csv_text(["q", "c", "defect"], [[q, C, value]]),
                "csv", args.format)
    return EXIT_OK


COMMANDS = {
    "bands": cmd_bands,
    "dos": cmd_dos,
    "lyapunov": cmd_lyapunov,
    "open-gap": cmd_open_gap,
    "thin": cmd_thin,
    "cmv-bands": cmd_cmv_bands,
    "cmv-thin": cmd_cmv_thin,
    "dimension": cmd_dimension,
    "gordon": cmd_gordon,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floquetlab",
        description="Spectra of periodic Dirac and CMV operators, "
                    "gap opening, and thin-spectrum constructions.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None,
                       help="seed; overrides the config seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=("csv", "json", "both"),
                       default="both")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAssertionError as exc:
        print(f"numerical assertion failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SearchFailure as exc:
        print(f"search failure: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    except FloquetLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
