"""Command-line runner: ``bigjump <kind> --config FILE [--seed N] [--workers K] [--out DIR]``.

Exit codes: 0 pass, 2 fail, 3 inconclusive, 1 error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import shutil
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .asymptotics import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    VerifierReport,
    _jsonable,
    check_dependence_assumption,
    sample_dependence_pairs,
    verify_convolution_maxsum,
    verify_finite_sum_sbj,
    verify_kesten_growth,
    verify_random_sum,
    verify_scale_mixture,
    verify_translation_insensitivity,
)
from .config import KINDS, ConfigError, ExperimentConfig, config_hash, load_config_dict, parse_config
from .randsrc import SeedSpec, Stream, draw_vectors_chunked
from .riskmodel import MAX_PATH_DUMP, RiskConfig, check_order_statistics_identity, simulate_paths, verify_thm51
from .tailstats import EmpiricalTail, classify_tail, hill_index, subexponential_curve

EXIT_CODES = {PASS: 0, FAIL: 2, INCONCLUSIVE: 3}
EXIT_ERROR = 1
SUMMARY_COLUMNS = ("name", "kind", "tag", "verdict", "expected", "deepest_x", "ratio", "ci_lo", "ci_hi", "runtime_s")

_DEFAULT_BANDS = {
    "sum-asym": (0.9, 1.1),
    "scale-mixture": (0.9, 1.1),
    "convolution": (0.9, 1.1),
    "translation": (0.9, 1.1),
    "random-sum": (0.85, 1.15),
    "risk-model": (0.85, 1.15),
}


def _band(cfg: ExperimentConfig):
    return tuple(cfg.band) if cfg.band is not None else _DEFAULT_BANDS.get(cfg.kind)


def _classify(cfg, workers):
    rs, law, sz, p = cfg.set.build(), cfg.law.build(), cfg.sizes, cfg.params
    b1 = draw_vectors_chunked(law, sz.n_paths, SeedSpec(cfg.seed, Stream.CLAIMS), workers=workers)
    b2 = draw_vectors_chunked(law, sz.n_paths, SeedSpec(cfg.seed, Stream.SECOND_BATCH), workers=workers)
    t = EmpiricalTail().fit(b1.y_a(rs))
    s_curve = subexponential_curve(b1, b2, rs, levels=cfg.levels)
    verdicts = classify_tail(t, shift=p.a, b=p.b, b_grid=p.b_grid, s_curve=s_curve)
    stats = {"classes": {k: v for k, v in verdicts.to_dict().items() if k != "details"},
             "expect_classes": dict(p.expect_classes), "n": sz.n_paths}
    if sz.hill_k <= sz.n_paths / 10:
        h = hill_index(t, sz.hill_k)
        stats["hill"] = {"k": sz.hill_k, "alpha": h.alpha_, "ci": list(h.ci_), "threshold": h.threshold_,
                         "alpha_check": h.alpha_check_, "unstable": h.unstable_}
    got = {"L": verdicts.long_tailed, "D": verdicts.dominated, "C": verdicts.consistent, "S": verdicts.subexponential}
    details = verdicts.details
    resolved = all(_has_resolvable(details[k]) for k in ("L", "D", "S"))
    if not resolved:
        verdict = INCONCLUSIVE
    else:
        ok = all(got[k] == want for k, want in p.expect_classes.items()) and verdicts.ordering_consistent
        verdict = PASS if ok else FAIL
    return VerifierReport(
        theorem_tag="tail-class", verdict=verdict,
        rule="class verdicts match expect_classes and a positive C comes with positive D and L; "
             + "; ".join(f"{k}: {v}" for k, v in verdicts.rules.items() if k != "min_exceedances"),
        curve=s_curve, seed=cfg.seed, stats=stats,
        tables={"L": details["L"], "D": details["D"], "C": details["C"]},
    )


def _has_resolvable(curve_dict) -> bool:
    return any(curve_dict["resolvable"])


def _risk_config(cfg) -> RiskConfig:
    return RiskConfig(cfg.risk.lam, cfg.risk.horizon, cfg.law.build(), cfg.risk.returns.build(), cfg.set.build())


def run_experiment(cfg: ExperimentConfig, workers=None):
    """Dispatch to the matching verifier; returns ``(report, extra_files)``."""
    w = cfg.workers if workers is None else workers
    sz, p, band = cfg.sizes, cfg.params, _band(cfg)
    common = dict(n_paths=sz.n_paths, seed=cfg.seed, workers=w)
    kind = cfg.kind
    extra = {}
    if kind == "classify":
        return _classify(cfg, w), extra
    if kind == "ks-arrivals":
        rep = check_order_statistics_identity(
            cfg.risk.lam, cfg.risk.horizon, p.arrivals_n, min_conditioned=p.min_conditioned, **common
        )
        return rep, extra
    rs, law = cfg.set.build(), cfg.law.build()
    grid_kw = dict(levels=cfg.levels, n_pilot=sz.n_pilot)
    if kind == "sum-asym":
        dep = cfg.dependence
        rep = verify_finite_sum_sbj(
            rs, law, sz.n_summands, dep.structure, band=band,
            shock=dep.shock.build() if dep.shock else None, **grid_kw, **common,
        )
    elif kind == "random-sum":
        rep = verify_random_sum(rs, law, cfg.count_law.build(), band=band, **grid_kw, **common)
    elif kind == "scale-mixture":
        rep = verify_scale_mixture(rs, law, cfg.theta.build(), sz.n_summands, band=band, **grid_kw, **common)
    elif kind == "convolution":
        rep = verify_convolution_maxsum(rs, law, cfg.law2.build(), band=band, **grid_kw, **common)
    elif kind == "kesten":
        theta = cfg.theta.build() if cfg.theta else None
        rep = verify_kesten_growth(rs, law, sz.n_max, eps=p.eps, quantile=p.quantile, theta=theta,
                                   n_pilot=sz.n_pilot, **common)
    elif kind == "translation":
        rep = verify_translation_insensitivity(rs, law, p.shift, band=band, **grid_kw, **common)
    elif kind == "dependence":
        dep = cfg.dependence
        yi, yj = sample_dependence_pairs(
            rs, law, dep.structure, sz.n_paths, cfg.seed, shock=dep.shock.build() if dep.shock else None, workers=w
        )
        rep = check_dependence_assumption(yi, yj, dep.which, levels=cfg.levels)
        rep.seed = cfg.seed
    elif kind == "risk-model":
        rc = _risk_config(cfg)
        rep = verify_thm51(rc, t_mesh=sz.t_mesh, n_inner=sz.n_inner, band=band, **grid_kw, **common)
        if sz.dump_paths:
            extra["paths.csv"] = _paths_csv(simulate_paths(rc, min(sz.dump_paths, MAX_PATH_DUMP), cfg.seed))
    else:  # pragma: no cover - the schema rejects unknown kinds
        raise ValueError(f"unknown experiment kind {kind!r}")
    return rep, extra


def _paths_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    d = records[0].total.size if records else 0
    w.writerow(["path", "time", "factor"] + [f"x{j + 1}" for j in range(d)])
    for i, r in enumerate(records):
        for t, f, x in zip(r.arrival_times, r.discount_factors, r.claims):
            w.writerow([i, repr(float(t)), repr(float(f))] + [repr(float(v)) for v in x])
    return buf.getvalue()


def _table_csv(table) -> str | None:
    """CSV for a dict of equal-length columns; None when the table is not columnar."""
    if not isinstance(table, dict):
        return None
    cols = {k: v for k, v in table.items() if isinstance(v, (list, tuple, np.ndarray))}
    lengths = {len(v) for v in cols.values()}
    if not cols or len(lengths) != 1:
        return None
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(cols)
    w.writerow(names)
    for row in zip(*(list(np.asarray(cols[n]).tolist()) for n in names)):
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def report_document(cfg: ExperimentConfig, report: VerifierReport) -> dict:
    report.config_hash = config_hash(cfg)
    doc = report.to_dict()
    doc["kind"] = cfg.kind
    doc["master_seed"] = cfg.seed
    doc["tool_version"] = __version__
    return doc


def write_archive(out_dir, cfg, report, extra_files=None, wall_time=None, workers=1) -> Path:
    """Write the result directory atomically (temp dir in the same parent, then rename)."""
    out = Path(out_dir)
    if out.exists() and (not out.is_dir() or (any(out.iterdir()) and not (out / "report.json").exists())):
        raise FileExistsError(f"{out} exists and is not a result archive; refusing to replace it")
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.tmp-", dir=out.parent))
    try:
        (tmp / "curves").mkdir()
        (tmp / "config.json").write_text(json.dumps(cfg.canonical(), indent=2, sort_keys=True) + "\n")
        doc = report_document(cfg, report)
        (tmp / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        if report.curve is not None:
            (tmp / "curves" / "ratio.csv").write_text(report.curve.to_csv())
        for name, table in _jsonable(report.tables).items():
            text = _table_csv(table)
            if text is not None:
                (tmp / "curves" / f"{name}.csv").write_text(text)
        for name, text in (extra_files or {}).items():
            (tmp / name).write_text(text)
        meta = {
            "tool_version": __version__, "wall_time_s": wall_time, "workers": workers,
            "finished_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "python": platform.python_version(), "numpy": np.__version__,
        }
        (tmp / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        if out.exists():
            shutil.rmtree(out)
        os.replace(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out


def default_out(cfg: ExperimentConfig) -> Path:
    return Path(cfg.out) if cfg.out else Path("results") / f"{cfg.kind}-{config_hash(cfg)[:12]}"


def run(cfg: ExperimentConfig, out=None, workers=None):
    """Run one experiment and archive it; returns ``(report, archive_path, runtime)``."""
    w = cfg.workers if workers is None else workers
    t0 = time.perf_counter()
    report, extra = run_experiment(cfg, w)
    runtime = time.perf_counter() - t0
    path = write_archive(out or default_out(cfg), cfg, report, extra, wall_time=runtime, workers=w)
    return report, path, runtime


def _summary_row(name, kind, report, expected, runtime):
    h = report.headline()
    return {"name": name, "kind": kind, "tag": report.theorem_tag, "verdict": report.verdict,
            "expected": expected or "", "deepest_x": h["deepest_x"], "ratio": h["ratio"],
            "ci_lo": h["ci_lo"], "ci_hi": h["ci_hi"], "runtime_s": round(runtime, 3)}


def load_manifest(path):
    """Parse a suite manifest and every config it lists; all errors are collected."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError([str(exc)], path) from None
    entries = data.get("experiments") or [] if isinstance(data, dict) else None
    if entries is None or not isinstance(entries, list):
        raise ConfigError(["manifest needs an 'experiments' list"], path)
    unknown = set(data) - {"experiments", "out"}
    errors = [f"unknown manifest key {k!r}" for k in sorted(unknown)]
    runs = []
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or "config" not in e:
            errors.append(f"experiments[{i}]: needs a 'config' path")
            continue
        bad = set(e) - {"config", "name", "expect", "overrides"}
        if bad:
            errors.append(f"experiments[{i}]: unknown keys {sorted(bad)}")
        expect = e.get("expect")
        if expect is not None and expect not in EXIT_CODES:
            errors.append(f"experiments[{i}]: expect must be one of {sorted(EXIT_CODES)}")
        cpath = (path.parent / e["config"]).resolve()
        try:
            data_i = yaml.safe_load(cpath.read_text())
            if isinstance(data_i, dict) and e.get("overrides"):
                data_i = _merge(data_i, e["overrides"])
            cfg = load_config_dict(data_i, source=cpath)
        except ConfigError as exc:
            errors.extend(f"experiments[{i}] ({e['config']}): {m}" for m in exc.errors)
            continue
        except (OSError, yaml.YAMLError) as exc:
            errors.append(f"experiments[{i}] ({e['config']}): {exc}")
            continue
        runs.append((e.get("name") or Path(e["config"]).stem, cfg, expect))
    if errors:
        raise ConfigError(errors, path)
    return runs, data.get("out")


def _merge(base, over):
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def emit_suite(manifest, out=None, workers=None, stream=sys.stdout):
    """Run every experiment of a manifest; returns ``(rows, exit_code)``.

    An entry counts as good when its verdict equals ``expect`` (default
    ``pass``).  Config errors abort before anything runs.
    """
    runs, manifest_out = load_manifest(manifest)
    root = Path(out or manifest_out or "results/suite")
    rows = []
    for name, cfg, expect in runs:
        report, _, runtime = run(cfg, out=root / name, workers=workers)
        row = _summary_row(name, cfg.kind, report, expect, runtime)
        rows.append(row)
        good = report.verdict == (expect or PASS)
        print(f"{'ok ' if good else 'BAD'} {name:<32} {report.verdict:<12} (expected {expect or PASS})", file=stream)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    code = 0 if all(r["verdict"] == (r["expected"] or PASS) for r in rows) else EXIT_CODES[FAIL]
    return rows, code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bigjump", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run a {kind} experiment")
        sp.add_argument("--config", required=True, help="YAML or JSON experiment config")
        sp.add_argument("--seed", type=int, default=None, help="override the master seed")
        sp.add_argument("--workers", type=int, default=None, help="worker processes (0 = all cores)")
        sp.add_argument("--out", default=None, help="archive directory")
    sp = sub.add_parser("suite", help="run every experiment of a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--out", default=None, help="root directory for archives and summary.csv")
    sp = sub.add_parser("validate", help="check a config and print its hash")
    sp.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "suite":
            _, code = emit_suite(args.manifest, out=args.out, workers=args.workers)
            return code
        if args.command == "validate":
            cfg = parse_config(args.config)
            print(f"{cfg.kind} {config_hash(cfg)}")
            return 0
        cfg = parse_config(args.config, seed=args.seed)
        if cfg.kind != args.command:
            raise ConfigError([f"config kind {cfg.kind!r} does not match subcommand {args.command!r}"], args.config)
        report, path, runtime = run(cfg, out=args.out, workers=args.workers)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    h = report.headline()
    line = f"{report.theorem_tag}: {report.verdict}"
    if h["ratio"] is not None:
        line += f"  x={h['deepest_x']:.4g} ratio={h['ratio']:.4f} CI=[{h['ci_lo']:.4f}, {h['ci_hi']:.4f}]"
    print(line)
    print(f"archive: {path}  ({runtime:.1f}s)")
    return EXIT_CODES[report.verdict]


if __name__ == "__main__":
    sys.exit(main())
