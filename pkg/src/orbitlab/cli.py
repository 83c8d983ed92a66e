"""Command-line driver: ``orbitlab estimate | verify | report``.

Exit codes: 0 success, 1 bound violations or failed claims, 2 config or input errors.
"""

from __future__ import annotations

import argparse
import glob
import json
import math
import re
import sys
from html import escape
from pathlib import Path

import numpy as np

from . import catalog
from . import distortion as dl
from . import group_actions as ga
from .config import ExperimentConfig, load_experiment, load_suite
from .errors import ConfigError, OrbitLabError
from .io import write_binary, write_table_csv

EXIT_OK, EXIT_VIOLATIONS, EXIT_CONFIG = 0, 1, 2

REPORT_COLUMNS = ["label", "alpha_hat", "beta_hat", "kappa_hat", "claim_low", "claim_high", "n_pairs", "violations", "seed"]
SUMMARY_COLUMNS = ["label", "kappa_hat", "claim", "margin"]


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", label).strip("_") or "experiment"


def build_handle(cfg: ExperimentConfig):
    handle = catalog.build(cfg.embedding, cfg.params)
    if cfg.action is not None:
        declared = ga.spec_to_record(ga.spec_from_record(cfg.action))
        actual = ga.spec_to_record(handle.action) if handle.action is not None else None
        if declared != actual:
            raise ConfigError(f"action {cfg.action} does not match embedding {cfg.embedding!r}", key="action")
    if cfg.claim:
        changes = {}
        if "alpha" in cfg.claim:
            changes["alpha_claim"] = float(cfg.claim["alpha"])
        if "beta" in cfg.claim:
            changes["beta_claim"] = float(cfg.claim["beta"])
        if "kappa" in cfg.claim:
            k = cfg.claim["kappa"]
            changes["kappa_claim"] = tuple(float(v) for v in k) if isinstance(k, list) else float(k)
        if "exact" in cfg.claim:
            changes["kappa_exact"] = bool(cfg.claim["exact"])
        try:
            handle = handle.with_claims(**changes)
        except ValueError as exc:
            raise ConfigError(str(exc), key="claim") from None
    return handle


def _run_experiment(cfg: ExperimentConfig, threads: int) -> dict:
    handle = build_handle(cfg)
    label = cfg.label or handle.name
    try:
        pairs = dl.sample_pairs(handle, cfg.samples, cfg.mix, cfg.seed)
    except dl.BadMix as exc:
        raise ConfigError(str(exc), key="mix") from None
    report = dl.estimate_distortion(handle, pairs, threads=threads, seed=cfg.seed, label=label)
    out = report.to_json()
    bad = report.violation_count
    if cfg.restarts:
        budget = dl.Budget(cfg.samples, cfg.restarts, cfg.seed, threads, cfg.mix)
        result = dl.verify_claims(handle, budget=budget)
        out["adversarial"] = {
            "max_ratio": result.adversarial_max,
            "min_ratio": result.adversarial_min,
            "kappa": result.kappa_adversarial,
            "passed": result.passed,
            "reasons": result.reasons,
        }
        bad += 0 if result.passed else 1
    return {"handle": handle, "report": report, "json": out, "failed": bad > 0, "pairs": pairs}


def cmd_estimate(args) -> int:
    cfg = load_experiment(args.config)
    if args.seed_override is not None:
        cfg.seed = args.seed_override
    res = _run_experiment(cfg, args.threads)
    label = res["json"]["label"]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = Path(cfg.output.get("json", out_dir / f"{_slug(label)}.json"))
    csv_path = Path(cfg.output.get("csv", out_dir / f"{_slug(label)}.csv"))
    json_path.write_text(json.dumps(res["json"], indent=2, sort_keys=True) + "\n")
    write_table_csv(csv_path, [res["report"].csv_row()], REPORT_COLUMNS)
    if "vectors" in cfg.output:
        write_binary(cfg.output["vectors"], res["handle"].evaluate(res["pairs"][0]))
    status = "FAIL" if res["failed"] else "OK"
    print(f"{status} {label}: kappa_hat={res['report'].kappa_hat:.6f} violations={res['report'].violation_count} -> {json_path}")
    return EXIT_VIOLATIONS if res["failed"] else EXIT_OK


def cmd_verify(args) -> int:
    suite = load_suite(args.suite)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not suite.experiments:
        print(f"warning: suite {suite.name!r} has no experiments", file=sys.stderr)
    summary = []
    failed = 0
    for cfg in suite.experiments:
        if args.seed_override is not None:
            cfg.seed = args.seed_override
        handle = build_handle(cfg)
        label = cfg.label or handle.name
        budget = dl.Budget(cfg.samples, max(cfg.restarts, 1), cfg.seed, args.threads, cfg.mix)
        result = dl.verify_claims(handle, budget=budget)
        result.report.label = label
        record = result.to_json()
        (out_dir / f"{_slug(label)}.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
        verdict = "PASS" if result.passed else "FAIL"
        failed += not result.passed
        detail = "; ".join(result.reasons)
        print(f"{verdict} {label}: kappa_hat={result.report.kappa_hat:.6f} kappa_adv={result.kappa_adversarial:.6f}"
              + (f" ({detail})" if detail else ""))
        summary.append({"label": label, "passed": result.passed, "kappa_hat": result.report.kappa_hat,
                        "kappa_adversarial": result.kappa_adversarial, "claim": record["claim"], "reasons": result.reasons})
    (out_dir / "verify_summary.json").write_text(
        json.dumps({"suite": suite.name, "passed": failed == 0, "results": summary}, indent=2, sort_keys=True) + "\n"
    )
    return EXIT_VIOLATIONS if failed else EXIT_OK


def _claim_high(claim):
    if claim is None:
        return None
    return float(claim[1]) if isinstance(claim, list) else float(claim)


def cmd_report(args) -> int:
    paths: list[str] = []
    for pattern in args.reports:
        matches = sorted(glob.glob(pattern))
        if not matches:
            print(f"error: no report matches {pattern!r}", file=sys.stderr)
            return EXIT_CONFIG
        paths.extend(matches)
    rows = []
    for p in paths:
        try:
            rec = json.loads(Path(p).read_text())
            if isinstance(rec, dict) and "suite" in rec and "results" in rec:
                continue  # verify summaries aggregate other reports
            kappa = float(rec["kappa_hat"])
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot read report {p}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        high = _claim_high(rec.get("claim"))
        rows.append({
            "label": rec.get("label", Path(p).stem),
            "kappa_hat": kappa,
            "claim": json.dumps(rec.get("claim")),
            "claim_high": high,
            "margin": None if high is None else high - kappa,
        })
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_table_csv(out_dir / "summary.csv", rows, SUMMARY_COLUMNS)
    (out_dir / "summary.svg").write_text(render_svg(rows))
    print(f"wrote {len(rows)} row(s) to {out_dir / 'summary.csv'}")
    return EXIT_OK


def chart_axis(rows) -> tuple[float, float]:
    top = max((r["kappa_hat"] for r in rows if math.isfinite(r["kappa_hat"])), default=1.0)
    return 1.0, max(top * 1.1, 1.0 + 1e-9)


def render_svg(rows) -> str:
    """Horizontal bars of kappa_hat with claim ticks; the axis spans ``[1, 1.1 * max kappa_hat]``."""
    lo, hi = chart_axis(rows)
    left, width, bar, gap = 220, 480, 18, 8
    height = 40 + len(rows) * (bar + gap) + 30
    scale = lambda v: left + width * (min(max(v, lo), hi) - lo) / (hi - lo)  # noqa: E731
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{left + width + 40}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<text x="{left}" y="16">kappa_hat (bars) vs claim (ticks); axis [{lo:.3f}, {hi:.3f}]</text>',
    ]
    for i, r in enumerate(rows):
        y = 30 + i * (bar + gap)
        parts.append(f'<text x="{left - 6}" y="{y + bar - 5}" text-anchor="end">{escape(str(r["label"]))}</text>')
        parts.append(f'<rect x="{left}" y="{y}" width="{scale(r["kappa_hat"]) - left:.2f}" height="{bar}" fill="#4a7ab5"/>')
        if r.get("claim_high") is not None:
            cx = scale(r["claim_high"])
            parts.append(f'<line x1="{cx:.2f}" x2="{cx:.2f}" y1="{y - 2}" y2="{y + bar + 2}" stroke="#c0392b" stroke-width="2"/>')
    axis_y = 30 + len(rows) * (bar + gap) + 4
    parts.append(f'<line x1="{left}" x2="{left + width}" y1="{axis_y}" y2="{axis_y}" stroke="black"/>')
    for t in np.linspace(lo, hi, 5):
        x = scale(t)
        parts.append(f'<text x="{x:.2f}" y="{axis_y + 14}" text-anchor="middle">{t:.3f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbitlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="reports", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads for pair evaluation")
        p.add_argument("--seed-override", type=int, default=None, help="replace every config seed")

    p = sub.add_parser("estimate", help="estimate distortion for one experiment config")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("verify", help="verify every claim in a suite")
    p.add_argument("--suite", required=True)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="aggregate report JSON files into CSV and SVG")
    p.add_argument("reports", nargs="+", help="report files or glob patterns")
    p.add_argument("--out", default="reports")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        key = f" [key: {exc.key}]" if exc.key else ""
        print(f"config error{key}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OrbitLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
