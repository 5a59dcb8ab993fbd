"""Command-line entry point orchestrating the full pipeline.

Commands: sample, search, grade, aggregate, audit, report,
annotate-serve, mock-serve. Configuration comes from a single JSON file;
flags override file values. Exit status is 0 iff no error surfaced.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import report as report_mod
from .aggregate import Method, scaling_curve
from .annotate import AnnotationServer, AnnotationService
from .audit import (
    compute_metrics,
    detect_false_positives,
    f1_detection,
    length_stats,
    resolve_fp_flags,
)
from .clients import ModelClient
from .errors import CoverageError, FpscaleError, ValidationError
from .grading import grade
from .mock_server import MockModelServer, MockScript
from .pipeline import build_pools, load_config, run_sample, run_search
from .store import StoredRun, load_run, write_judge_verdicts, write_verdicts


def _parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise ValidationError(f"--bind expects host:port, got {bind!r}")
    return host, int(port)


def _parse_ns(text: str) -> list[int]:
    try:
        ns = [int(part) for part in text.split(",") if part]
    except ValueError:
        raise ValidationError(f"--ns expects a comma-separated integer list, got {text!r}") from None
    if not ns:
        raise ValidationError("--ns must name at least one N")
    return ns


def _parse_methods(text: str) -> list[Method]:
    try:
        return [Method(part.strip().upper()) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ValidationError(f"unknown method in --methods: {exc}") from None


def _config_overrides(args: argparse.Namespace) -> dict:
    return {
        key: getattr(args, attr)
        for key, attr in (
            ("method", "method"),
            ("n", "n"),
            ("beam_width", "beam_width"),
            ("lookahead", "lookahead"),
            ("iterations", "iterations"),
            ("tree_width", "tree_width"),
            ("max_depth", "max_depth"),
            ("exploration", "exploration"),
            ("seed", "seed"),
            ("out", "out"),
        )
        if hasattr(args, attr)
    }


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="pipeline configuration file (JSON)")
    parser.add_argument("--method", help="override the configured method")
    parser.add_argument("--n", type=int, help="samples per problem / search paths")
    parser.add_argument("--beam-width", dest="beam_width", type=int)
    parser.add_argument("--lookahead", type=int)
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--tree-width", dest="tree_width", type=int)
    parser.add_argument("--max-depth", dest="max_depth", type=int)
    parser.add_argument("--exploration", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="override the output directory")


def cmd_sample(args: argparse.Namespace) -> int:
    config = load_config(args.config, _config_overrides(args))
    run_dir = run_sample(config)
    print(run_dir)
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    config = load_config(args.config, _config_overrides(args))
    run_dir = run_search(config)
    print(run_dir)
    return 0


def cmd_grade(args: argparse.Namespace) -> int:
    run = load_run(args.run)
    if run.problems is None:
        raise ValidationError("run has no stored problems; cannot regrade")
    gold = {p.id: p.gold_answer for p in run.problems}
    verdicts = [
        grade(s.text, gold[s.problem_id], solution_id=s.solution_id) for s in run.solutions
    ]
    write_verdicts(run.run_dir, verdicts)
    correct = sum(1 for v in verdicts if v.correct)
    print(f"graded {len(verdicts)} solutions: {correct} correct")
    return 0


def cmd_aggregate(args: argparse.Namespace) -> int:
    run = load_run(args.run)
    pools = build_pools(run)
    ns = _parse_ns(args.ns)
    points = []
    for method in _parse_methods(args.methods):
        points.extend(scaling_curve(pools, ns, method))
    if args.out:
        report_mod.write_curves_csv(points, args.out)
        print(args.out)
    else:
        sys.stdout.write(report_mod.curves_to_csv(points))
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else None
    if config is None or config.judge is None:
        raise ValidationError("audit requires a config with a judge endpoint")
    run = load_run(args.run)
    with ModelClient(config.judge) as judge:
        result = detect_false_positives(run, judge)
    write_judge_verdicts(run.run_dir, result.verdicts)
    print(f"judged {len(result.verdicts)} auto-correct solutions")
    if result.unparseable:
        print(f"unparseable verdicts: {len(result.unparseable)}", file=sys.stderr)
    if run.labels:
        human_set = {sid for sid, fp in resolve_fp_flags(run.labels).items() if fp}
        universe = {s.solution_id for s in run.solutions}
        precision, recall, f1 = f1_detection(
            result.model_fp_set(), human_set, universe=universe
        )
        print(f"precision={precision:.3f} recall={recall:.3f} f1={f1:.3f}")
    return 0


def _run_report_sections(run: StoredRun, ns: list[int], methods: list[Method], manual: bool):
    sections: list[str] = []
    points = []
    labeled = bool(run.labels)
    if manual and not labeled:
        raise CoverageError(f"run {run.manifest.run_id}: manual metrics requested without labels")
    title = f"Run {run.manifest.run_id} ({run.manifest.method.value}, {run.manifest.policy_model})"
    sections.append(f"# {title}\n")
    metrics = None
    if labeled:
        metrics = compute_metrics(run.verdicts, run.labels)
        sections.append(report_mod.render_metrics_markdown(metrics))
        sections.append(report_mod.render_error_type_table(metrics.error_type_counts))
        rows = length_stats(run.solutions, run.verdicts, run.labels)
        sections.append(report_mod.render_length_table({run.manifest.dataset_id: rows}))
    else:
        total = len(run.verdicts)
        correct = sum(1 for v in run.verdicts if v.correct)
        auto = correct / total if total else 0.0
        sections.append(
            f"Automatic accuracy: {report_mod.format_rate(auto)} ({correct}/{total}); "
            "no labels stored, manual metrics unavailable.\n"
        )
    if ns and methods:
        pools = build_pools(run, require_labels=manual)
        for method in methods:
            points.extend(scaling_curve(pools, ns, method))
        sections.append(report_mod.render_curves_markdown(points))
    comparison = None
    if metrics is not None:
        comparison = (
            run.manifest.policy_model,
            metrics.automatic_accuracy,
            metrics.false_positive_rate,
        )
    return sections, points, comparison


def cmd_report(args: argparse.Namespace) -> int:
    run_dirs = [part for part in args.runs.split(",") if part]
    ns = _parse_ns(args.ns) if args.ns else []
    methods = _parse_methods(args.methods) if args.methods else []
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    sections: list[str] = []
    all_points = []
    comparisons = []
    for run_dir in run_dirs:
        run = load_run(run_dir)
        run_sections, points, comparison = _run_report_sections(run, ns, methods, args.manual)
        sections.extend(run_sections)
        all_points.extend(points)
        if comparison is not None:
            comparisons.append(comparison)
    if len(comparisons) > 1:
        sections.append(report_mod.render_comparison_table(comparisons))
    (out_dir / "report.md").write_text("\n".join(sections), encoding="utf-8")
    if all_points:
        report_mod.write_curves_csv(all_points, out_dir / "curves.csv")
    print(out_dir / "report.md")
    return 0


def cmd_annotate_serve(args: argparse.Namespace) -> int:
    host, port = _parse_bind(args.bind)
    service = AnnotationService(args.run)
    server = AnnotationServer(service, host=host, port=port, ui_dir=args.ui_dir)
    print(f"serving run {service.run_id} on {server.base_url}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_mock_serve(args: argparse.Namespace) -> int:
    host, port = _parse_bind(args.bind)
    script = MockScript.load(args.script) if args.script else None
    server = MockModelServer(script, host=host, port=port, latency=args.latency)
    print(f"mock endpoints on {server.base_url}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpscale", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample N solutions per problem and grade them")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("search", help="run step-level search (DVTS or MCTS)")
    _add_config_flags(p)
    p.set_defaults(fn=cmd_search)

    p = sub.add_parser("grade", help="re-grade a stored run")
    p.add_argument("--run", required=True, help="run directory")
    p.set_defaults(fn=cmd_grade)

    p = sub.add_parser("aggregate", help="compute scaling curves from a stored run")
    p.add_argument("--run", required=True)
    p.add_argument("--ns", required=True, help="comma-separated N values")
    p.add_argument("--methods", required=True, help="comma-separated methods (BON,SC,WSC,PASS)")
    p.add_argument("--out", help="CSV output path (stdout when omitted)")
    p.set_defaults(fn=cmd_aggregate)

    p = sub.add_parser("audit", help="run the judge over auto-correct solutions")
    p.add_argument("--run", required=True)
    p.add_argument("--config", required=True, help="config with a judge endpoint")
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("report", help="emit Markdown + CSV reports for stored runs")
    p.add_argument("--runs", required=True, help="comma-separated run directories")
    p.add_argument("--ns", help="comma-separated N values for curves")
    p.add_argument("--methods", help="comma-separated methods for curves")
    p.add_argument("--manual", action="store_true", help="require labels and manual metrics")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("annotate-serve", help="serve the annotation UI and label API")
    p.add_argument("--run", required=True)
    p.add_argument("--bind", default="127.0.0.1:8800")
    p.add_argument("--ui-dir", dest="ui_dir", help="static UI bundle directory")
    p.set_defaults(fn=cmd_annotate_serve)

    p = sub.add_parser("mock-serve", help="serve the deterministic mock model endpoints")
    p.add_argument("--bind", default="127.0.0.1:8900")
    p.add_argument("--script", help="scripted responses (JSONL fixture)")
    p.add_argument("--latency", type=float, default=0.0)
    p.set_defaults(fn=cmd_mock_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except FpscaleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
