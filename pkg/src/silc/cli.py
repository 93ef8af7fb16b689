"""Command-line entry point: ``silc analyze|sanitize|corpus``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import AnalysisConfig, ConfigError, load_config
from .report import EXIT_USAGE, render_corpus, run_analyze, run_corpus, run_sanitize


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="silc", description="Blame-carrying analysis and "
                                 "sanitizer synthesis for MiniC client/vendor code.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON analysis config")
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--unroll-bound", type=int, help="loop unrolling bound (overrides config)")
        p.add_argument("--max-disjuncts", type=int, help="states kept per program point")

    a = sub.add_parser("analyze", help="report manifest bugs and their blame")
    a.add_argument("files", nargs="+")
    common(a)
    s = sub.add_parser("sanitize", help="generate sanitizer wrappers for integration bugs")
    s.add_argument("files", nargs="+")
    s.add_argument("--out-dir", required=True, help="directory for patched files and diffs")
    common(s)
    c = sub.add_parser("corpus", help="run the scenario corpus (bundled one by default)")
    c.add_argument("dir", nargs="?", default=None)
    common(c)
    return ap


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0
    try:
        cfg = load_config(args.config) if args.config else AnalysisConfig()
        knobs = {k: v for k, v in (("unroll_bound", args.unroll_bound),
                                   ("max_disjuncts", args.max_disjuncts)) if v is not None}
        if knobs:
            cfg = cfg.merged(knobs)
    except ConfigError as e:
        print(f"silc: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "corpus":
        if args.dir and not Path(args.dir).is_dir():
            print(f"silc: no such corpus directory: {args.dir}", file=sys.stderr)
            return EXIT_USAGE
        table, code = run_corpus(args.dir, cfg)
        _emit(render_corpus(table) if args.format == "text" else json.dumps(table, indent=2) + "\n",
              args.out)
        return code
    if args.command == "analyze":
        report, code = run_analyze(args.files, cfg)
    else:
        report, code = run_sanitize(args.files, cfg, args.out_dir)
    _emit(report.render_text() if args.format == "text" else report.dumps(), args.out)
    for r in report.files:
        if r.error:
            print(f"silc: {r.path}: {r.error}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
