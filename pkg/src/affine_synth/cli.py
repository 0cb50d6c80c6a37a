"""Command line entry point.

    affine-synth kernel|synth|analyze|converge|check --config <file>
                 [--format csv|json] [--out <path>]
    affine-synth check --list

Subcommands filter report rows by section (`check` keeps everything and is
also the one that understands the suite manifest, a JSON document with a
"configs" list naming shipped configs).  `--config` takes a path or the name
of a shipped config.  Exit code is 0 iff every pass flag in the (filtered)
report is true.  Wall time goes to stderr, never into the report.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .harness import (ConfigError, Report, emit_report, load_config,
                      load_shipped_config, run_experiment, shipped_configs)

_SECTIONS = {"kernel": ("kernel",), "synth": ("synth",),
             "analyze": ("analyze",), "converge": ("converge",),
             "check": ("kernel", "synth", "analyze", "converge")}


def _resolve_config(arg: str) -> dict:
    path = Path(arg)
    if path.exists():
        return json.loads(path.read_text())
    if arg in shipped_configs():
        return load_shipped_config(arg)
    raise SystemExit(f"config {arg!r}: no such file or shipped config "
                     f"(shipped: {', '.join(shipped_configs())})")


def _filter(report: Report, sections) -> Report:
    rows = [r for r in report.rows if r["section"] in sections]
    return Report(config=report.config, rows=rows, traces=report.traces,
                  environment=report.environment)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="affine-synth",
        description="bound, identity and convergence experiments for affine "
                    "synthesis/analysis operators")
    parser.add_argument("command", choices=sorted(_SECTIONS))
    parser.add_argument("--config", help="path or shipped config name")
    parser.add_argument("--format", choices=("csv", "json"), default="json")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--list", action="store_true",
                        help="list shipped configs and exit")
    args = parser.parse_args(argv)

    if args.list:
        for name in shipped_configs():
            print(name)
        return 0
    if not args.config:
        parser.error("--config is required (or use --list)")

    doc = _resolve_config(args.config)
    t0 = time.perf_counter()

    if "configs" in doc:  # suite manifest
        if args.command != "check":
            raise SystemExit("suite manifests run under the `check` command")
        ok = True
        texts = []
        for name in doc["configs"]:
            sub = _resolve_config(name)
            report = run_experiment(load_config(sub))
            ok = ok and report.all_passed
            texts.append(emit_report(report, args.format))
        sep = "" if args.format == "json" else ""
        text = ("\n" if args.format == "json" else "").join(texts)
        _write(text, args.out)
        print(f"suite: {len(doc['configs'])} configs in "
              f"{time.perf_counter() - t0:.1f}s", file=sys.stderr)
        return 0 if ok else 1

    try:
        cfg = load_config(doc)
        report = _filter(run_experiment(cfg), _SECTIONS[args.command])
    except ConfigError as e:
        raise SystemExit(f"invalid config field {e.field}: {e}")
    _write(emit_report(report, args.format), args.out)
    print(f"{cfg.name}: {len(report.rows)} rows in "
          f"{time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return 0 if report.all_passed else 1


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    sys.exit(main())
