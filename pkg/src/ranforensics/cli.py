"""Command-line entry point: ``ran-forensics <command> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from . import advisor, fit, report, synth
from .diagnose import Diagnosis, EvidenceKind, ThresholdConfig, classify
from .errors import ForensicsError
from .ingest import load_study
from .kpi import DEFAULT_HEAD_TRIM_S, DEFAULT_TAIL_TRIM_S


def _add_thresholds(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("diagnosis thresholds")
    for f in fields(ThresholdConfig):
        g.add_argument(f"--{f.name.replace('_', '-')}", type=float, default=f.default,
                       help=f"default {f.default}")


def _thresholds(args) -> ThresholdConfig:
    return ThresholdConfig(**{f.name: getattr(args, f.name) for f in fields(ThresholdConfig)})


def cmd_analyze(args) -> int:
    bundles = load_study(args.study)
    rep = report.analyze_bundles(bundles, args.head_trim, args.tail_trim, _thresholds(args))
    for path in report.write_report(rep, args.out):
        print(path)
    return 0


def cmd_fit(args) -> int:
    text = Path(args.points_file).read_text() if args.points_file else args.points
    if not text:
        raise fit.FitError("give --points or --points-file")
    result = fit.fit_power_law(fit.parse_points(text))
    if args.json:
        print(json.dumps(result.to_dict(), sort_keys=True))
    else:
        print(f"a={result.a:.2f} b={result.b:.4f} r2={result.r2_log:.4f}")
    return 0


def cmd_diagnose(args) -> int:
    rep = report.load_report(args.report)
    th = _thresholds(args)
    out = {}
    for stack in rep.stacks:
        prior = rep.diagnoses.get(stack)
        # artifact-level findings cannot be recomputed from KPI rows; carry them over
        carried = [e for e in (prior.evidence if prior else ()) if e.kind is EvidenceKind.TelemetryStall]
        d = classify(rep.kpi_rows[stack], th, carried)
        notes = list(d.data_quality_notes)
        if prior:
            notes += [n for n in prior.data_quality_notes if n not in notes]
        out[stack] = Diagnosis(d.verdict, d.evidence, tuple(notes)).to_dict()
    doc = {"diagnoses": out, "thresholds": th.to_dict()}
    print(json.dumps(doc, sort_keys=True, indent=2))
    return 0


def cmd_advise(args) -> int:
    matrix = advisor.load_matrix()
    q = advisor.RequirementQuery.parse(matrix, args.require or [])
    ranked = advisor.query(matrix, q)
    doc = {
        "requirements": [[p, lvl.label] for p, lvl in q.requirements],
        "platforms": ranked,
        "ranking": "toolkit convention: native count on required rows, then overall, then name",
        "matrix_version": matrix.version,
    }
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        for pl in ranked:
            print(pl)
    return 0


def cmd_progression(args) -> int:
    plan = advisor.progression(args.claim_class)
    if args.json:
        print(json.dumps(plan.to_dict(), indent=2))
    else:
        for i, st in enumerate(plan.stages, 1):
            print(f"{i}. {st.environment}: {st.rationale}")
    return 0


def cmd_synth(args) -> int:
    if args.scenario.startswith("builtin:"):
        name = args.scenario.split(":", 1)[1]
        if name not in synth.BUILTIN_SCENARIOS:
            raise synth.SynthError(f"unknown builtin scenario {name!r}; choose from {', '.join(synth.BUILTIN_SCENARIOS)}")
        truths = synth.BUILTIN_SCENARIOS[name](args.seed)
    else:
        truths = synth.load_scenario(Path(args.scenario).read_text())
    if args.dump_scenario:
        Path(args.dump_scenario).write_text(synth.dump_scenario(truths))
    print(synth.generate_study(truths, args.out))
    return 0


def cmd_report(args) -> int:
    rep = report.load_report(args.report)
    for path in report.write_report(rep, args.out, args.format):
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ran-forensics", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="ingest a study and write report.txt/report.json/plot CSVs")
    p.add_argument("--study", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--head-trim", type=float, default=DEFAULT_HEAD_TRIM_S)
    p.add_argument("--tail-trim", type=float, default=DEFAULT_TAIL_TRIM_S)
    _add_thresholds(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="power-law fit over n:t points")
    p.add_argument("--points", help='e.g. "1:114.59,3:65.21,6:35.09,12:16.35"')
    p.add_argument("--points-file", help="file with one n,t pair per line")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="re-classify the KPI rows of a prior report.json")
    p.add_argument("--report", required=True)
    _add_thresholds(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("advise", help="query the capability matrix")
    p.add_argument("--require", action="append", metavar="PROPERTY=LEVEL")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_advise)

    p = sub.add_parser("progression", help="staged evaluation plan for a claim class")
    p.add_argument("claim_class", choices=[c.value for c in advisor.ClaimClass])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_progression)

    p = sub.add_parser("synth", help="generate a study from a scenario file or builtin:<name>")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-scenario", help="also write the resolved scenario JSON here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="re-render a report.json")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", action="append", choices=report.FORMATS)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "format", None) is None and args.command == "report":
        args.format = list(report.FORMATS)
    try:
        return args.func(args)
    except ForensicsError as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error module={exc.module} kind={type(exc).__name__} message={json.dumps(msg)}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error module=io kind={type(exc).__name__} message={json.dumps(str(exc))}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
