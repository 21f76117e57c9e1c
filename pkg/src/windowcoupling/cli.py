"""Command-line pipeline: build plans, verify, sample, run the metric pipeline.

All randomness flows from the explicit ``--seed`` (default 0) through
labeled substreams, so identical inputs and seed produce byte-identical
artifacts.  Exit codes: 0 success, 1 verification failure, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import jsonio, streams, verify
from .engine import CouplingSampler, EnumerationCapError, NotConvergentError
from .skorohod import build_skorohod_coupling
from .version import __version__

DEFAULT_SEED = 0
DEFAULT_SAMPLES = 1000
DEFAULT_DEPTH = 2
DEFAULT_CAP = 1_000_000


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    spec: Path | None = None
    plan: Path | None = None
    report: Path | None = None
    out: Path | None = None
    seed: int = DEFAULT_SEED
    samples: int = DEFAULT_SAMPLES
    depth: int = DEFAULT_DEPTH
    backend: str | None = None
    cap: int = DEFAULT_CAP


class InputError(Exception):
    """Unusable input file or option; maps to exit code 2."""


def _load_json(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _cmd_build(config: RunConfig) -> int:
    assert config.spec is not None and config.out is not None
    doc = _load_json(config.spec)
    try:
        seq = jsonio.sequence_from_doc(doc)
        from .engine import build_plan

        plan = build_plan(seq)
    except NotConvergentError as exc:
        raise InputError(str(exc)) from exc
    except (KeyError, ValueError) as exc:
        raise InputError(f"{config.spec}: {exc}") from exc
    _write_text(config.out, jsonio.canonical_dumps(jsonio.plan_to_doc(plan)))
    print(f"plan written to {config.out}")
    return 0


def _cmd_verify(config: RunConfig) -> int:
    assert config.plan is not None
    doc = _load_json(config.plan)
    try:
        plan = jsonio.plan_from_doc(doc)
    except (KeyError, ValueError) as exc:
        raise InputError(f"{config.plan}: {exc}") from exc
    audit = verify.audit_plan(plan)
    mc = verify.mc_agreement(plan, config.samples, config.seed)
    report = verify.VerificationReport(
        exact_checks=audit.exact_checks,
        mc_checks=mc.mc_checks,
        deficit_trace=audit.deficit_trace,
        provenance={**audit.provenance, "seed": config.seed},
    )
    if config.out is not None:
        _write_text(config.out, jsonio.canonical_dumps(jsonio.report_to_doc(report)))
    sys.stdout.write(report.to_text())
    return 0 if report.all_passed else 1


def _cmd_sample(config: RunConfig) -> int:
    assert config.plan is not None
    doc = _load_json(config.plan)
    try:
        plan = jsonio.plan_from_doc(doc)
    except (KeyError, ValueError) as exc:
        raise InputError(f"{config.plan}: {exc}") from exc
    sampler = CouplingSampler(plan)
    lines = []
    for i in range(config.samples):
        derived = streams.derive_seed(config.seed, "sample", i)
        draw = sampler.sample(streams.stream(config.seed, "sample", i))
        lines.append(jsonio.compact_dumps(jsonio.sample_record(plan, draw, derived)))
    text = "\n".join(lines) + "\n"
    if config.out is not None:
        _write_text(config.out, text)
        print(f"{config.samples} samples written to {config.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_skorohod(config: RunConfig) -> int:
    assert config.spec is not None and config.out is not None
    doc = _load_json(config.spec)
    try:
        seq = jsonio.law_sequence_from_doc(doc, config.backend)
        coupling = build_skorohod_coupling(seq.model, seq, config.depth)
    except (KeyError, ValueError) as exc:
        raise InputError(f"{config.spec}: {exc}") from exc
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "tree.json", jsonio.canonical_dumps(jsonio.tree_to_doc(coupling.tree)))
    _write_text(out / "plan.json", jsonio.canonical_dumps(jsonio.plan_to_doc(coupling.plan)))

    audit = verify.audit_skorohod(coupling)
    mc = verify.mc_agreement(coupling, config.samples, config.seed)
    mc_checks = list(mc.mc_checks)
    try:
        from .engine import exact_joint_law

        joint = exact_joint_law(coupling.plan, config.cap)
        witness = None
        for n in range(1, coupling.plan.count + 1):
            if joint.marginal_member(n) != coupling.digit_sequence.member(n):
                witness = f"component {n} marginal differs"
                break
        if witness is None and joint.marginal_limit() != coupling.digit_sequence.limit:
            witness = "limit marginal differs"
        exact_checks = audit.exact_checks + (
            verify.ExactCheck("joint-law-marginals", witness is None, witness),
        )
    except EnumerationCapError:
        mc_checks.extend(
            verify.marginal_3sigma_checks(coupling, config.samples, config.seed)
        )
        exact_checks = audit.exact_checks
    report = verify.VerificationReport(
        exact_checks=exact_checks,
        mc_checks=tuple(mc_checks),
        deficit_trace=audit.deficit_trace,
        provenance={**audit.provenance, "seed": config.seed},
    )
    _write_text(out / "report.json", jsonio.canonical_dumps(jsonio.report_to_doc(report)))
    sys.stdout.write(report.to_text())
    return 0 if report.all_passed else 1


def _cmd_report(config: RunConfig) -> int:
    assert config.report is not None
    doc = _load_json(config.report)
    try:
        report = jsonio.report_from_doc(doc)
    except (KeyError, ValueError) as exc:
        raise InputError(f"{config.report}: {exc}") from exc
    text = report.to_text()
    if config.out is not None:
        _write_text(config.out, text)
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windowcoupling",
        description="Exact widening-window couplings and finite Skorohod representations.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    build = sub.add_parser("build", help="build a coupling plan from a sequence document")
    build.add_argument("--spec", type=Path, required=True, help="process sequence JSON")
    build.add_argument("--out", type=Path, required=True, help="output plan JSON")

    ver = sub.add_parser("verify", help="audit a plan and run Monte Carlo guards")
    ver.add_argument("--plan", type=Path, required=True, help="plan JSON")
    ver.add_argument("--out", type=Path, help="write the report JSON here")
    ver.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    ver.add_argument("--seed", type=int, default=DEFAULT_SEED)

    smp = sub.add_parser("sample", help="stream coupled samples as JSON lines")
    smp.add_argument("--plan", type=Path, required=True, help="plan JSON")
    smp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    smp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    smp.add_argument("--out", type=Path, help="output JSONL (default stdout)")

    sko = sub.add_parser(
        "skorohod", help="metric pipeline: tree, digitization, plan, report"
    )
    sko.add_argument("--spec", type=Path, required=True, help="metric law sequence JSON")
    sko.add_argument("--out", type=Path, required=True, help="output directory")
    sko.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    sko.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    sko.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sko.add_argument("--backend", choices=("table", "linf"), default=None)
    sko.add_argument("--cap", type=int, default=DEFAULT_CAP)

    rep = sub.add_parser("report", help="render an existing report to text")
    rep.add_argument("report", type=Path, help="report JSON")
    rep.add_argument("--out", type=Path, help="write the text here too")

    return parser


_COMMANDS = {
    "build": _cmd_build,
    "verify": _cmd_verify,
    "sample": _cmd_sample,
    "skorohod": _cmd_skorohod,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = RunConfig(
        subcommand=args.subcommand,
        spec=getattr(args, "spec", None),
        plan=getattr(args, "plan", None),
        report=getattr(args, "report", None),
        out=getattr(args, "out", None),
        seed=getattr(args, "seed", DEFAULT_SEED),
        samples=getattr(args, "samples", DEFAULT_SAMPLES),
        depth=getattr(args, "depth", DEFAULT_DEPTH),
        backend=getattr(args, "backend", None),
        cap=getattr(args, "cap", DEFAULT_CAP),
    )
    for path in (config.spec, config.plan, config.report):
        if path is not None and not path.exists():
            print(f"error: input file {path} does not exist", file=sys.stderr)
            return 2
    try:
        return _COMMANDS[config.subcommand](config)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
