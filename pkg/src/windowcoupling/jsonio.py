"""JSON wire formats for every artifact the pipeline reads or writes.

Rationals serialize as "num/den" strings and points as comma-joined
coordinate symbols, so no float ever enters or leaves a file.  Dumps
are canonical (sorted keys, fixed separators), which makes artifacts
byte-identical across runs with the same inputs and seed.
"""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any

from .engine import (
    CouplingPlan,
    CouplingSample,
    DeficitEntry,
    ExactCheck,
    KernelRow,
    MeasureLadder,
    WindowSchedule,
)
from .measures import (
    Alphabet,
    MassFunction,
    Point,
    ProcessSequenceSpec,
    ProductSpace,
    TailRule,
)
from .skorohod import (
    LINF_BACKEND,
    TABLE_BACKEND,
    AtomicLaw,
    LawSequence,
    MetricSpaceModel,
    PartitionTree,
)


def fraction_to_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def parse_fraction(text: Any) -> Fraction:
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, str):
        return Fraction(text)
    raise ValueError(f"expected a rational string, got {text!r}")


def canonical_dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def compact_dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def document_sha256(doc: Any) -> str:
    return hashlib.sha256(compact_dumps(doc).encode("utf-8")).hexdigest()


# -- laws and process sequences ---------------------------------------------


def law_to_doc(law: MassFunction) -> dict:
    return {
        law.space.format_point(z): fraction_to_str(v)
        for z, v in law.mass.items()
    }


def law_from_doc(space: ProductSpace, doc: dict) -> MassFunction:
    return MassFunction(
        space, {space.parse_point(key): parse_fraction(value) for key, value in doc.items()}
    )


def space_to_doc(space: ProductSpace) -> list[list[str]]:
    return [list(a.symbols) for a in space.coordinates]


def space_from_doc(doc: list) -> ProductSpace:
    return ProductSpace(tuple(Alphabet(tuple(symbols)) for symbols in doc))


def sequence_to_doc(seq: ProcessSequenceSpec) -> dict:
    return {
        "space": space_to_doc(seq.space),
        "members": [law_to_doc(m) for m in seq.members],
        "limit": law_to_doc(seq.limit),
        "tail": {"eventually_equal": seq.tail.eventually_equal},
    }


def sequence_from_doc(doc: dict) -> ProcessSequenceSpec:
    space = space_from_doc(doc["space"])
    return ProcessSequenceSpec(
        space=space,
        members=tuple(law_from_doc(space, m) for m in doc["members"]),
        limit=law_from_doc(space, doc["limit"]),
        tail=TailRule(int(doc["tail"]["eventually_equal"])),
    )


# -- coupling plans -----------------------------------------------------------


def plan_to_doc(plan: CouplingPlan) -> dict:
    seq = plan.sequence
    windows = plan.schedule.windows
    return {
        "sequence": sequence_to_doc(seq),
        "schedule": {
            "windows": list(windows),
            "horizon": plan.schedule.horizon,
        },
        "ladder": {
            "floors": [law_to_doc(f) for f in plan.ladder.floors],
            "floor_ratios": [
                {
                    seq.space.format_point(z): fraction_to_str(v)
                    for z, v in ratios.items()
                }
                for ratios in plan.ladder.floor_ratios
            ],
            "envelopes": [law_to_doc(e) for e in plan.ladder.envelopes],
        },
        "index_law": law_to_doc(plan.index_law),
        "increment_laws": [law_to_doc(v) for v in plan.increment_laws],
        "residual_laws": [law_to_doc(w) for w in plan.residual_laws],
        "kernels": [
            {
                seq.space.window(windows[n]).format_point(prefix): {
                    "source": row.source,
                    "mass": law_to_doc(row.law),
                }
                for prefix, row in rows.items()
            }
            for n, rows in enumerate(plan.kernels)
        ],
    }


def plan_from_doc(doc: dict) -> CouplingPlan:
    """Rebuild a plan without re-validating invariants.

    Loading is intentionally permissive so that a corrupted artifact can
    be reconstructed and then failed by the audit with a witness.
    """
    seq = sequence_from_doc(doc["sequence"])
    space = seq.space
    schedule = WindowSchedule(
        tuple(int(k) for k in doc["schedule"]["windows"]),
        int(doc["schedule"]["horizon"]),
    )
    ladder = MeasureLadder(
        floors=tuple(law_from_doc(space, f) for f in doc["ladder"]["floors"]),
        floor_ratios=tuple(
            {
                space.parse_point(key): parse_fraction(value)
                for key, value in ratios.items()
            }
            for ratios in doc["ladder"]["floor_ratios"]
        ),
        envelopes=tuple(law_from_doc(space, e) for e in doc["ladder"]["envelopes"]),
    )
    count = schedule.horizon + 1
    index_space = ProductSpace(
        (Alphabet(tuple(str(n) for n in range(1, count + 1))),)
    )
    kernels = []
    for n, rows in enumerate(doc["kernels"]):
        window_space = space.window(schedule.windows[n])
        kernels.append(
            {
                window_space.parse_point(key): KernelRow(
                    law_from_doc(space, row["mass"]), row["source"]
                )
                for key, row in rows.items()
            }
        )
    return CouplingPlan(
        sequence=seq,
        schedule=schedule,
        ladder=ladder,
        index_law=law_from_doc(index_space, doc["index_law"]),
        increment_laws=tuple(
            law_from_doc(space, v) for v in doc["increment_laws"]
        ),
        residual_laws=tuple(
            law_from_doc(space.window(schedule.windows[n]), w)
            for n, w in enumerate(doc["residual_laws"])
        ),
        kernels=tuple(kernels),
    )


def sample_record(plan: CouplingPlan, draw: CouplingSample, seed: int) -> dict:
    space = plan.sequence.space
    return {
        "seed": seed,
        "N": draw.index,
        "Z_hat": space.format_point(draw.limit_point),
        "Z_hat_n": [space.format_point(z) for z in draw.member_points],
    }


# -- metric models and law sequences -----------------------------------------


def model_to_doc(model: MetricSpaceModel) -> dict:
    doc: dict[str, Any] = {"points": list(model.labels)}
    if model.backend == LINF_BACKEND:
        doc["metric"] = "linf"
        doc["coords"] = [
            [fraction_to_str(c) for c in row] for row in model.coords or ()
        ]
    else:
        doc["dist"] = [
            [fraction_to_str(d) for d in row] for row in model.dist
        ]
    if not all(model.separable_support):
        doc["separable_support"] = list(model.separable_support)
    return doc


def model_from_doc(doc: dict, backend: str | None = None) -> MetricSpaceModel:
    has_coords = "coords" in doc
    if backend is None:
        backend = LINF_BACKEND if has_coords else TABLE_BACKEND
    if backend == LINF_BACKEND and not has_coords:
        raise ValueError("linf backend requires a coords field")
    if has_coords:
        coords = [[parse_fraction(c) for c in row] for row in doc["coords"]]
        labels = doc.get("points") or [f"p{i}" for i in range(len(coords))]
    else:
        labels = doc["points"]
    support = doc.get("separable_support")
    if backend == LINF_BACKEND:
        return MetricSpaceModel.from_coords(labels, coords, support)
    if has_coords:
        base = MetricSpaceModel.from_coords(labels, coords, support)
        return MetricSpaceModel.from_table(labels, base.dist, support)
    dist = [[parse_fraction(d) for d in row] for row in doc["dist"]]
    return MetricSpaceModel.from_table(labels, dist, support)


def atomic_law_to_doc(model: MetricSpaceModel, law: AtomicLaw) -> dict:
    return {
        model.labels[i]: fraction_to_str(v) for i, v in sorted(law.masses.items())
    }


def atomic_law_from_doc(model: MetricSpaceModel, doc: dict) -> AtomicLaw:
    return AtomicLaw(
        {model.index(label): parse_fraction(value) for label, value in doc.items()}
    )


def law_sequence_to_doc(seq: LawSequence) -> dict:
    return {
        "model": model_to_doc(seq.model),
        "members": [atomic_law_to_doc(seq.model, m) for m in seq.members],
        "limit": atomic_law_to_doc(seq.model, seq.limit),
        "tail": {"eventually_equal": seq.tail.eventually_equal},
    }


def law_sequence_from_doc(doc: dict, backend: str | None = None) -> LawSequence:
    model = model_from_doc(doc["model"], backend)
    return LawSequence(
        model=model,
        members=tuple(atomic_law_from_doc(model, m) for m in doc["members"]),
        limit=atomic_law_from_doc(model, doc["limit"]),
        tail=TailRule(int(doc["tail"]["eventually_equal"])),
    )


def tree_to_doc(tree: PartitionTree) -> dict:
    model = tree.model
    return {
        "depth": tree.depth,
        "backend": model.backend,
        "levels": [
            [
                {
                    "path": list(cell.path),
                    "members": [model.labels[i] for i in cell.members],
                    "diameter": fraction_to_str(cell.diameter),
                    "limit_mass": fraction_to_str(tree.law.mass_of(cell.members)),
                    "certificate": [
                        [model.labels[c], fraction_to_str(r)]
                        for c, r in cell.certificate
                    ],
                }
                for cell in level
            ]
            for level in tree.levels
        ],
        "point_paths": {
            model.labels[i]: list(path) for i, path in enumerate(tree.paths)
        },
    }


# -- verification reports -----------------------------------------------------


def report_to_doc(report) -> dict:
    return {
        "exact_checks": [
            {"name": c.name, "passed": c.passed, "witness": c.witness}
            for c in report.exact_checks
        ],
        "mc_checks": [
            {
                "name": c.name,
                "samples": c.samples,
                "failures": c.failures,
                "note": c.note,
            }
            for c in report.mc_checks
        ],
        "deficit_trace": [
            {
                "index": e.index,
                "window": e.window,
                "deficit": fraction_to_str(e.deficit),
                "bound": fraction_to_str(e.bound),
            }
            for e in report.deficit_trace
        ],
        "provenance": dict(report.provenance),
        "all_passed": report.all_passed,
    }


def report_from_doc(doc: dict):
    from .verify import McCheck, VerificationReport

    return VerificationReport(
        exact_checks=tuple(
            ExactCheck(c["name"], bool(c["passed"]), c["witness"])
            for c in doc["exact_checks"]
        ),
        mc_checks=tuple(
            McCheck(c["name"], int(c["samples"]), int(c["failures"]), c["note"])
            for c in doc["mc_checks"]
        ),
        deficit_trace=tuple(
            DeficitEntry(
                int(e["index"]),
                int(e["window"]),
                parse_fraction(e["deficit"]),
                parse_fraction(e["bound"]),
            )
            for e in doc["deficit_trace"]
        ),
        provenance=dict(doc["provenance"]),
    )
