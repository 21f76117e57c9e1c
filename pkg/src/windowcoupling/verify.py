"""Certification and reporting for plans, trees and samplers.

Exact invariants are audited by rational arithmetic and either pass or
fail with a pointwise witness.  Monte Carlo suites guard the sampler
implementation only: agreement and distance guarantees hold surely by
construction, so any violation is a bug, while empirical-versus-exact
law comparisons use explicit 3-sigma style thresholds recorded in the
report rather than hidden constants.  Reports are deterministic
functions of (input, seed, version).
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from . import jsonio, streams
from .engine import (
    CouplingPlan,
    CouplingSampler,
    DeficitEntry,
    ExactCheck,
    build_plan,
    deficit_entries,
    joint_support_size,
    plan_exact_checks,
)
from .measures import (
    ZERO,
    Alphabet,
    MassFunction,
    ProcessSequenceSpec,
    ProductSpace,
    TailRule,
)
from .skorohod import (
    AtomicLaw,
    LawSequence,
    MetricSpaceModel,
    SkorohodCoupling,
    decode_sample,
    distance_violations,
    tree_exact_checks,
)
from .version import __version__


class McCheck(NamedTuple):
    name: str
    samples: int
    failures: int
    note: str

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass(frozen=True)
class VerificationReport:
    exact_checks: tuple[ExactCheck, ...]
    mc_checks: tuple[McCheck, ...]
    deficit_trace: tuple[DeficitEntry, ...]
    provenance: dict

    @property
    def all_exact_passed(self) -> bool:
        return all(c.passed for c in self.exact_checks)

    @property
    def all_passed(self) -> bool:
        return self.all_exact_passed and all(c.passed for c in self.mc_checks)

    def to_text(self) -> str:
        lines = ["verification report"]
        for key in sorted(self.provenance):
            lines.append(f"{key}: {self.provenance[key]}")
        if self.exact_checks:
            lines.append("exact checks:")
            for check in self.exact_checks:
                if check.passed:
                    lines.append(f"  PASS {check.name}")
                else:
                    lines.append(f"  FAIL {check.name}: {check.witness}")
        if self.deficit_trace:
            lines.append("deficit trace:")
            for entry in self.deficit_trace:
                lines.append(
                    f"  n={entry.index} window={entry.window}"
                    f" deficit={entry.deficit} bound={entry.bound}"
                )
        if self.mc_checks:
            lines.append("monte carlo checks:")
            for mc in self.mc_checks:
                verdict = "PASS" if mc.passed else "FAIL"
                lines.append(
                    f"  {verdict} {mc.name}: {mc.failures} failures"
                    f" in {mc.samples} samples ({mc.note})"
                )
        lines.append("overall: " + ("PASS" if self.all_passed else "FAIL"))
        return "\n".join(lines) + "\n"


def _plan_provenance(plan: CouplingPlan, seed: int | None) -> dict:
    return {
        "spec_sha256": jsonio.document_sha256(jsonio.sequence_to_doc(plan.sequence)),
        "seed": seed,
        "version": __version__,
    }


def _coupling_provenance(coupling: SkorohodCoupling, seed: int | None) -> dict:
    doc = jsonio.law_sequence_to_doc(coupling.laws)
    return {
        "spec_sha256": jsonio.document_sha256(doc),
        "seed": seed,
        "version": __version__,
    }


def audit_plan(plan: CouplingPlan) -> VerificationReport:
    """Run every exact invariant of the coupling construction."""
    return VerificationReport(
        exact_checks=tuple(plan_exact_checks(plan)),
        mc_checks=(),
        deficit_trace=tuple(deficit_entries(plan)),
        provenance=_plan_provenance(plan, None),
    )


def audit_skorohod(coupling: SkorohodCoupling) -> VerificationReport:
    """Exact plan invariants plus partition-tree invariants."""
    return VerificationReport(
        exact_checks=tuple(plan_exact_checks(coupling.plan))
        + tuple(tree_exact_checks(coupling.tree)),
        mc_checks=(),
        deficit_trace=tuple(deficit_entries(coupling.plan)),
        provenance=_coupling_provenance(coupling, None),
    )


def _empirical_tv(counts: dict, law: MassFunction, samples: int) -> Fraction:
    points = set(counts) | set(law.mass)
    return (
        sum(
            (abs(Fraction(counts.get(z, 0), samples) - law[z]) for z in points),
            ZERO,
        )
        / 2
    )


def _tv_check(name: str, counts: dict, law: MassFunction, samples: int) -> McCheck:
    tv = _empirical_tv(counts, law, samples)
    threshold = 3 * math.sqrt(len(law.mass) / samples)
    note = f"TV {float(tv):.6f} vs threshold 3*sqrt({len(law.mass)}/{samples}) = {threshold:.6f}"
    return McCheck(name, samples, 0 if tv <= threshold else 1, note)


def mc_agreement(
    target: CouplingPlan | SkorohodCoupling, samples: int, seed: int
) -> VerificationReport:
    """Sample-based guard of the surely-true coupling guarantees.

    Counts violations of the window-agreement guarantee (and, for a
    metric coupling, the distance guarantee), which must be zero, and
    compares the empirical law of the agreement index against its exact
    law in total variation.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if isinstance(target, SkorohodCoupling):
        plan = target.plan
        coupling: SkorohodCoupling | None = target
        provenance = _coupling_provenance(target, seed)
    else:
        plan = target
        coupling = None
        provenance = _plan_provenance(target, seed)

    sampler = CouplingSampler(plan)
    agreement_failures = 0
    distance_failures = 0
    index_counts: dict[tuple[int, ...], int] = {}
    point_counts: dict[tuple[int, ...], int] = {}
    for i in range(samples):
        rng = streams.stream(seed, "sample", i)
        draw = sampler.sample(rng)
        if not draw.agreement_holds(plan.schedule):
            agreement_failures += 1
        index_counts[(draw.index - 1,)] = index_counts.get((draw.index - 1,), 0) + 1
        point_counts[draw.limit_point] = point_counts.get(draw.limit_point, 0) + 1
        if coupling is not None:
            decoded = decode_sample(coupling, draw)
            if distance_violations(coupling, decoded):
                distance_failures += 1

    checks = [
        McCheck(
            "window-agreement-violations",
            samples,
            agreement_failures,
            "must be zero: agreement holds surely by construction",
        )
    ]
    if coupling is not None:
        checks.append(
            McCheck(
                "distance-guarantee-violations",
                samples,
                distance_failures,
                "must be zero: the shared cell has diameter below the bound",
            )
        )
    checks.append(
        _tv_check("index-law-total-variation", index_counts, plan.index_law, samples)
    )
    checks.append(
        _tv_check(
            "limit-marginal-total-variation",
            point_counts,
            plan.sequence.limit,
            samples,
        )
    )
    return VerificationReport(
        exact_checks=(),
        mc_checks=tuple(checks),
        deficit_trace=(),
        provenance=provenance,
    )


def marginal_3sigma_checks(
    coupling: SkorohodCoupling, samples: int, seed: int
) -> list[McCheck]:
    """Per-point binomial checks of the decoded marginals against the inputs.

    Fallback route for instances whose joint law exceeds the enumeration
    cap; the +1 slack absorbs integer-count discreteness at tiny masses.
    """
    counts: list[dict[int, int]] = [dict() for _ in range(coupling.plan.count + 1)]
    sampler = CouplingSampler(coupling.plan)
    for i in range(samples):
        rng = streams.stream(seed, "sample", i)
        draw = decode_sample(coupling, sampler.sample(rng))
        for n in range(1, coupling.plan.count + 1):
            pt = draw.member_points[n - 1]
            counts[n - 1][pt] = counts[n - 1].get(pt, 0) + 1
        counts[-1][draw.point] = counts[-1].get(draw.point, 0) + 1
    checks: list[McCheck] = []
    targets = [
        coupling.laws.member(n) for n in range(1, coupling.plan.count + 1)
    ] + [coupling.laws.limit]
    names = [f"decoded-marginal-3sigma-member-{n}" for n in range(1, coupling.plan.count + 1)]
    names.append("decoded-marginal-3sigma-limit")
    for name, target, got in zip(names, targets, counts):
        failures = 0
        worst = 0.0
        for idx in set(target.masses) | set(got):
            p = float(target[idx])
            slack = 3 * math.sqrt(samples * p * (1 - p)) + 1
            dev = abs(got.get(idx, 0) - samples * p)
            worst = max(worst, dev - slack)
            if dev > slack:
                failures += 1
        checks.append(
            McCheck(
                name,
                samples,
                failures,
                f"per-point |count - S*p| <= 3*sqrt(S*p*(1-p)) + 1; worst slack excess {worst:.2f}",
            )
        )
    return checks


# ---------------------------------------------------------------------------
# Random instance generation for meta-tests.  Sizes are kept small enough
# that the brute-force joint enumeration stays affordable; instances whose
# joint support would be too large are rejected and redrawn.
# ---------------------------------------------------------------------------

_LETTERS = "abc"


def random_rational_pmf(rng: random.Random, size: int, max_weight: int = 8) -> list[Fraction]:
    while True:
        weights = [rng.randint(0, max_weight) for _ in range(size)]
        total = sum(weights)
        if total > 0:
            return [Fraction(w, total) for w in weights]


def random_process_spec(
    rng: random.Random,
    max_coordinates: int = 3,
    max_alphabet: int = 3,
    max_members: int = 4,
    max_weight: int = 8,
) -> ProcessSequenceSpec:
    width = rng.randint(1, max_coordinates)
    coordinates = tuple(
        Alphabet(tuple(_LETTERS[: rng.randint(1, max_alphabet)]))
        for _ in range(width)
    )
    space = ProductSpace(coordinates)
    points = list(space.points())

    def pmf() -> MassFunction:
        values = random_rational_pmf(rng, len(points), max_weight)
        return MassFunction(space, dict(zip(points, values)))

    count = rng.randint(1, max_members)
    return ProcessSequenceSpec(
        space=space,
        members=tuple(pmf() for _ in range(count)),
        limit=pmf(),
        tail=TailRule(count),
    )


def random_enumerable_plan(
    rng: random.Random, cap: int = 200_000, **spec_kwargs
) -> tuple[ProcessSequenceSpec, CouplingPlan]:
    """A random spec and its plan, redrawn until the joint law fits the cap."""
    while True:
        seq = random_process_spec(rng, **spec_kwargs)
        plan = build_plan(seq)
        if joint_support_size(plan) <= cap:
            return seq, plan


def random_metric_model(
    rng: random.Random,
    max_points: int = 6,
    dim: int = 2,
    grid: int = 6,
    partial_support: bool = False,
) -> MetricSpaceModel:
    count = rng.randint(1, max_points)
    coords: set[tuple[Fraction, ...]] = set()
    while len(coords) < count:
        coords.add(
            tuple(
                Fraction(rng.randint(0, grid), rng.choice((1, 2, 4)))
                for _ in range(dim)
            )
        )
    rows = sorted(coords)
    labels = tuple(f"p{i}" for i in range(count))
    if partial_support and count > 1:
        flags = [True] * count
        flags[rng.randrange(count)] = False
        if not any(flags):
            flags[0] = True
        support: tuple[bool, ...] | None = tuple(flags)
    else:
        support = None
    return MetricSpaceModel.from_coords(labels, rows, support)


def random_law_sequence(
    rng: random.Random,
    model: MetricSpaceModel,
    max_members: int = 3,
    max_weight: int = 8,
) -> LawSequence:
    support = model.support_indices()
    count = rng.randint(1, max_members)

    def pmf(indices: list[int]) -> AtomicLaw:
        values = random_rational_pmf(rng, len(indices), max_weight)
        return AtomicLaw(dict(zip(indices, values)))

    everything = list(range(model.size))
    return LawSequence(
        model=model,
        members=tuple(pmf(everything) for _ in range(count)),
        limit=pmf(support),
        tail=TailRule(count),
    )
