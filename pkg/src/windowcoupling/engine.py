"""Widening-window coupling construction for discrete-time process laws.

Given a sequence of laws converging in density in every finite window,
this module materializes the coupling in four stages:

1. a non-decreasing window schedule whose per-index mass deficit is
   certified below ``2**-n``;
2. a ladder of sub-probability measures: window infima extended to the
   full space along the limit law's conditional kernel (``floors``),
   their density ratios against the limit law, and the running lower
   envelopes whose masses telescope to one (``envelopes``);
3. the mixture decomposition: the law of the agreement index N, the
   envelope increment laws (full-space components), the residual window
   laws used while N has not been reached, and per-prefix extension
   kernels that turn window agreement into a full coupling;
4. an exact sampler and, for small instances, brute-force enumeration
   of the whole joint law as an independent oracle.

Every quantity is an exact rational; plan construction verifies all
structural invariants and refuses to return an inconsistent plan.
"""
from __future__ import annotations

import itertools
import math
from bisect import bisect_right
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Mapping, NamedTuple

from .measures import (
    ONE,
    ZERO,
    Alphabet,
    MassFunction,
    Point,
    ProcessSequenceSpec,
    ProductSpace,
    conditional_given_prefix,
    density_convergence,
    uniform_on_cylinder,
    window_infimum,
    window_marginal,
)


class NotConvergentError(ValueError):
    """The sequence fails density convergence at some window length."""


class EnumerationCapError(ValueError):
    """Joint-law enumeration would exceed the configured support cap."""


class InternalInvariantError(RuntimeError):
    """A construction invariant failed; this signals a bug, not bad input."""


class ExactCheck(NamedTuple):
    name: str
    passed: bool
    witness: str | None


class DeficitEntry(NamedTuple):
    index: int
    window: int
    deficit: Fraction
    bound: Fraction


@dataclass(frozen=True)
class WindowSchedule:
    """Non-decreasing window lengths k_1..k_{M+1}, ending at the full width."""

    windows: tuple[int, ...]
    horizon: int

    def __post_init__(self) -> None:
        if len(self.windows) != self.horizon + 1:
            raise ValueError("schedule must have horizon + 1 entries")

    @property
    def length(self) -> int:
        return len(self.windows)

    def window(self, n: int) -> int:
        return self.windows[n - 1]


@dataclass(frozen=True)
class MeasureLadder:
    """The measure ladder underlying the mixture decomposition.

    ``floors[n-1]`` is the window infimum at the scheduled window,
    extended to the full space; ``floor_ratios[n-1]`` its density with
    respect to the limit law on the limit's support; ``envelopes[n-1]``
    the measure with density equal to the minimum of all ratios from
    index n on.  Envelopes are pointwise non-decreasing and the last
    one equals the limit law exactly.
    """

    floors: tuple[MassFunction, ...]
    floor_ratios: tuple[dict[Point, Fraction], ...]
    envelopes: tuple[MassFunction, ...]

    def envelope(self, n: int) -> MassFunction:
        """The n-th envelope; n = 0 gives the zero measure."""
        if n == 0:
            return MassFunction(self.envelopes[0].space, {})
        return self.envelopes[n - 1]


@dataclass(frozen=True)
class KernelRow:
    """One extension-kernel row: a full-space law concentrated on a prefix.

    Rows whose prefix has zero mass under the member law are fallbacks
    kept only for totality of the data structure; the sampler can never
    reach them.
    """

    law: MassFunction
    source: str  # "member" | "limit" | "uniform"

    @property
    def unused(self) -> bool:
        return self.source != "member"


@dataclass(frozen=True)
class CouplingPlan:
    """Fully materialized coupling of a process-law sequence.

    ``index_law`` is the law of the agreement index N on {1..M+1};
    ``increment_laws[n-1]`` the full-space component drawn when N = n;
    ``residual_laws[n-1]`` the window law used for component n while
    N > n; ``kernels[n-1]`` maps every k_n-prefix to its extension row.
    """

    sequence: ProcessSequenceSpec
    schedule: WindowSchedule
    ladder: MeasureLadder
    index_law: MassFunction
    increment_laws: tuple[MassFunction, ...]
    residual_laws: tuple[MassFunction, ...]
    kernels: tuple[dict[Point, KernelRow], ...]

    @property
    def count(self) -> int:
        """Number of coupled components, horizon + 1."""
        return self.sequence.horizon + 1

    def index_probability(self, n: int) -> Fraction:
        return self.index_law[(n - 1,)]

    def index_tail_probability(self, n: int) -> Fraction:
        """P(N > n)."""
        return ONE - sum(
            (self.index_probability(m) for m in range(1, n + 1)), ZERO
        )


@dataclass(frozen=True)
class CouplingSample:
    """One realization (N, limit point, per-index member points)."""

    index: int
    limit_point: Point
    member_points: tuple[Point, ...]

    def agreement_holds(self, schedule: WindowSchedule) -> bool:
        """Window prefixes of components with n >= N match the limit point."""
        for n in range(self.index, len(self.member_points) + 1):
            k = schedule.window(n)
            if self.member_points[n - 1][:k] != self.limit_point[:k]:
                return False
        return True


def window_deficit(seq: ProcessSequenceSpec, n: int, k: int) -> Fraction:
    """Mass missing from the k-window infimum starting at index n."""
    return ONE - window_infimum(seq, n, k).total_mass


def largest_feasible_windows(seq: ProcessSequenceSpec) -> list[int]:
    """Per index n, the largest window whose deficit is at most 2**-n.

    The deficit is non-decreasing in the window length, so scanning from
    the full width down finds the maximum; window 0 always has deficit 0.
    """
    full = seq.space.width
    caps: list[int] = []
    for n in range(1, seq.horizon + 2):
        bound = Fraction(1, 2**n)
        for k in range(full, -1, -1):
            if window_deficit(seq, n, k) <= bound:
                caps.append(k)
                break
    return caps


def build_schedule(seq: ProcessSequenceSpec) -> WindowSchedule:
    """The pointwise-largest non-decreasing schedule meeting all deficit bounds.

    Taking the running minimum of the per-index largest feasible windows
    over all later indices dominates every other valid schedule: any
    non-decreasing choice is bounded at index n by each later index's
    feasible maximum.  Greedily maximizing index by index instead can
    dead-end when a later bound tightens faster than its deficit shrinks.
    """
    for k in range(seq.space.width + 1):
        verdict = density_convergence(seq, k)
        if not verdict.converges:
            raise NotConvergentError(
                f"no density convergence at window length {k}"
            )
    caps = largest_feasible_windows(seq)
    windows: list[int] = []
    running = caps[-1]
    for cap in reversed(caps):
        running = min(running, cap)
        windows.append(running)
    windows.reverse()
    if windows[-1] != seq.space.width:
        raise InternalInvariantError("schedule does not reach the full window")
    return WindowSchedule(tuple(windows), seq.horizon)


def extend_window_law(window_law: MassFunction, full_law: MassFunction) -> MassFunction:
    """Extend a window law to the full space along full_law's suffix kernel.

    The result places, above each prefix, the window law's prefix mass
    split proportionally to full_law's conditional suffix masses.  Its
    window marginal reproduces the input exactly, so total mass is
    preserved.  Requires the window law's support to be dominated by
    full_law's window marginal.
    """
    k = window_law.space.width
    full_prefix = window_marginal(full_law, k)
    out: dict[Point, Fraction] = {}
    for z, value in full_law.mass.items():
        prefix_mass = window_law.mass.get(z[:k], ZERO)
        if prefix_mass > 0:
            out[z] = prefix_mass * value / full_prefix[z[:k]]
    extended = MassFunction(full_law.space, out)
    if extended.total_mass != window_law.total_mass:
        # only possible if some window mass sits on a zero-mass prefix
        raise InternalInvariantError(
            "window law not dominated by the extending law's marginal"
        )
    return extended


def extended_floor(
    seq: ProcessSequenceSpec, schedule: WindowSchedule, n: int
) -> MassFunction:
    """The scheduled window infimum at index n, extended to the full space."""
    return extend_window_law(
        window_infimum(seq, n, schedule.window(n)), seq.limit
    )


def build_ladder(seq: ProcessSequenceSpec, schedule: WindowSchedule) -> MeasureLadder:
    floors = tuple(
        extended_floor(seq, schedule, n) for n in range(1, seq.horizon + 2)
    )
    limit = seq.limit
    ratios = tuple(
        {z: law[z] / q for z, q in limit.mass.items()} for law in floors
    )
    count = seq.horizon + 1
    envelopes = []
    for n in range(1, count + 1):
        env = {
            z: q * min(ratios[i][z] for i in range(n - 1, count))
            for z, q in limit.mass.items()
        }
        envelopes.append(MassFunction(seq.space, env))
    return MeasureLadder(floors, ratios, tuple(envelopes))


def build_plan(seq: ProcessSequenceSpec, validate: bool = True) -> CouplingPlan:
    """Assemble schedule, ladder, mixture laws and extension kernels.

    With ``validate`` (the default) every structural invariant is
    re-checked by exact arithmetic and a failure raises
    InternalInvariantError rather than returning a bad plan.
    """
    schedule = build_schedule(seq)
    ladder = build_ladder(seq, schedule)
    count = seq.horizon + 1
    limit = seq.limit

    index_space = ProductSpace(
        (Alphabet(tuple(str(n) for n in range(1, count + 1))),)
    )
    cumulative = [env.total_mass for env in ladder.envelopes]
    index_mass: dict[Point, Fraction] = {}
    previous = ZERO
    for n in range(1, count + 1):
        index_mass[(n - 1,)] = cumulative[n - 1] - previous
        previous = cumulative[n - 1]
    index_law = MassFunction(index_space, index_mass)

    increments: list[MassFunction] = []
    residuals: list[MassFunction] = []
    kernels: list[dict[Point, KernelRow]] = []
    for n in range(1, count + 1):
        prob = index_law[(n - 1,)]
        env = ladder.envelope(n)
        prev = ladder.envelope(n - 1)
        if prob > 0:
            increments.append(
                MassFunction(
                    seq.space,
                    {z: (v - prev[z]) / prob for z, v in env.mass.items()},
                )
            )
        else:
            # never sampled; the limit law is the canonical filler
            increments.append(limit)

        k = schedule.window(n)
        member = seq.member(n)
        member_window = window_marginal(member, k)
        tail_prob = ONE - cumulative[n - 1]
        env_window = window_marginal(env, k)
        if tail_prob > 0:
            residuals.append(
                MassFunction(
                    member_window.space,
                    {
                        z: (v - env_window[z]) / tail_prob
                        for z, v in member_window.mass.items()
                    },
                )
            )
        else:
            residuals.append(member_window)

        limit_window = window_marginal(limit, k)
        rows: dict[Point, KernelRow] = {}
        for prefix in member_window.space.points():
            if member_window[prefix] > 0:
                rows[prefix] = KernelRow(
                    conditional_given_prefix(member, prefix), "member"
                )
            elif limit_window[prefix] > 0:
                rows[prefix] = KernelRow(
                    conditional_given_prefix(limit, prefix), "limit"
                )
            else:
                rows[prefix] = KernelRow(
                    uniform_on_cylinder(seq.space, prefix), "uniform"
                )
        kernels.append(rows)

    plan = CouplingPlan(
        sequence=seq,
        schedule=schedule,
        ladder=ladder,
        index_law=index_law,
        increment_laws=tuple(increments),
        residual_laws=tuple(residuals),
        kernels=tuple(kernels),
    )
    if validate:
        failures = [c for c in plan_exact_checks(plan) if not c.passed]
        if failures:
            raise InternalInvariantError(
                "plan invariants violated: "
                + "; ".join(f"{c.name} ({c.witness})" for c in failures)
            )
    return plan


def deficit_entries(plan: CouplingPlan) -> list[DeficitEntry]:
    seq = plan.sequence
    return [
        DeficitEntry(
            n,
            plan.schedule.window(n),
            window_deficit(seq, n, plan.schedule.window(n)),
            Fraction(1, 2**n),
        )
        for n in range(1, plan.count + 1)
    ]


def _leq_witness(p: MassFunction, q: MassFunction) -> Point | None:
    for z, v in p.mass.items():
        if v > q[z]:
            return z
    return None


def plan_exact_checks(plan: CouplingPlan) -> list[ExactCheck]:
    """Every structural invariant of a plan, as exact pass/fail results.

    Used both by plan construction (which refuses to return a failing
    plan) and by the audit report.  Each check runs in isolation: an
    exception raised while checking a corrupted plan is reported as a
    failure of that check rather than aborting the audit.
    """
    seq = plan.sequence
    schedule = plan.schedule
    ladder = plan.ladder
    count = plan.count
    full = seq.space.width
    checks: list[ExactCheck] = []

    def run(name: str, fn) -> None:
        try:
            witness = fn()
        except Exception as exc:  # corrupted data may break check arithmetic
            witness = f"check raised {type(exc).__name__}: {exc}"
        checks.append(ExactCheck(name, witness is None, witness))

    def mismatch(acc: Mapping[Point, Fraction], law: MassFunction) -> Point | None:
        for z in set(acc) | set(law.mass):
            if acc.get(z, ZERO) != law[z]:
                return z
        return None

    def schedule_monotone() -> str | None:
        for a, b in itertools.pairwise(schedule.windows):
            if b < a:
                return f"window drops from {a} to {b}"
        return None

    def schedule_full() -> str | None:
        if schedule.windows[-1] != full:
            return f"final window {schedule.windows[-1]} != width {full}"
        return None

    def deficit_certificates() -> str | None:
        for entry in deficit_entries(plan):
            if entry.deficit > entry.bound:
                return f"n={entry.index}: deficit {entry.deficit} > {entry.bound}"
        return None

    def ladder_monotone() -> str | None:
        for n in range(1, count + 1):
            bad = _leq_witness(ladder.envelope(n - 1), ladder.envelope(n))
            if bad is not None:
                return f"envelope {n - 1} exceeds envelope {n} at {bad}"
        return None

    def ladder_below_floor() -> str | None:
        for n in range(1, count + 1):
            bad = _leq_witness(ladder.envelope(n), ladder.floors[n - 1])
            if bad is not None:
                return f"envelope {n} exceeds floor {n} at {bad}"
        return None

    def ladder_final() -> str | None:
        if ladder.envelopes[-1] != seq.limit:
            return "last envelope differs from the limit law"
        return None

    def ladder_mass_bound() -> str | None:
        for n in range(1, count + 1):
            gap = ONE - ladder.envelope(n).total_mass
            bound = Fraction(1, 2 ** (n - 1))
            if gap > bound:
                return f"n={n}: envelope mass gap {gap} > {bound}"
        return None

    def window_domination() -> str | None:
        for n in range(1, count + 1):
            k = schedule.window(n)
            bad = _leq_witness(
                window_marginal(ladder.envelope(n), k),
                window_marginal(seq.member(n), k),
            )
            if bad is not None:
                return f"n={n}: envelope window exceeds member law at {bad}"
        return None

    def index_law_masses() -> str | None:
        running = ZERO
        for n in range(1, count + 1):
            running += plan.index_probability(n)
            if running != ladder.envelope(n).total_mass:
                return f"P(N<={n}) = {running} != envelope mass"
        if not plan.index_law.is_probability:
            return f"index law total {plan.index_law.total_mass} != 1"
        return None

    def increment_normalization() -> str | None:
        for n in range(1, count + 1):
            prob = plan.index_probability(n)
            env, prev = ladder.envelope(n), ladder.envelope(n - 1)
            support = set(env.mass) | set(plan.increment_laws[n - 1].mass)
            for z in support:
                expected = env[z] - prev[z]
                got = prob * plan.increment_laws[n - 1][z] if prob > 0 else ZERO
                if got != expected:
                    return (
                        f"n={n} at {z}: increment law times P(N={n})"
                        f" gives {got}, envelope increment is {expected}"
                    )
        return None

    def residual_normalization() -> str | None:
        for n in range(1, count + 1):
            tail = plan.index_tail_probability(n)
            if tail == 0:
                continue
            k = schedule.window(n)
            member_window = window_marginal(seq.member(n), k)
            env_window = window_marginal(ladder.envelope(n), k)
            support = set(member_window.mass) | set(plan.residual_laws[n - 1].mass)
            for z in support:
                expected = member_window[z] - env_window[z]
                if tail * plan.residual_laws[n - 1][z] != expected:
                    return f"n={n} at {z}: residual law times P(N>{n}) is off"
        return None

    def floor_window_consistency() -> str | None:
        for n in range(1, count + 1):
            k = schedule.window(n)
            if window_marginal(ladder.floors[n - 1], k) != window_infimum(seq, n, k):
                return f"n={n}: floor window marginal != window infimum"
        return None

    def kernel_rows_concentrated() -> str | None:
        for n, rows in enumerate(plan.kernels, start=1):
            k = schedule.window(n)
            for prefix, row in rows.items():
                if not row.law.is_probability:
                    return f"n={n}, prefix {prefix}: row mass {row.law.total_mass}"
                marginal = window_marginal(row.law, k)
                if marginal.mass != {prefix: ONE}:
                    return f"n={n}: row not concentrated on prefix {prefix}"
        return None

    def kernel_rows_member_conditional() -> str | None:
        for n, rows in enumerate(plan.kernels, start=1):
            k = schedule.window(n)
            member = seq.member(n)
            member_window = window_marginal(member, k)
            for prefix, row in rows.items():
                if member_window[prefix] > 0:
                    if row.source != "member" or row.law != conditional_given_prefix(
                        member, prefix
                    ):
                        return f"n={n}: row at {prefix} is not the member conditional"
        return None

    def mixture_reconstructs_limit() -> str | None:
        acc: dict[Point, Fraction] = {}
        for n in range(1, count + 1):
            prob = plan.index_probability(n)
            if prob > 0:
                for z, v in plan.increment_laws[n - 1].mass.items():
                    acc[z] = acc.get(z, ZERO) + prob * v
        bad = mismatch(acc, seq.limit)
        if bad is not None:
            return f"weighted increment laws differ from the limit law at {bad}"
        return None

    def window_mixture_reconstructs_members() -> str | None:
        for n in range(1, count + 1):
            k = schedule.window(n)
            acc: dict[Point, Fraction] = {}
            for m in range(1, n + 1):
                prob = plan.index_probability(m)
                if prob > 0:
                    for z, v in window_marginal(
                        plan.increment_laws[m - 1], k
                    ).mass.items():
                        acc[z] = acc.get(z, ZERO) + prob * v
            tail = plan.index_tail_probability(n)
            if tail > 0:
                for z, v in plan.residual_laws[n - 1].mass.items():
                    acc[z] = acc.get(z, ZERO) + tail * v
            acc = {z: v for z, v in acc.items() if v != 0}
            bad = mismatch(acc, window_marginal(seq.member(n), k))
            if bad is not None:
                return f"n={n}: window mixture misses the member law at {bad}"
        return None

    run("schedule-monotone", schedule_monotone)
    run("schedule-reaches-full-window", schedule_full)
    run("window-deficit-certificates", deficit_certificates)
    run("ladder-monotone", ladder_monotone)
    run("ladder-below-floor", ladder_below_floor)
    run("ladder-final-equals-limit", ladder_final)
    run("ladder-mass-bound", ladder_mass_bound)
    run("window-domination", window_domination)
    run("index-law-matches-envelope-mass", index_law_masses)
    run("increment-normalization", increment_normalization)
    run("residual-normalization", residual_normalization)
    run("floor-window-consistency", floor_window_consistency)
    run("kernel-rows-concentrated", kernel_rows_concentrated)
    run("kernel-rows-member-conditional", kernel_rows_member_conditional)
    run("mixture-reconstructs-limit", mixture_reconstructs_limit)
    run("window-mixture-reconstructs-members", window_mixture_reconstructs_members)
    return checks


class CategoricalTable:
    """Exact categorical sampler over a probability mass function.

    Masses are rescaled to integer weights over their common denominator
    so a single ``randrange`` draw is distributed exactly; points are
    kept in sorted order to make the draw sequence reproducible.
    """

    __slots__ = ("points", "cumulative", "total")

    def __init__(self, law: MassFunction) -> None:
        if not law.is_probability:
            raise ValueError("can only sample probability laws")
        self.points = sorted(law.mass)
        denom = math.lcm(*(law.mass[z].denominator for z in self.points))
        running = 0
        cumulative: list[int] = []
        for z in self.points:
            frac = law.mass[z]
            running += frac.numerator * (denom // frac.denominator)
            cumulative.append(running)
        if running != denom:
            raise ValueError("weights do not sum to the common denominator")
        self.cumulative = cumulative
        self.total = denom

    def draw(self, rng: Random) -> Point:
        r = rng.randrange(self.total)
        return self.points[bisect_right(self.cumulative, r)]


class CouplingSampler:
    """Reusable exact sampler for one plan.

    Draw order per sample, fixed for reproducibility: the agreement
    index N, then the full limit point, then for each component index
    n = 1..M+1 the window prefix (only when n < N) followed by the
    kernel-row draw for that prefix.
    """

    def __init__(self, plan: CouplingPlan) -> None:
        self.plan = plan
        self._index_table = CategoricalTable(plan.index_law)
        self._increment_tables = [CategoricalTable(law) for law in plan.increment_laws]
        self._residual_tables = [CategoricalTable(law) for law in plan.residual_laws]
        self._row_tables: list[dict[Point, CategoricalTable]] = [
            {} for _ in range(plan.count)
        ]

    def _row_table(self, n: int, prefix: Point) -> CategoricalTable:
        cache = self._row_tables[n - 1]
        table = cache.get(prefix)
        if table is None:
            rows = self.plan.kernels[n - 1]
            if prefix not in rows:
                raise InternalInvariantError(
                    f"no kernel row for prefix {prefix!r} at index {n}"
                )
            table = CategoricalTable(rows[prefix].law)
            cache[prefix] = table
        return table

    def sample(self, rng: Random) -> CouplingSample:
        plan = self.plan
        index = self._index_table.draw(rng)[0] + 1
        limit_point = self._increment_tables[index - 1].draw(rng)
        members: list[Point] = []
        for n in range(1, plan.count + 1):
            if n < index:
                prefix = self._residual_tables[n - 1].draw(rng)
            else:
                prefix = limit_point[: plan.schedule.window(n)]
            members.append(self._row_table(n, prefix).draw(rng))
        return CouplingSample(index, limit_point, tuple(members))


# keeps strong references, hence bounded; keys stay valid while entries live
_SAMPLER_CACHE: "OrderedDict[int, CouplingSampler]" = OrderedDict()
_SAMPLER_CACHE_LIMIT = 8


def sample(plan: CouplingPlan, rng: Random) -> CouplingSample:
    """Draw one coupled realization; see CouplingSampler for draw order."""
    cached = _SAMPLER_CACHE.get(id(plan))
    if cached is None or cached.plan is not plan:
        cached = CouplingSampler(plan)
        _SAMPLER_CACHE[id(plan)] = cached
        while len(_SAMPLER_CACHE) > _SAMPLER_CACHE_LIMIT:
            _SAMPLER_CACHE.popitem(last=False)
    else:
        _SAMPLER_CACHE.move_to_end(id(plan))
    return cached.sample(rng)


def _tail_mixture_laws(plan: CouplingPlan) -> dict[int, MassFunction]:
    """Per component n with P(N > n) > 0, the law of the component on that event."""
    mixes: dict[int, MassFunction] = {}
    for n in range(1, plan.count + 1):
        if plan.index_tail_probability(n) == 0:
            continue
        acc: dict[Point, Fraction] = {}
        rows = plan.kernels[n - 1]
        for prefix, weight in plan.residual_laws[n - 1].mass.items():
            for z, v in rows[prefix].law.mass.items():
                acc[z] = acc.get(z, ZERO) + weight * v
        mixes[n] = MassFunction(plan.sequence.space, acc)
    return mixes


def joint_support_size(plan: CouplingPlan) -> int:
    """Exact support size of the joint law enumerated by exact_joint_law."""
    mixes = _tail_mixture_laws(plan)
    windows = plan.schedule.windows
    total = 0
    for m in range(1, plan.count + 1):
        if plan.index_probability(m) == 0:
            continue
        for z in plan.increment_laws[m - 1].mass:
            combos = 1
            for n in range(1, plan.count + 1):
                if n >= m:
                    combos *= len(plan.kernels[n - 1][z[: windows[n - 1]]].law.mass)
                else:
                    combos *= len(mixes[n].mass)
            total += combos
    return total


@dataclass(frozen=True)
class JointLaw:
    """Brute-force enumeration of the sampler's joint law.

    Entries map (N, limit point, member points) to exact mass.  The
    marginal accessors recompute laws by summation over entries, making
    this an independent oracle for the mixture identities.
    """

    plan: CouplingPlan
    mass: Mapping[tuple[int, Point, tuple[Point, ...]], Fraction]

    @property
    def total_mass(self) -> Fraction:
        return sum(self.mass.values(), ZERO)

    def index_marginal(self) -> MassFunction:
        acc: dict[Point, Fraction] = {}
        for (m, _, _), v in self.mass.items():
            acc[(m - 1,)] = acc.get((m - 1,), ZERO) + v
        return MassFunction(self.plan.index_law.space, acc)

    def marginal_limit(self) -> MassFunction:
        acc: dict[Point, Fraction] = {}
        for (_, z, _), v in self.mass.items():
            acc[z] = acc.get(z, ZERO) + v
        return MassFunction(self.plan.sequence.space, acc)

    def marginal_member(self, n: int) -> MassFunction:
        acc: dict[Point, Fraction] = {}
        for (_, _, pts), v in self.mass.items():
            acc[pts[n - 1]] = acc.get(pts[n - 1], ZERO) + v
        return MassFunction(self.plan.sequence.space, acc)

    def agreement_mass(self) -> Fraction:
        windows = self.plan.schedule.windows
        total = ZERO
        for (m, z, pts), v in self.mass.items():
            if all(
                pts[n - 1][: windows[n - 1]] == z[: windows[n - 1]]
                for n in range(m, len(pts) + 1)
            ):
                total += v
        return total


def exact_joint_law(plan: CouplingPlan, cap: int = 1_000_000) -> JointLaw:
    """Enumerate the exact joint law of (N, limit point, member points).

    Components are conditionally independent given N and the limit
    point, each with the kernel-row law of its prefix (the residual
    window law mixed over prefixes when n < N).  Raises
    EnumerationCapError when the joint support would exceed ``cap``.
    """
    size = joint_support_size(plan)
    if size > cap:
        raise EnumerationCapError(
            f"joint support size {size} exceeds cap {cap}"
        )
    mixes = _tail_mixture_laws(plan)
    windows = plan.schedule.windows
    entries: dict[tuple[int, Point, tuple[Point, ...]], Fraction] = {}
    for m in range(1, plan.count + 1):
        prob = plan.index_probability(m)
        if prob == 0:
            continue
        for z, vz in plan.increment_laws[m - 1].mass.items():
            base = prob * vz
            component_laws = [
                plan.kernels[n - 1][z[: windows[n - 1]]].law if n >= m else mixes[n]
                for n in range(1, plan.count + 1)
            ]
            for combo in itertools.product(
                *(law.mass.items() for law in component_laws)
            ):
                weight = base
                for _, w in combo:
                    weight *= w
                entries[(m, z, tuple(pt for pt, _ in combo))] = weight
    return JointLaw(plan, entries)
