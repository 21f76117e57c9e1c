"""Almost-surely convergent couplings on finite metric spaces.

Pipeline: certify a nested family of continuity partitions with cell
diameters shrinking like 1/k, digitize each atomic law into the process
of its partition-cell indices (terminal coordinate carrying the point
itself), hand the digit process sequence to the coupling engine, and
decode the coupled trajectories back to metric points.  Window
agreement of the digit processes then forces the decoded points into a
shared small-diameter cell, which yields the distance guarantee
``d(X_n, X) < 1/k_n`` from the agreement index on.

Two backends: an explicit rational distance table (finite ambient
topology, boundaries empty, continuity certificates vacuous) and
rational coordinates under the max-metric (ambient Euclidean-space
topology, where ball radii must dodge the finitely many realized
distances to keep sphere masses at zero).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Iterable, Mapping

from .engine import (
    CouplingPlan,
    CouplingSample,
    ExactCheck,
    build_plan,
    sample as sample_plan,
)
from .measures import (
    ONE,
    ZERO,
    Alphabet,
    DensityConvergence,
    MassFunction,
    Point,
    ProcessSequenceSpec,
    ProductSpace,
    TailRule,
)

TABLE_BACKEND = "table"
LINF_BACKEND = "linf"


class MetricModelError(ValueError):
    """The distance table is not an exact metric on the labeled points."""


class SeparabilityError(ValueError):
    """The limit law puts mass outside the designated separable support."""


@dataclass(frozen=True)
class MetricSpaceModel:
    """Finite labeled metric space with exact rational distances.

    ``separable_support`` flags the points forming the set the limit law
    must live on.  The ``linf`` backend additionally carries rational
    coordinates; its distance table is the max-metric, which keeps every
    realized distance rational.
    """

    labels: tuple[str, ...]
    dist: tuple[tuple[Fraction, ...], ...]
    separable_support: tuple[bool, ...]
    backend: str
    coords: tuple[tuple[Fraction, ...], ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.labels)
        if n == 0:
            raise MetricModelError("model must have at least one point")
        seen: set[str] = set()
        for label in self.labels:
            if not label or "," in label:
                raise MetricModelError(f"bad point label {label!r}")
            if label in seen:
                raise MetricModelError(f"duplicate point label {label!r}")
            seen.add(label)
        if len(self.dist) != n or any(len(row) != n for row in self.dist):
            raise MetricModelError("distance table shape mismatch")
        if len(self.separable_support) != n:
            raise MetricModelError("support flags shape mismatch")
        for i in range(n):
            if self.dist[i][i] != 0:
                raise MetricModelError(f"nonzero self-distance at {self.labels[i]}")
            for j in range(n):
                if self.dist[i][j] != self.dist[j][i]:
                    raise MetricModelError(
                        f"asymmetric distance {self.labels[i]}..{self.labels[j]}"
                    )
                if i != j and self.dist[i][j] <= 0:
                    raise MetricModelError(
                        f"non-positive distance {self.labels[i]}..{self.labels[j]}"
                    )
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if self.dist[i][k] > self.dist[i][j] + self.dist[j][k]:
                        raise MetricModelError(
                            "triangle inequality fails at "
                            f"({self.labels[i]},{self.labels[j]},{self.labels[k]})"
                        )
        if self.backend not in (TABLE_BACKEND, LINF_BACKEND):
            raise MetricModelError(f"unknown backend {self.backend!r}")
        if self.backend == LINF_BACKEND and self.coords is None:
            raise MetricModelError("linf backend requires coordinates")

    @property
    def size(self) -> int:
        return len(self.labels)

    def distance(self, i: int, j: int) -> Fraction:
        return self.dist[i][j]

    def support_indices(self) -> list[int]:
        return [i for i, flag in enumerate(self.separable_support) if flag]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown point label {label!r}") from None

    @classmethod
    def from_table(
        cls,
        labels: Iterable[str],
        dist: Iterable[Iterable[Fraction | int]],
        support: Iterable[bool] | None = None,
    ) -> "MetricSpaceModel":
        labels = tuple(labels)
        table = tuple(tuple(Fraction(d) for d in row) for row in dist)
        flags = tuple(support) if support is not None else (True,) * len(labels)
        return cls(labels, table, flags, TABLE_BACKEND)

    @classmethod
    def from_coords(
        cls,
        labels: Iterable[str],
        coords: Iterable[Iterable[Fraction | int]],
        support: Iterable[bool] | None = None,
    ) -> "MetricSpaceModel":
        labels = tuple(labels)
        pts = tuple(tuple(Fraction(c) for c in row) for row in coords)
        table = tuple(
            tuple(
                max((abs(a - b) for a, b in zip(p, q)), default=Fraction(0))
                for q in pts
            )
            for p in pts
        )
        flags = tuple(support) if support is not None else (True,) * len(labels)
        return cls(labels, table, flags, LINF_BACKEND, pts)


@dataclass(frozen=True)
class AtomicLaw:
    """Exact probability (or sub-probability) law on model point indices."""

    masses: Mapping[int, Fraction]

    def __post_init__(self) -> None:
        clean: dict[int, Fraction] = {}
        total = ZERO
        for idx, value in self.masses.items():
            val = Fraction(value)
            if val < 0:
                raise ValueError(f"negative mass at point {idx}")
            if val > 0:
                clean[int(idx)] = val
                total += val
        if total > 1:
            raise ValueError(f"total mass {total} exceeds 1")
        object.__setattr__(self, "masses", clean)
        object.__setattr__(self, "_total", total)

    @property
    def total_mass(self) -> Fraction:
        return self._total  # type: ignore[attr-defined]

    @property
    def is_probability(self) -> bool:
        return self.total_mass == ONE

    def __getitem__(self, idx: int) -> Fraction:
        return self.masses.get(idx, ZERO)

    def mass_of(self, indices: Iterable[int]) -> Fraction:
        return sum((self[i] for i in indices), ZERO)

    @classmethod
    def from_labels(
        cls, model: MetricSpaceModel, mapping: Mapping[str, Fraction]
    ) -> "AtomicLaw":
        return cls({model.index(label): value for label, value in mapping.items()})


@dataclass(frozen=True)
class LawSequence:
    """Atomic laws P_1..P_M with limit P on one model, under a tail rule."""

    model: MetricSpaceModel
    members: tuple[AtomicLaw, ...]
    limit: AtomicLaw
    tail: TailRule

    def __post_init__(self) -> None:
        if len(self.members) != self.tail.eventually_equal:
            raise ValueError(
                f"{len(self.members)} members but tail index {self.tail.eventually_equal}"
            )
        for i, law in enumerate((*self.members, self.limit)):
            for idx in law.masses:
                if not 0 <= idx < self.model.size:
                    raise ValueError(f"law {i} places mass on unknown point {idx}")
            if not law.is_probability:
                raise ValueError(f"law {i} has total mass {law.total_mass}, not 1")

    @property
    def horizon(self) -> int:
        return self.tail.eventually_equal

    def member(self, n: int) -> AtomicLaw:
        if n < 1:
            raise ValueError(f"member index {n} must be at least 1")
        return self.members[n - 1] if n <= self.horizon else self.limit


def continuity_radius(
    model: MetricSpaceModel, center: int, proposed: Fraction, law: AtomicLaw
) -> Fraction:
    """A radius at most ``proposed`` whose sphere around ``center`` has law-mass 0.

    Only finitely many distances from the center are realized on the
    law's support, so if the proposed radius is realized we return the
    midpoint of the gap between it and the next realized distance below,
    which no support point can hit.
    """
    if proposed <= 0:
        raise ValueError("proposed radius must be positive")
    realized = {model.distance(center, j) for j in law.masses}
    if proposed not in realized:
        return proposed
    below = [d for d in realized if d < proposed]
    lower = max(below) if below else ZERO
    return (lower + proposed) / 2


@dataclass(frozen=True)
class Cell:
    """One partition cell: child-index path, members, and continuity data.

    A child index of 1 marks a residual cell (left over after covering
    the separable support); any path containing 1 therefore carries zero
    limit-law mass.  The certificate lists (center, radius) spheres that
    jointly contain the cell boundary in the linf ambient topology.
    """

    path: tuple[int, ...]
    members: tuple[int, ...]
    diameter: Fraction
    certificate: tuple[tuple[int, Fraction], ...]

    @property
    def level(self) -> int:
        return len(self.path)

    @property
    def is_covering(self) -> bool:
        return 1 not in self.path


@dataclass(frozen=True)
class PartitionTree:
    """Nested continuity partitions, one level per resolution 1/k."""

    model: MetricSpaceModel
    law: AtomicLaw
    depth: int
    levels: tuple[tuple[Cell, ...], ...]
    paths: tuple[tuple[int, ...], ...]  # per point, child indices to depth

    def level_width(self, k: int) -> int:
        """Number of child indices used at level k (1..depth)."""
        return max(cell.path[k - 1] for cell in self.levels[k - 1])

    def cell_at(self, path: tuple[int, ...]) -> Cell:
        for cell in self.levels[len(path) - 1]:
            if cell.path == path:
                return cell
        raise KeyError(f"no cell with path {path!r}")


def _diameter(model: MetricSpaceModel, members: tuple[int, ...]) -> Fraction:
    best = ZERO
    for a in range(len(members)):
        for b in range(a + 1, len(members)):
            d = model.distance(members[a], members[b])
            if d > best:
                best = d
    return best


def build_partition_tree(
    model: MetricSpaceModel, law: AtomicLaw, depth: int
) -> PartitionTree:
    """Greedy nested covering of the separable support by continuity balls.

    Level k covers each parent cell's support points, in label order,
    with open balls of radius at most 1/(2k) adjusted to dodge realized
    distances; earlier cells are subtracted so cells stay disjoint, and
    whatever remains of the parent becomes its residual child (index 1).
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if not law.is_probability:
        raise ValueError("partition tree needs a probability limit law")
    if law.mass_of(model.support_indices()) != ONE:
        raise SeparabilityError(
            "limit law mass on the separable support is not 1"
        )
    root = Cell((), tuple(range(model.size)), _diameter(model, tuple(range(model.size))), ())
    levels: list[tuple[Cell, ...]] = []
    parents = [root]
    for k in range(1, depth + 1):
        cells: list[Cell] = []
        for parent in parents:
            targets = sorted(
                (i for i in parent.members if model.separable_support[i]),
                key=lambda i: model.labels[i],
            )
            assigned: set[int] = set()
            spheres: list[tuple[int, Fraction]] = []
            child = 2
            for center in targets:
                if center in assigned:
                    continue
                radius = continuity_radius(model, center, Fraction(1, 2 * k), law)
                spheres.append((center, radius))
                members = tuple(
                    j
                    for j in parent.members
                    if j not in assigned and model.distance(center, j) < radius
                )
                assigned.update(members)
                cells.append(
                    Cell(
                        parent.path + (child,),
                        members,
                        _diameter(model, members),
                        parent.certificate + tuple(spheres),
                    )
                )
                child += 1
            residual = tuple(j for j in parent.members if j not in assigned)
            cells.append(
                Cell(
                    parent.path + (1,),
                    residual,
                    _diameter(model, residual),
                    parent.certificate + tuple(spheres),
                )
            )
        cells.sort(key=lambda c: c.path)
        levels.append(tuple(cells))
        parents = list(cells)
    paths: list[tuple[int, ...]] = []
    for i in range(model.size):
        for cell in levels[-1]:
            if i in cell.members:
                paths.append(cell.path)
                break
    return PartitionTree(model, law, depth, tuple(levels), tuple(paths))


def tree_exact_checks(tree: PartitionTree) -> list[ExactCheck]:
    """All partition invariants as exact pass/fail results."""
    model = tree.model
    law = tree.law
    checks: list[ExactCheck] = []

    def add(name: str, witness: str | None) -> None:
        checks.append(ExactCheck(name, witness is None, witness))

    witness = None
    everything = set(range(model.size))
    for k, level in enumerate(tree.levels, start=1):
        seen: set[int] = set()
        for cell in level:
            overlap = seen & set(cell.members)
            if overlap:
                witness = f"level {k}: point {min(overlap)} in two cells"
                break
            seen.update(cell.members)
        if witness:
            break
        if seen != everything:
            witness = f"level {k}: cells miss point {min(everything - seen)}"
            break
    add("partition-disjoint-cover", witness)

    witness = None
    for k in range(1, tree.depth):
        children: dict[tuple[int, ...], set[int]] = {}
        for cell in tree.levels[k]:
            children.setdefault(cell.path[:-1], set()).update(cell.members)
        for cell in tree.levels[k - 1]:
            if children.get(cell.path, set()) != set(cell.members):
                witness = f"level {k} cell {cell.path}: children do not rebuild it"
                break
        if witness:
            break
    add("partition-nested", witness)

    witness = None
    for k, level in enumerate(tree.levels, start=1):
        bound = Fraction(1, k)
        for cell in level:
            if cell.is_covering:
                actual = _diameter(model, cell.members)
                if actual != cell.diameter:
                    witness = f"cell {cell.path}: recorded diameter is wrong"
                    break
                if actual >= bound:
                    witness = f"cell {cell.path}: diameter {actual} >= {bound}"
                    break
        if witness:
            break
    add("covering-cells-diameter", witness)

    witness = None
    support = set(model.support_indices())
    for k, level in enumerate(tree.levels, start=1):
        covered: set[int] = set()
        for cell in level:
            if cell.is_covering:
                covered.update(cell.members)
        if not support <= covered:
            witness = f"level {k}: support point {min(support - covered)} uncovered"
            break
    add("covering-cells-cover-support", witness)

    witness = None
    for level in tree.levels:
        for cell in level:
            if not cell.is_covering and law.mass_of(cell.members) != 0:
                witness = f"residual cell {cell.path} has positive limit mass"
                break
        if witness:
            break
    add("residual-cells-mass-zero", witness)

    witness = None
    for level in tree.levels:
        for cell in level:
            for center, radius in cell.certificate:
                sphere = [
                    j for j in law.masses if model.distance(center, j) == radius
                ]
                if law.mass_of(sphere) != 0:
                    witness = (
                        f"cell {cell.path}: sphere around {model.labels[center]}"
                        f" radius {radius} has positive mass"
                    )
                    break
            if witness:
                break
        if witness:
            break
    add("certificate-spheres-mass-zero", witness)

    witness = None
    for i, path in enumerate(tree.paths):
        for k in range(1, tree.depth + 1):
            cell = tree.cell_at(path[:k])
            if i not in cell.members:
                witness = f"point {model.labels[i]}: recorded path misses level {k}"
                break
        if witness:
            break
    add("point-paths-consistent", witness)

    return checks


def cell_masses(tree: PartitionTree, law: AtomicLaw) -> dict[tuple[int, ...], Fraction]:
    return {
        cell.path: law.mass_of(cell.members)
        for level in tree.levels
        for cell in level
    }


def weak_convergence(seq: LawSequence, tree: PartitionTree) -> DensityConvergence:
    """Portmanteau restricted to the tree's continuity cells.

    With an eventually-equal tail the cell masses converge by
    definition, so this always holds; the witness is the first index
    from which every later member matches the limit on every cell.
    """
    target = cell_masses(tree, seq.limit)
    witness = 1
    for n in range(seq.horizon, 0, -1):
        if cell_masses(tree, seq.member(n)) != target:
            witness = n + 1
            break
    return DensityConvergence(True, witness)


def digitize(seq: LawSequence, tree: PartitionTree) -> ProcessSequenceSpec:
    """Push the atomic laws forward to their partition-index digit processes.

    Coordinate k carries the level-k child index (nesting makes the
    digits well defined); the terminal coordinate carries the point
    itself, so decoding is a projection.
    """
    model = seq.model
    coordinates = [
        Alphabet(tuple(str(j) for j in range(1, tree.level_width(k) + 1)))
        for k in range(1, tree.depth + 1)
    ]
    coordinates.append(Alphabet(model.labels))
    space = ProductSpace(tuple(coordinates))

    def encode(i: int) -> Point:
        return tuple(d - 1 for d in tree.paths[i]) + (i,)

    def push(law: AtomicLaw) -> MassFunction:
        return MassFunction(space, {encode(i): v for i, v in law.masses.items()})

    return ProcessSequenceSpec(
        space=space,
        members=tuple(push(m) for m in seq.members),
        limit=push(seq.limit),
        tail=seq.tail,
    )


@dataclass(frozen=True)
class SkorohodCoupling:
    """Coupling of metric-space laws via their digit processes."""

    model: MetricSpaceModel
    laws: LawSequence
    tree: PartitionTree
    digit_sequence: ProcessSequenceSpec
    plan: CouplingPlan

    def decode(self, z: Point) -> int:
        """Model point index carried by a digit-space point."""
        return z[-1]

    def distance_bound(self, n: int) -> Fraction | None:
        """Guaranteed bound on d(X_n, X) once N <= n; None when unconstrained."""
        k = self.plan.schedule.window(n)
        return None if k == 0 else Fraction(1, k)


@dataclass(frozen=True)
class SkorohodSample:
    """Decoded coupled points plus the underlying digit-space sample."""

    index: int
    point: int
    member_points: tuple[int, ...]
    base: CouplingSample


def build_skorohod_coupling(
    model: MetricSpaceModel, seq: LawSequence, depth: int
) -> SkorohodCoupling:
    if seq.model is not model and seq.model != model:
        raise ValueError("law sequence is bound to a different model")
    tree = build_partition_tree(model, seq.limit, depth)
    digit_sequence = digitize(seq, tree)
    plan = build_plan(digit_sequence)
    return SkorohodCoupling(model, seq, tree, digit_sequence, plan)


def decode_sample(coupling: SkorohodCoupling, base: CouplingSample) -> SkorohodSample:
    """Project a digit-space sample to its metric points."""
    return SkorohodSample(
        index=base.index,
        point=coupling.decode(base.limit_point),
        member_points=tuple(coupling.decode(z) for z in base.member_points),
        base=base,
    )


def sample_coupled_points(coupling: SkorohodCoupling, rng: Random) -> SkorohodSample:
    return decode_sample(coupling, sample_plan(coupling.plan, rng))


def distance_violations(
    coupling: SkorohodCoupling, realization: SkorohodSample
) -> list[int]:
    """Component indices n >= N whose decoded point breaks the 1/k_n bound."""
    bad: list[int] = []
    for n in range(realization.index, coupling.plan.count + 1):
        bound = coupling.distance_bound(n)
        if bound is None:
            continue
        d = coupling.model.distance(realization.point, realization.member_points[n - 1])
        if d >= bound:
            bad.append(n)
    return bad
