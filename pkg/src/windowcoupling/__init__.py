"""Exact widening-window couplings and finite Skorohod representations.

The package constructs, for a sequence of discrete-time process laws
converging in density in every finite window, a coupling whose members
agree with the limit trajectory on windows of growing length from a
random index on, and uses digit processes over nested continuity
partitions to turn distributional convergence on a finite metric space
into an almost-surely convergent coupling.  All measure computations
are exact rational arithmetic.
"""
from .engine import (
    CouplingPlan,
    CouplingSample,
    CouplingSampler,
    EnumerationCapError,
    InternalInvariantError,
    JointLaw,
    KernelRow,
    MeasureLadder,
    NotConvergentError,
    WindowSchedule,
    build_ladder,
    build_plan,
    build_schedule,
    deficit_entries,
    exact_joint_law,
    extend_window_law,
    extended_floor,
    joint_support_size,
    sample,
    window_deficit,
)
from .measures import (
    Alphabet,
    MassFunction,
    ProcessSequenceSpec,
    ProductSpace,
    SpaceMismatchError,
    TailRule,
    WindowRangeError,
    conditional_given_prefix,
    density_convergence,
    total_variation,
    uniform_on_cylinder,
    window_infimum,
    window_marginal,
)
from .skorohod import (
    AtomicLaw,
    Cell,
    LawSequence,
    MetricModelError,
    MetricSpaceModel,
    PartitionTree,
    SeparabilityError,
    SkorohodCoupling,
    SkorohodSample,
    build_partition_tree,
    build_skorohod_coupling,
    continuity_radius,
    digitize,
    distance_violations,
    sample_coupled_points,
    tree_exact_checks,
    weak_convergence,
)
from .verify import (
    McCheck,
    VerificationReport,
    audit_plan,
    audit_skorohod,
    mc_agreement,
)
from .version import __version__

__all__ = [
    "Alphabet",
    "AtomicLaw",
    "Cell",
    "CouplingPlan",
    "CouplingSample",
    "CouplingSampler",
    "EnumerationCapError",
    "InternalInvariantError",
    "JointLaw",
    "KernelRow",
    "LawSequence",
    "MassFunction",
    "McCheck",
    "MeasureLadder",
    "MetricModelError",
    "MetricSpaceModel",
    "NotConvergentError",
    "PartitionTree",
    "ProcessSequenceSpec",
    "ProductSpace",
    "SeparabilityError",
    "SkorohodCoupling",
    "SkorohodSample",
    "SpaceMismatchError",
    "TailRule",
    "VerificationReport",
    "WindowRangeError",
    "WindowSchedule",
    "audit_plan",
    "audit_skorohod",
    "build_ladder",
    "build_partition_tree",
    "build_plan",
    "build_schedule",
    "build_skorohod_coupling",
    "conditional_given_prefix",
    "continuity_radius",
    "deficit_entries",
    "density_convergence",
    "digitize",
    "distance_violations",
    "exact_joint_law",
    "extend_window_law",
    "extended_floor",
    "joint_support_size",
    "mc_agreement",
    "sample",
    "sample_coupled_points",
    "total_variation",
    "tree_exact_checks",
    "uniform_on_cylinder",
    "weak_convergence",
    "window_deficit",
    "window_infimum",
    "window_marginal",
    "__version__",
]
