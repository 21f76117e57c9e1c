import random
from dataclasses import replace
from fractions import Fraction as F

import pytest

from windowcoupling import (
    MassFunction,
    audit_plan,
    audit_skorohod,
    build_plan,
    build_skorohod_coupling,
    mc_agreement,
)
from windowcoupling import jsonio
from windowcoupling.verify import (
    marginal_3sigma_checks,
    random_enumerable_plan,
    random_law_sequence,
    random_metric_model,
    random_process_spec,
    random_rational_pmf,
)


class TestAuditPlan:
    def test_constant_plan_all_pass(self, constant_sequence):
        report = audit_plan(build_plan(constant_sequence))
        assert report.all_exact_passed
        assert all(entry.deficit == 0 for entry in report.deficit_trace)
        assert report.provenance["version"]
        assert report.provenance["seed"] is None

    def test_worked_example_reconstruction_exact(self, skewed_sequence):
        report = audit_plan(build_plan(skewed_sequence))
        names = {c.name for c in report.exact_checks}
        assert "window-mixture-reconstructs-members" in names
        assert report.all_exact_passed

    def test_corrupted_plan_fails_with_witness(self, two_member_sequence):
        plan = build_plan(two_member_sequence)
        env = plan.ladder.envelopes[1]
        z = next(iter(env.mass))
        lowered = MassFunction(env.space, {**env.mass, z: env.mass[z] / 3})
        bad = replace(
            plan,
            ladder=replace(
                plan.ladder,
                envelopes=(plan.ladder.envelopes[0], lowered)
                + plan.ladder.envelopes[2:],
            ),
        )
        report = audit_plan(bad)
        assert not report.all_exact_passed
        failed = [c for c in report.exact_checks if not c.passed]
        assert any(c.name == "ladder-monotone" for c in failed)
        assert all(c.witness for c in failed)

    def test_audit_never_raises_on_corrupt_plans(self, two_member_sequence):
        plan = build_plan(two_member_sequence)
        # shrink the final envelope: downstream checks would see negative
        # increments, which must surface as failures, not exceptions
        last = plan.ladder.envelopes[-1]
        z = next(iter(last.mass))
        bad_env = MassFunction(last.space, {**last.mass, z: last.mass[z] / 2})
        bad = replace(
            plan,
            ladder=replace(
                plan.ladder,
                envelopes=plan.ladder.envelopes[:-1] + (bad_env,),
            ),
        )
        report = audit_plan(bad)
        assert not report.all_exact_passed


class TestMcAgreement:
    def test_single_sample(self, constant_sequence):
        report = mc_agreement(build_plan(constant_sequence), 1, seed=0)
        agreement = next(
            c for c in report.mc_checks if c.name == "window-agreement-violations"
        )
        assert agreement.samples == 1 and agreement.failures == 0

    def test_no_violations_and_tv_pass(self, two_member_sequence):
        report = mc_agreement(build_plan(two_member_sequence), 2000, seed=5)
        assert report.all_passed
        tv = next(
            c for c in report.mc_checks if c.name == "index-law-total-variation"
        )
        assert "threshold" in tv.note

    def test_requires_positive_sample_count(self, constant_sequence):
        with pytest.raises(ValueError):
            mc_agreement(build_plan(constant_sequence), 0, seed=0)

    def test_skorohod_distance_checks(self, line_model, line_laws):
        coupling = build_skorohod_coupling(line_model, line_laws, 2)
        report = mc_agreement(coupling, 400, seed=3)
        names = {c.name for c in report.mc_checks}
        assert "distance-guarantee-violations" in names
        assert report.all_passed

    def test_reports_are_deterministic(self, two_member_sequence):
        plan = build_plan(two_member_sequence)
        first = mc_agreement(plan, 500, seed=11)
        second = mc_agreement(plan, 500, seed=11)
        assert jsonio.canonical_dumps(jsonio.report_to_doc(first)) == (
            jsonio.canonical_dumps(jsonio.report_to_doc(second))
        )

    def test_marginal_3sigma_checks_pass(self, line_model, line_laws):
        coupling = build_skorohod_coupling(line_model, line_laws, 2)
        checks = marginal_3sigma_checks(coupling, 2000, seed=8)
        assert checks and all(c.passed for c in checks)


class TestAuditSkorohod:
    def test_merges_tree_and_plan_checks(self, line_model, line_laws):
        coupling = build_skorohod_coupling(line_model, line_laws, 2)
        report = audit_skorohod(coupling)
        names = {c.name for c in report.exact_checks}
        assert "partition-disjoint-cover" in names
        assert "ladder-monotone" in names
        assert report.all_exact_passed


class TestGenerators:
    def test_random_pmf_is_probability(self):
        rng = random.Random(0)
        for _ in range(50):
            values = random_rational_pmf(rng, 5)
            assert sum(values) == 1
            assert all(v >= 0 for v in values)

    def test_random_spec_respects_bounds(self):
        rng = random.Random(1)
        for _ in range(25):
            seq = random_process_spec(rng)
            assert 1 <= seq.space.width <= 3
            assert all(len(a) <= 3 for a in seq.space.coordinates)
            assert 1 <= seq.horizon <= 4

    def test_generation_is_deterministic(self):
        a = random_process_spec(random.Random(123))
        b = random_process_spec(random.Random(123))
        assert a == b

    def test_random_plans_audit_clean(self):
        rng = random.Random(2)
        for _ in range(10):
            _, plan = random_enumerable_plan(rng, cap=50_000)
            assert audit_plan(plan).all_exact_passed
            assert mc_agreement(plan, 300, seed=4).all_passed

    def test_random_models_are_valid_metrics(self):
        rng = random.Random(3)
        for _ in range(20):
            model = random_metric_model(rng)
            assert 1 <= model.size <= 6
            laws = random_law_sequence(rng, model)
            assert laws.limit.mass_of(model.support_indices()) == 1
