from fractions import Fraction

import pytest

from soficdim.crossed import (
    HACandidate,
    HAParams,
    SqrtTol,
    approx_sum_check,
    build_phi,
    build_phi0,
    corrected_sum,
    disjoint_pairs,
    gap_below,
    ha_statistic,
    ha_statistic_with_sa,
    push_forward,
    verify_HA,
)
from soficdim.groupoid import PartialBisection, cyclic_groupoid, full_identity, transitive_groupoid
from soficdim.partitions import (
    CylinderModel,
    HypothesisError,
    LemmaContext,
    random_partition,
    regular_model_candidate,
    span_basis,
)
from soficdim.pperm import PartialPermutation, parse_pperm
from soficdim.sofic import count_SA, iter_SA_members

FAIR = (Fraction(1, 2), Fraction(1, 2))


@pytest.fixture(scope="module")
def r2():
    g = transitive_groupoid(2)
    swap = PartialBisection(g, frozenset(a for a in range(4)
                                         if g.source[a] != g.range_[a]))
    ctx = LemmaContext(g, [swap], 1)
    model = CylinderModel(ctx, FAIR)
    basis = span_basis(model)
    return g, swap, ctx, model, basis


class TestVerifyHA:
    def test_exact_model_all_gaps_zero(self, r2):
        _, _, _, model, basis = r2
        sigma, part = regular_model_candidate(model)
        table, _ = build_phi0(sigma, part, basis, Fraction(1, 10), precheck=False)
        res = build_phi(table, sigma, basis, Fraction(1, 10))
        rep = res.report
        assert rep.is_member
        assert rep.trace_gap == rep.equivariance_gap == rep.mult_gap == 0
        assert rep.unit_gap == 0

    def test_one_point_corruption_breaks_equivariance(self, r2):
        _, _, _, model, basis = r2
        sigma, part = regular_model_candidate(model)
        table, _ = build_phi0(sigma, part, basis, Fraction(1, 10), precheck=False)
        res = build_phi(table, sigma, basis, Fraction(1, 10))
        d = sigma.degree
        uni = res.params.universe
        # corrupt phi at the first letter block: drop one support point
        pos = uni.letter_index[0]
        old = res.candidate.phi[pos]
        support = list(old.dom_points())
        corrupted = PartialPermutation.projection(d, support[1:])
        phi = list(res.candidate.phi)
        phi[pos] = corrupted
        bad = HACandidate(sigma, phi)
        params = HAParams(model, Fraction(1, d + 1), d)
        rep = verify_HA(bad, params, check_sigma=False)
        assert rep.equivariance_gap >= Fraction(1, d)
        assert not rep.is_member

    def test_phi_coverage_enforced(self, r2):
        _, _, _, model, basis = r2
        sigma, part = regular_model_candidate(model)
        params = HAParams(model, Fraction(1, 10), sigma.degree)
        with pytest.raises(ValueError):
            verify_HA(HACandidate(sigma, []), params)


class TestPushForward:
    def test_projection_pushforward(self):
        s = parse_pperm("4:[1->2, 2->1, 3->4]")
        p = PartialPermutation.projection(4, [1, 3])
        assert push_forward(s, p) == PartialPermutation.projection(4, [2, 4])

    def test_outside_domain_drops(self):
        s = parse_pperm("3:[1->2]")
        p = PartialPermutation.projection(3, [1, 3])
        assert push_forward(s, p) == PartialPermutation.projection(3, [2])


class TestCorrectedSum:
    def test_orthogonal_images_strict_sum(self):
        a = parse_pperm("4:[1->2]")
        b = parse_pperm("4:[3->4]")
        assert corrected_sum(a, b) == parse_pperm("4:[1->2, 3->4]")

    def test_overlap_resolved_off_first(self):
        a = parse_pperm("4:[1->2]")
        b = parse_pperm("4:[1->3, 4->2, 3->4]")
        # 1->3 cut (domain hit), 4->2 cut (range hit), 3->4 kept
        assert corrected_sum(a, b) == parse_pperm("4:[1->2, 3->4]")


class TestApproxSum:
    def test_exact_phi_gap_zero(self, r2):
        _, _, _, model, basis = r2
        sigma, part = regular_model_candidate(model)
        table, _ = build_phi0(sigma, part, basis, Fraction(1, 10), precheck=False)
        res = build_phi(table, sigma, basis, Fraction(1, 10))
        params = HAParams(model, Fraction(1, 10), sigma.degree)
        for p1, p2 in disjoint_pairs(params):
            check = approx_sum_check(res.candidate, params, p1, p2, precheck=False)
            assert check.passed and check.gap == 0

    def test_disjointness_precondition(self, r2):
        _, _, _, model, basis = r2
        sigma, part = regular_model_candidate(model)
        table, _ = build_phi0(sigma, part, basis, Fraction(1, 10), precheck=False)
        res = build_phi(table, sigma, basis, Fraction(1, 10))
        params = HAParams(model, Fraction(1, 10), sigma.degree)
        full = params.universe.elements[params.universe.x_index]
        with pytest.raises(ValueError):
            approx_sum_check(res.candidate, params, full, full, precheck=False)

    def test_constructed_members_obey_146_delta(self, r2):
        _, _, ctx, model, basis = r2
        delta = Fraction(1, 10)
        members = list(iter_SA_members(ctx.hypothesis_params(delta, 4)))
        params = HAParams(model, delta, 4)
        for m in members:
            part = random_partition(4, FAIR, seed=17)
            table, _ = build_phi0(m, part, basis, delta, precheck=False)
            res = build_phi(table, m, basis, delta)
            for p1, p2 in disjoint_pairs(params):
                assert approx_sum_check(res.candidate, params, p1, p2,
                                        precheck=False).passed


class TestBuildPhi0:
    def test_exact_properties_zero(self, r2):
        _, _, _, model, basis = r2
        sigma, part = regular_model_candidate(model)
        _, rep = build_phi0(sigma, part, basis, Fraction(1, 10), precheck=False)
        assert rep.passed
        assert rep.trace_gap_sq == rep.equivariance_gap_sq == 0
        assert rep.mult_gap_sq == rep.unit_gap_sq == 0

    def test_members_pass_at_delta0(self, r2):
        _, _, ctx, model, basis = r2
        delta = Fraction(1, 10)
        for d in (4, 6):
            cap = 10 ** 9 if d == 6 else 10 ** 8
            from soficdim.sofic import iter_SA_members as it
            for m in it(ctx.hypothesis_params(delta, d)):
                for seed in (0, 1):
                    part = random_partition(d, FAIR, seed)
                    _, rep = build_phi0(m, part, basis, delta, precheck=False)
                    assert rep.passed

    def test_q1_unit_property(self):
        g = transitive_groupoid(2)
        swap = PartialBisection(g, frozenset(a for a in range(4)
                                             if g.source[a] != g.range_[a]))
        ctx = LemmaContext(g, [swap], 1)
        model = CylinderModel(ctx, [Fraction(1)])
        basis = span_basis(model)
        sigma, part = regular_model_candidate(model)
        table, rep = build_phi0(sigma, part, basis, Fraction(1, 10), precheck=False)
        # a single letter: the full-space value is built from the lone block
        assert rep.unit_gap_sq == 0

    def test_hypothesis_rejected(self, r2):
        _, _, ctx, model, basis = r2
        bad = None
        from soficdim.sofic import SoficCandidate
        n = len(ctx.hypothesis_source.ball_elements)
        bad = SoficCandidate(4, [PartialPermutation.empty(4)] * n)
        with pytest.raises(HypothesisError):
            build_phi0(bad, random_partition(4, FAIR, 0), basis, Fraction(1, 10))


class TestBuildPhi:
    def test_exact_instance_keeps_everything(self, r2):
        _, _, _, model, basis = r2
        sigma, part = regular_model_candidate(model)
        table, _ = build_phi0(sigma, part, basis, Fraction(1, 10), precheck=False)
        res = build_phi(table, sigma, basis, Fraction(1, 10))
        assert res.v_fraction == 1 and res.v_ok
        assert res.report.is_member

    def test_members_meet_v_bound_and_tolerance(self, r2):
        _, _, ctx, model, basis = r2
        delta = Fraction(1, 10)
        for m in iter_SA_members(ctx.hypothesis_params(delta, 6), None):
            part = random_partition(6, FAIR, seed=23)
            table, rep0 = build_phi0(m, part, basis, delta, precheck=False)
            assert rep0.passed
            res = build_phi(table, m, basis, delta)
            assert res.v_ok
            assert Fraction(len(res.V)) >= res.v_bound
            assert res.report.is_member
            assert isinstance(res.params.delta, SqrtTol)


class TestGapBelow:
    def test_rational_and_sqrt(self):
        assert gap_below(Fraction(1, 4), Fraction(1, 2))
        assert not gap_below(Fraction(1, 2), Fraction(1, 2))
        assert gap_below(Fraction(1, 2), SqrtTol(Fraction(1, 2)))
        assert not gap_below(Fraction(3, 4), SqrtTol(Fraction(1, 2)))


class TestHAStatistic:
    def test_one_point_space_matches_sa_count(self):
        g = cyclic_groupoid(1)
        ctx = LemmaContext(g, [full_identity(g)], 1)
        model = CylinderModel(ctx, [Fraction(1)])
        delta = Fraction(1, 3)
        params = HAParams(model, delta, 2)
        count, stat, sa_count = ha_statistic_with_sa(params, E=[0], Q=[0])
        sa = count_SA(ctx.hypothesis_params(delta, 2))
        # phi on the single point space is forced to the identity
        assert sa_count == sa
        assert count == sa

    def test_bounded_by_q_power_d_times_sa(self):
        # the restriction-counting bound |Q|^d * |SA|_E needs delta small
        # enough that the conditions pin the phi values near projections
        g = cyclic_groupoid(1)
        ctx = LemmaContext(g, [full_identity(g)], 1)
        model = CylinderModel(ctx, FAIR)
        delta = Fraction(1, 3)
        params = HAParams(model, delta, 2)
        Q = [0, 1]
        count, _, sa_count = ha_statistic_with_sa(params, E=[0], Q=Q)
        assert count >= 1
        assert count <= len(Q) ** 2 * sa_count

    def test_empty_set_gives_sentinel(self):
        g = cyclic_groupoid(1)
        ctx = LemmaContext(g, [full_identity(g)], 1)
        model = CylinderModel(ctx, [Fraction(1)])
        params = HAParams(model, Fraction(1, 100), 3)
        # delta too small for any phi: tr phi(X) must be within 1/100 of 1
        # while |phi(X) - id| < 1/100 forces phi(X) = id, which passes; use a
        # sigma-less obstruction instead: d odd has no obstruction here, so
        # shrink delta below 1/d on a 3-point space with a fair alphabet
        model2 = CylinderModel(ctx, FAIR)
        params2 = HAParams(model2, Fraction(1, 100), 3)
        count, stat = ha_statistic(params2, E=[0], Q=[0])
        assert count == 0 and stat == float("-inf")
