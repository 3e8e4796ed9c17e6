import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vcausality.behavior import is_local_2222, marginal, no_signalling_check, reduced
from vcausality.certifier.polytope import local_decomposition_2222
from vcausality.inequality import evaluate_s
from vcausality.quantum import PAULI_X, PAULI_Z, Observable, behavior_of, product_state_model
from vcausality.spacetime import C, Event, InvalidConfig, VConeConfig
from vcausality.vcausal import (CyclicConnectivity, UnnormalizedResponse, VCausalModel, analytic_error_rates,
                                analytic_success, behavior_of_model, dc_behavior_fig3, edges_from_config,
                                ghz_protocol, ghz_triangle_model, signalling_speed, topological_order,
                                triangle_config)

HALF = Fraction(1, 2)


def fair(o, s, lam, hist):
    return HALF


class TestBehaviorOfModel:
    def test_no_influence_gives_product(self):
        def biased(o, s, lam, hist):
            return Fraction(1, 3) if o == s else Fraction(2, 3)

        b = behavior_of_model(VCausalModel(2, [(Fraction(1), None)], frozenset(), [biased, fair]))
        assert b.exact
        assert b.prob((0, 1), (0, 1)) == Fraction(1, 3) * HALF
        assert no_signalling_check(b).no_signalling

    def test_cycle_rejected(self):
        with pytest.raises(CyclicConnectivity):
            VCausalModel(2, [(1, None)], frozenset({(0, 1), (1, 0)}), [fair, fair])

    def test_unnormalized_response(self):
        m = VCausalModel(1, [(1, None)], frozenset(), [lambda o, s, lam, h: Fraction(1, 3)])
        with pytest.raises(UnnormalizedResponse):
            behavior_of_model(m)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            VCausalModel(1, [(HALF, 0)], frozenset(), [fair])

    def test_topological_order(self):
        assert topological_order(4, frozenset({(3, 1), (0, 3), (0, 2)})) == [0, 2, 3, 1]

    def test_edges_from_config(self):
        v = 10 * C
        cfg = VConeConfig(v, [Event(0.0, (0.0,), "A"), Event(1.0, (0.5 * v,), "B"), Event(1.0, (-2 * v,), "C")])
        assert edges_from_config(cfg, ["A", "B", "C"]) == frozenset({(0, 1)})


class TestGhzTriangle:
    def test_pure_direct_cause_signals(self):
        b = behavior_of_model(ghz_triangle_model())
        same = lambda x: b.table[x, 0, 0, 0, 0, 0] + b.table[x, 0, 0, 1, 1, 1] + \
            b.table[x, 0, 0, 0, 1, 1] + b.table[x, 0, 0, 1, 0, 0]  # noqa: E731
        assert same(1) == 1
        assert same(0) == HALF
        report = no_signalling_check(b)
        assert report.find((1, 2), 0) is not None

    def test_shared_bit_removes_signalling(self):
        b = behavior_of_model(ghz_triangle_model(shared_bit=True))
        for x in (0, 1):
            assert b.table[x, 0, 0, 0, 0, 0] == b.table[x, 0, 0, 1, 1, 1] == HALF
        assert no_signalling_check(b).no_signalling


@st.composite
def local_models(draw):
    """Two parties, no influences, hidden variable with up to three values."""
    k = draw(st.integers(1, 3))
    raw = draw(st.lists(st.integers(1, 9), min_size=k, max_size=k))
    lambdas = [(Fraction(r, sum(raw)), i) for i, r in enumerate(raw)]
    tables = draw(st.lists(st.fractions(0, 1, max_denominator=12), min_size=4 * k, max_size=4 * k))

    def response(offset):
        def f(o, s, lam, hist):
            p = tables[offset + 2 * lam + s]
            return p if o == 0 else 1 - p
        return f

    return VCausalModel(2, lambdas, frozenset(), [response(0), response(2 * k)])


class TestLocalModels:
    @settings(max_examples=40, deadline=None)
    @given(local_models())
    def test_common_cause_only_is_local(self, m):
        b = behavior_of_model(m)
        assert no_signalling_check(b).no_signalling
        assert is_local_2222(b)
        assert local_decomposition_2222(b)[1].feasible


class TestDirectCauseFourParty:
    def test_quantum_marginals_reproduced(self, paper_model, quantum_behavior):
        dc = dc_behavior_fig3(paper_model)
        for sub in ((0, 1, 3), (0, 2, 3)):
            assert np.abs(marginal(dc, sub) - marginal(quantum_behavior, sub)).max() <= 1e-10

    def test_abd_independent_of_z_and_acd_of_y(self, paper_model):
        dc = dc_behavior_fig3(paper_model)
        abd = marginal(dc, (0, 1, 3))
        acd = marginal(dc, (0, 2, 3))
        assert np.abs(abd[:, :, 0] - abd[:, :, 1]).max() <= 1e-10
        assert np.abs(acd[:, 0] - acd[:, 1]).max() <= 1e-10

    def test_s_matches_quantum(self, paper_model, quantum_behavior):
        dc = dc_behavior_fig3(paper_model)
        assert evaluate_s(dc, absent_settings=[0] * 4) == pytest.approx(evaluate_s(quantum_behavior), abs=1e-10)

    def test_signalling_found(self, paper_model):
        report = no_signalling_check(dc_behavior_fig3(paper_model))
        assert report.find((1, 2, 3), 0) is not None or report.find((0, 1, 2), 3) is not None
        # no signalling into the all-connected triples
        assert report.find((0, 1, 3), 2) is None and report.find((0, 2, 3), 1) is None

    def test_bc_pair_local_given_history(self, paper_model):
        from vcausality.behavior import condition

        dc = dc_behavior_fig3(paper_model)
        for a, x, d, w in itertools.product((0, 1), repeat=4):
            pair = condition(dc, {0: (x, a), 3: (w, d)}, tol=1e-12)
            assert is_local_2222(pair, tol=1e-9)

    def test_product_state_gives_product(self):
        obs = tuple((Observable(PAULI_Z), Observable(PAULI_X)) for _ in range(4))
        q = product_state_model("0110", obs)
        np.testing.assert_allclose(dc_behavior_fig3(q).table, behavior_of(q).table, atol=1e-14)

    def test_needs_four_parties(self):
        obs = tuple((Observable(PAULI_Z),) for _ in range(2))
        with pytest.raises(ValueError):
            dc_behavior_fig3(product_state_model("00", obs))


class TestGhzProtocol:
    def test_analytic_values(self):
        assert analytic_success(1) == Fraction(3, 4)
        assert analytic_error_rates(3) == {"yes": 0, "no": Fraction(1, 8)}

    @pytest.mark.parametrize("rounds", [1, 2, 5])
    def test_enumeration_oracle(self, rounds):
        # under "no" the receiver errs iff every round has b == c
        outcomes = list(itertools.product(itertools.product((0, 1), repeat=2), repeat=rounds))
        errs = sum(all(b == c for b, c in seq) for seq in outcomes)
        assert Fraction(errs, len(outcomes)) == analytic_error_rates(rounds)["no"]
        assert analytic_success(rounds) == 1 - Fraction(errs, len(outcomes)) / 2

    def test_yes_never_errs(self):
        assert ghz_protocol(7, "yes", seed=1, trials=5000).errors == 0

    def test_reproducible(self):
        a = ghz_protocol(2, "no", seed=99, trials=2000)
        b = ghz_protocol(2, "no", seed=99, trials=2000)
        assert a == b

    def test_twenty_rounds(self):
        r = ghz_protocol(20, "no", seed=7, trials=100_000)
        assert r.analytic_error_rate == Fraction(1, 2**20)
        assert r.within(5.0)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            ghz_protocol(0, "no")
        with pytest.raises(ValueError):
            ghz_protocol(1, "maybe")


class TestSignallingSpeed:
    def test_exceeds_c_and_approaches_v(self):
        v = 10 * C
        speeds = [signalling_speed(triangle_config(length, 1e3, v)) for length in (1e4, 1e5, 1e6, 1e7)]
        assert all(s > C for s in speeds)
        assert speeds == sorted(speeds)
        assert speeds[-1] < v
        assert speeds[-1] == pytest.approx(v, rel=1e-3)

    def test_degenerate_triangle_is_report_limited(self):
        v = 10 * C
        # receivers far apart relative to their distance from A: the report at c dominates
        s = signalling_speed(triangle_config(1.0, 1e4, v))
        assert s < C

    def test_four_party_decoding_at_d(self):
        v = 10 * C
        events = [Event(0.0, (0.0,), "A"), Event(1.0, (9.0 * C, 0.0), "D"),
                  Event(1.0, (9.0 * C, 1e3), "B"), Event(1.0, (9.0 * C, -1e3), "C")]
        speed = signalling_speed(VConeConfig(v, events))
        assert C < speed < v

    def test_invalid_when_influence_misses(self):
        v = 10 * C
        events = [Event(0.0, (0.0,), "A"), Event(1.0, (20 * C, 1.0), "B"), Event(1.0, (20 * C, -1.0), "C")]
        with pytest.raises(InvalidConfig):
            signalling_speed(VConeConfig(v, events))
