import dataclasses
import itertools
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from vcausality.behavior import Behavior, condition, is_local_2222, no_signalling_check, pr_box, reduced, uniform
from vcausality.certifier.lp import (Certificate, ConstraintSet, LinearProgram, Unbounded, certificate_from_dict,
                                     certificate_to_dict, dump_certificate, load_certificate, lp_from_dict, lp_to_dict)
from vcausality.certifier.polytope import (DETERMINISTIC_2222, CertificateError, InconsistentMarginals,
                                           behavior_from_primal, build_bc_local_constraints,
                                           build_ns_polytope_constraints, build_bound_lp,
                                           local_decomposition_2222, marginal_feasibility, maximize, objective_row)
from vcausality.certifier.simplex import independent_rows, solve
from vcausality.certifier.verify import check_primal, farkas_margin, verify_certificate
from vcausality.inequality import evaluate_s


def random_lp(rng, n=5, m_eq=2, m_ub=4):
    lp = LinearProgram(n, {j: Fraction(int(rng.integers(-5, 6))) for j in range(n)})
    for _ in range(m_eq):
        lp.equalities.add({j: int(rng.integers(-3, 4)) for j in range(n)}, int(rng.integers(-5, 6)))
    for _ in range(m_ub):
        lp.inequalities.add({j: int(rng.integers(-3, 4)) for j in range(n)}, int(rng.integers(-2, 8)))
    # keep it bounded
    lp.inequalities.add({j: 1 for j in range(n)}, 20)
    return lp


def dense(cs: ConstraintSet, n: int):
    if not len(cs):
        return None, None
    a = np.zeros((len(cs), n))
    for i, row in enumerate(cs.rows):
        for j, v in row.items():
            a[i, j] = float(v)
    return a, np.array([float(b) for b in cs.rhs])


class TestAgainstScipy:
    """Random small programs: status and optimum agree with HiGHS."""

    @pytest.mark.parametrize("seed", range(60))
    def test_random_program(self, seed):
        rng = np.random.default_rng(seed)
        lp = random_lp(rng)
        cert = solve(lp)
        assert verify_certificate(lp, cert), verify_certificate(lp, cert).failures
        a_eq, b_eq = dense(lp.equalities, lp.n_vars)
        a_ub, b_ub = dense(lp.inequalities, lp.n_vars)
        c = np.array([-float(lp.objective.get(j, 0)) for j in range(lp.n_vars)])
        ref = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if ref.status == 2:
            assert cert.kind == "infeasible"
        else:
            assert ref.status == 0
            assert cert.kind == "optimal"
            assert float(cert.objective) == pytest.approx(-ref.fun, abs=1e-7)


class TestSimplex:
    def test_textbook_optimum(self):
        # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
        lp = LinearProgram(2, {0: Fraction(3), 1: Fraction(5)})
        lp.inequalities.add({0: 1}, 4)
        lp.inequalities.add({1: 2}, 12)
        lp.inequalities.add({0: 3, 1: 2}, 18)
        cert = solve(lp)
        assert cert.objective == 36 and cert.primal == (2, 6)
        assert verify_certificate(lp, cert)

    def test_rational_data(self):
        lp = LinearProgram(2, {0: Fraction(1, 3), 1: Fraction(1, 7)})
        lp.inequalities.add({0: Fraction(1, 2), 1: Fraction(1, 5)}, Fraction(1, 10**9))
        cert = solve(lp)
        assert verify_certificate(lp, cert)
        assert cert.objective == max(Fraction(2, 3), Fraction(5, 7)) * Fraction(1, 10**9)

    def test_unbounded(self):
        lp = LinearProgram(2, {0: Fraction(1)})
        lp.inequalities.add({0: -1, 1: 1}, 1)
        with pytest.raises(Unbounded):
            solve(lp)

    def test_infeasible_farkas(self):
        lp = LinearProgram(1, {})
        lp.equalities.add({0: 1}, -1)
        cert = solve(lp)
        assert cert.kind == "infeasible"
        assert verify_certificate(lp, cert)

    def test_redundant_equalities(self):
        lp = LinearProgram(3, {0: Fraction(1)})
        lp.equalities.add({0: 1, 1: 1, 2: 1}, 1)
        lp.equalities.add({0: 2, 1: 2, 2: 2}, 2)
        lp.equalities.add({0: 1, 1: -1}, 0)
        assert independent_rows(lp.equalities, 3) == [0, 2]
        cert = solve(lp)
        assert cert.objective == Fraction(1, 2)
        assert verify_certificate(lp, cert)

    def test_inconsistent_redundancy_is_kept(self):
        cs = ConstraintSet()
        cs.add({0: 1}, 1)
        cs.add({0: 2}, 3)
        assert independent_rows(cs, 1) == [0, 1]

    def test_degenerate_program_terminates(self):
        # Beale's cycling example (as a maximization); Bland's rule must terminate
        lp = LinearProgram(4, {0: Fraction(3, 4), 1: Fraction(-150), 2: Fraction(1, 50), 3: Fraction(-6)})
        lp.inequalities.add({0: Fraction(1, 4), 1: -60, 2: Fraction(-1, 25), 3: 9}, 0)
        lp.inequalities.add({0: Fraction(1, 2), 1: -90, 2: Fraction(-1, 50), 3: 3}, 0)
        lp.inequalities.add({2: 1}, 1)
        cert = solve(lp)
        assert cert.objective == Fraction(1, 20)
        assert verify_certificate(lp, cert)


class TestVerifier:
    def lp_and_cert(self):
        lp = LinearProgram(2, {0: Fraction(1), 1: Fraction(1)})
        lp.inequalities.add({0: 1}, 1)
        lp.inequalities.add({1: 1}, 2)
        return lp, solve(lp)

    def test_accepts_solver_output(self):
        lp, cert = self.lp_and_cert()
        assert verify_certificate(lp, cert)

    def test_rejects_wrong_objective(self):
        lp, cert = self.lp_and_cert()
        bad = dataclasses.replace(cert, objective=cert.objective + 1)
        assert not verify_certificate(lp, bad)

    def test_rejects_dual_with_gap(self):
        lp, cert = self.lp_and_cert()
        bad = dataclasses.replace(cert, dual_ub=tuple(y + 1 for y in cert.dual_ub))
        result = verify_certificate(lp, bad)
        assert not result and any("gap" in f for f in result.failures)

    def test_rejects_infeasible_primal(self):
        lp, cert = self.lp_and_cert()
        assert check_primal(lp, (Fraction(2), Fraction(0)))
        assert check_primal(lp, (Fraction(-1), Fraction(0)))

    def test_rejects_bogus_farkas(self):
        lp, _ = self.lp_and_cert()
        bogus = Certificate("infeasible", (), (Fraction(1), Fraction(0)))
        assert not verify_certificate(lp, bogus)

    def test_farkas_margin(self):
        lp = LinearProgram(1, {})
        lp.inequalities.add({0: 1}, 1)
        lp.inequalities.add({0: -1}, -3)  # x >= 3 contradicts x <= 1
        cert = solve(lp)
        assert cert.kind == "infeasible" and verify_certificate(lp, cert)
        scale = cert.dual_ub[0]
        assert farkas_margin(lp, cert, [0, 1], Fraction(0)) == 2 * scale
        assert farkas_margin(lp, cert, [0, 1], Fraction(1)) == 0

    def test_maximize_raises_on_rejection(self, monkeypatch):
        import vcausality.certifier.polytope as poly

        lp, cert = self.lp_and_cert()
        monkeypatch.setattr(poly, "solve", lambda _: dataclasses.replace(cert, objective=Fraction(99)))
        with pytest.raises(CertificateError):
            poly.maximize(lp)


class TestExport:
    def test_round_trip(self, tmp_path):
        lp = LinearProgram(2, {0: Fraction(1, 3)}, name="demo")
        lp.inequalities.add({0: Fraction(2, 7), 1: 1}, Fraction(5, 11), "row")
        cert = solve(lp)
        assert lp_from_dict(lp_to_dict(lp)) == lp
        assert certificate_from_dict(certificate_to_dict(cert)) == cert
        path = tmp_path / "cert.json"
        dump_certificate(lp, cert, path)
        lp2, cert2 = load_certificate(path)
        assert lp2 == lp and cert2 == cert
        assert verify_certificate(lp2, cert2)


class TestPolytope:
    def test_constraint_counts(self):
        assert len(build_ns_polytope_constraints(4)) == 4 * 8 * 8
        assert len(build_bc_local_constraints()) == 128

    def test_objective_row_reproduces_s(self):
        obj = objective_row()
        b = uniform(4)
        assert sum(v * b.table.flat[j] for j, v in obj.items()) == evaluate_s(b) == 0

    def test_local_decomposition_of_uniform(self):
        lp, cert = local_decomposition_2222(uniform(2))
        assert cert.feasible and sum(cert.primal) == 1

    def test_local_decomposition_reconstructs(self):
        b = uniform(2)
        _, cert = local_decomposition_2222(b)
        recon = np.zeros((2, 2, 2, 2), dtype=object)
        recon.fill(Fraction(0))
        for w, (b0, b1, c0, c1) in zip(cert.primal, DETERMINISTIC_2222):
            for y, z in itertools.product((0, 1), repeat=2):
                recon[y, z, (b0, b1)[y], (c0, c1)[z]] += w
        assert (recon == b.table).all()

    def test_pr_box_has_no_local_decomposition(self):
        lp, cert = local_decomposition_2222(pr_box())
        assert cert.kind == "infeasible" and verify_certificate(lp, cert)

    def test_inconsistent_marginals(self):
        b = uniform(4)
        skewed = np.array(reduced(b, (0, 2, 3)).table)
        skewed[..., 0, :, :] = skewed[..., 0, :, :] * Fraction(3, 2)
        skewed[..., 1, :, :] = skewed[..., 1, :, :] * Fraction(1, 2)
        with pytest.raises(InconsistentMarginals):
            marginal_feasibility(reduced(b, (0, 1, 3)), Behavior(skewed, 3))


@pytest.mark.slow
class TestBoundProgram:
    def test_optimum_and_optimizer(self, bound_solution):
        lp, cert, _ = bound_solution
        assert cert.objective == 7
        opt = behavior_from_primal(cert.primal, 4)
        assert opt.exact and no_signalling_check(opt).no_signalling
        assert evaluate_s(opt) == 7
        for a, x, d, w in itertools.product((0, 1), repeat=4):
            try:
                pair = condition(opt, {0: (x, a), 3: (w, d)})
            except Exception:
                continue
            assert is_local_2222(pair)

    def test_dual_bound_certifies_every_feasible_point(self, bound_solution):
        # weak duality: y_eq . b_eq = 7 bounds S on any point satisfying the constraints
        lp, cert, _ = bound_solution
        assert sum(y * b for y, b in zip(cert.dual_eq, lp.equalities.rhs)) + \
            sum(y * b for y, b in zip(cert.dual_ub, lp.inequalities.rhs)) == 7
        assert all(y >= 0 for y in cert.dual_ub)

    def test_ns_only_optimum(self):
        cert = maximize(build_bound_lp(ns_only=True))
        assert cert.objective == 9
        assert cert.objective > Fraction(36, 5)
