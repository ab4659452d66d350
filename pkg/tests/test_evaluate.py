from fractions import Fraction
from itertools import product as iterproduct
from random import Random

import pytest

from conftest import build_expr, graph
from pathid.evaluate import EvaluationError, JointTable, evaluate
from pathid.expr import Cond, Kernel, Product, Ratio, Sum, VarRef, OUTCOME, FIXED_A, SUMMED
from pathid.npsem import observed_joint, random_spec


def hand_table():
    """2x2x2 joint over A, M, Y with unequal rational masses."""
    masses = {}
    weights = {
        (0, 0, 0): 3, (0, 0, 1): 1, (0, 1, 0): 2, (0, 1, 1): 2,
        (1, 0, 0): 1, (1, 0, 1): 3, (1, 1, 0): 2, (1, 1, 1): 2,
    }
    total = sum(weights.values())
    for key, w in weights.items():
        masses[key] = Fraction(w, total)
    return JointTable(("A", "M", "Y"), {v: (0, 1) for v in "AMY"}, masses)


class TestJointTable:
    def test_total_mass_must_be_one(self):
        with pytest.raises(ValueError, match="total mass"):
            JointTable(("A",), {"A": (0, 1)}, {(0,): Fraction(1, 2)})

    def test_marginals(self):
        t = hand_table()
        assert t.prob({"A": 0}) == Fraction(8, 16)
        assert t.prob({"A": 1, "M": 1}) == Fraction(4, 16)

    def test_conditional_direct_lookup(self):
        t = hand_table()
        # oracle: direct summation over the table
        num = sum(
            p for key, p in t.mass.items() if key[0] == 1 and key[2] == 1
        )
        den = sum(p for key, p in t.mass.items() if key[0] == 1)
        e = Cond((VarRef("Y", OUTCOME),), (VarRef("A", FIXED_A),))
        assert evaluate(e, t, 1, 0, 1) == num / den


class TestEvaluate:
    def test_factorization_normalizes(self):
        t = hand_table()
        # p(a) p(m|a) p(y|a,m) summed over everything is exactly 1
        a = VarRef("A", SUMMED, 0)
        m = VarRef("M", SUMMED, 1)
        y = VarRef("Y", SUMMED, 2)
        e = Sum(
            (("A", 0), ("M", 1), ("Y", 2)),
            Product((Cond((a,), ()), Cond((m,), (a,)), Cond((y,), (a, m)))),
        )
        assert evaluate(e, t, 1, 0) == 1

    def test_mediation_functional_against_direct_computation(self):
        t = hand_table()
        e = build_expr("m", [("y", "a m"), ("m", "a'")])
        # independent oracle: direct nested summation over the table
        expected = Fraction(0)
        for m in (0, 1):
            p_y = t.conditional({"Y": 1}, {"A": 1, "M": m})
            p_m = t.conditional({"M": m}, {"A": 0})
            expected += p_y * p_m
        assert evaluate(e, t, 1, 0, 1) == expected

    def test_zero_mass_conditioning_guarded_inside_sum(self):
        masses = {
            (0, 0, 0): Fraction(1, 2),
            (1, 1, 1): Fraction(1, 2),
        }
        t = JointTable(("A", "M", "Y"), {v: (0, 1) for v in "AMY"}, masses)
        # p(M=0 | A=1) = 0, so the factor p(y|a,m) at (A=1, M=0) is
        # undefined but guarded by the zero weight
        e = build_expr("m", [("y", "a m"), ("m", "a")])
        assert evaluate(e, t, 1, 0, 1) == 1

    def test_standalone_zero_conditioning_is_an_error(self):
        masses = {(0, 0): Fraction(1)}
        t = JointTable(("A", "Y"), {"A": (0, 1), "Y": (0, 1)}, masses)
        e = Cond((VarRef("Y", OUTCOME),), (VarRef("A", FIXED_A),))
        with pytest.raises(EvaluationError, match="zero-probability"):
            evaluate(e, t, 1, 0, 1)

    def test_kernel_nodes_are_rejected(self):
        t = hand_table()
        with pytest.raises(EvaluationError):
            evaluate(Kernel(frozenset({"Y"})), t, 1, 0, 1)

    def test_ratio(self):
        t = hand_table()
        e = Ratio(
            Cond((VarRef("Y", OUTCOME),), (VarRef("A", FIXED_A),)),
            Cond((VarRef("Y", OUTCOME),), ()),
        )
        direct = t.conditional({"Y": 1}, {"A": 1}) / t.prob({"Y": 1})
        assert evaluate(e, t, 1, 0, 1) == direct

    def test_normalization_over_outcome_domain(self):
        rng = Random(2)
        spec = random_spec(graph("confounded_mediation"), rng)
        t = observed_joint(spec)
        e = build_expr("m", [("y", "a m"), ("m", "a'")])
        total = sum(evaluate(e, t, 1, 0, y) for y in (0, 1))
        assert total == 1
