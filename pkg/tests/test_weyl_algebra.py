import pickle

import pytest
from hypothesis import given, strategies as st

from symhybrid.weyl_algebra import (
    GeneratorId,
    OperatorPolynomial,
    adjoint,
    commutator,
    from_symmetric_basis,
    mode_of,
    multiply,
    normal_order,
    p,
    q,
    symmetric_norm,
    symmetrize,
    to_symmetric_basis,
)

from oracles import act, act_word, operator_distance, poly_distance, probe_functions, symmetrized_action

Q1, P1, Q2, P2 = 1, 2, 3, 4


def op(terms, hbar=1.0):
    return OperatorPolynomial(terms, hbar)


def close(a, b, tol=1e-12):
    return (a - b).norm() <= tol


words = st.lists(st.integers(1, 4), max_size=3)
coeffs = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@st.composite
def polys(draw, max_terms=3):
    out = OperatorPolynomial.zero()
    for _ in range(draw(st.integers(1, max_terms))):
        out = out + OperatorPolynomial.from_word(draw(words), 1.0, draw(coeffs))
    return out


class TestGenerators:
    def test_index_convention(self):
        assert q(1) == 1 and p(1) == 2 and q(2) == 3 and p(2) == 4
        assert mode_of(3) == 2
        g = GeneratorId(4)
        assert g.kind == "momentum" and g.mode == 2
        assert g.sector(1) == "quantum" and GeneratorId(1).sector(1) == "classical"

    def test_bad_index(self):
        with pytest.raises(ValueError):
            GeneratorId(0)


class TestNormalOrder:
    def test_single_swap(self):
        assert close(normal_order([P1, Q1]), op({(Q1, P1): 1, (): -1j}))

    def test_already_ordered(self):
        assert close(normal_order([Q1]), op({(Q1,): 1}))

    def test_two_swaps(self):
        assert close(normal_order([P1, Q1, Q1]), op({(Q1, Q1, P1): 1, (Q1,): -2j}))

    def test_distinct_modes_commute(self):
        assert close(normal_order([P2, Q1]), op({(Q1, P2): 1}))

    def test_hbar_scales_correction(self):
        assert close(normal_order([P1, Q1], 0.25), op({(Q1, P1): 1, (): -0.25j}, 0.25))

    @given(words)
    def test_idempotent(self, w):
        a = normal_order(w)
        again = OperatorPolynomial.zero()
        for word, c in a.items():
            again = again + normal_order(word) * c
        assert again == a

    @given(words)
    def test_matches_differential_action(self, w):
        a = normal_order(w)
        for f in probe_functions(2, 3):
            assert poly_distance(act(a, f), act_word(tuple(w), f, 1.0)) <= 1e-12


class TestMultiply:
    def test_examples(self):
        qq, pp = op({(Q1,): 1}), op({(P1,): 1})
        assert close(multiply(qq, pp), op({(Q1, P1): 1}))
        assert close(multiply(pp, qq), op({(Q1, P1): 1, (): -1j}))
        got = multiply(qq + pp, qq - pp)
        assert close(got, op({(Q1, Q1): 1, (P1, P1): -1, (): -1j}))

    def test_hbar_mismatch(self):
        with pytest.raises(ValueError):
            multiply(op({(Q1,): 1}, 1.0), op({(P1,): 1}, 2.0))

    @given(polys(), polys())
    def test_against_differential_oracle(self, a, b):
        prod = multiply(a, b)
        for f in probe_functions(2, 3):
            assert poly_distance(act(prod, f), act(a, act(b, f))) <= 1e-10

    @given(polys(), polys(), polys())
    def test_associative(self, a, b, c):
        lhs, rhs = multiply(multiply(a, b), c), multiply(a, multiply(b, c))
        assert symmetric_norm(lhs - rhs) <= 1e-12 * max(1.0, lhs.norm())


class TestCommutator:
    def test_examples(self):
        assert close(commutator(op({(Q1,): 1}), op({(P1,): 1})), op({(): 1j}))
        assert commutator(op({(Q1,): 1}), op({(Q2,): 1})).is_zero()
        assert close(commutator(op({(Q1, Q1): 1}), op({(P1,): 1})), op({(Q1,): 2j}))

    @given(polys(), polys(), polys())
    def test_jacobi(self, a, b, c):
        j = (commutator(a, commutator(b, c)) + commutator(b, commutator(c, a))
             + commutator(c, commutator(a, b)))
        assert symmetric_norm(j) <= 1e-12 * max(1.0, a.norm() * b.norm() * c.norm())

    @given(polys(), polys())
    def test_antisymmetric(self, a, b):
        assert symmetric_norm(commutator(a, b) + commutator(b, a)) <= 1e-12


class TestSymmetrize:
    def test_examples(self):
        assert close(symmetrize([Q1, P1]), op({(Q1, P1): 1, (): -0.5j}))
        assert close(symmetrize([Q1]), op({(Q1,): 1}))
        assert close(symmetrize([Q1, Q1]), op({(Q1, Q1): 1}))

    @pytest.mark.parametrize("w", [(Q1, P1, P1), (P1, Q1, P1, Q1), (Q1, P1, Q2, P2), (P2, P2, Q2)])
    def test_against_permutation_average(self, w):
        s = symmetrize(w)
        for f in probe_functions(2, 4):
            assert poly_distance(act(s, f), symmetrized_action(w, f, 1.0)) <= 1e-12

    @given(words)
    def test_self_adjoint(self, w):
        s = symmetrize(w)
        assert close(adjoint(s), s)


class TestAdjoint:
    def test_examples(self):
        assert close(adjoint(op({(Q1,): 1j})), op({(Q1,): -1j}))
        assert close(adjoint(op({(Q1, P1): 1})), op({(Q1, P1): 1, (): -1j}))

    @given(polys())
    def test_involution(self, a):
        assert close(adjoint(adjoint(a)), a)

    @given(polys(), polys())
    def test_anti_homomorphism(self, a, b):
        d = adjoint(multiply(a, b)) - multiply(adjoint(b), adjoint(a))
        assert symmetric_norm(d) <= 1e-12 * max(1.0, a.norm() * b.norm())


class TestSymmetricBasis:
    def test_examples(self):
        assert to_symmetric_basis(op({(Q1, P1): 1, (): -0.5j})) == pytest.approx({(Q1, P1): 1})
        assert to_symmetric_basis(op({(Q1,): 1})) == {(Q1,): 1}
        got = to_symmetric_basis(op({(Q1, P1): 1}))
        assert got.keys() == {(Q1, P1), ()}
        assert got[()] == pytest.approx(0.5j)

    @given(polys())
    def test_round_trip(self, a):
        back = from_symmetric_basis(to_symmetric_basis(a), a.hbar)
        assert (back - a).norm() <= 1e-12 * max(1.0, a.norm())

    def test_norm_does_not_prune(self):
        tiny = op({(Q1,): 1e-15})
        assert tiny.is_zero()  # below the storage threshold
        from symhybrid._kernel import pruning
        with pruning(0.0):
            tiny = op({(Q1,): 1e-15})
        assert symmetric_norm(tiny) == pytest.approx(1e-15)


class TestValue:
    def test_immutable(self):
        a = op({(Q1,): 1})
        with pytest.raises(AttributeError):
            a.hbar = 2.0

    def test_pickle_keeps_small_terms(self):
        from symhybrid._kernel import pruning
        with pruning(0.0):
            a = op({(Q1,): 1e-16, (P1,): 1.0})
        b = pickle.loads(pickle.dumps(a))
        assert b.terms == a.terms and b.hbar == a.hbar

    def test_pruning_threshold(self):
        assert op({(Q1,): 1e-15, (P1,): 1.0}).terms == {(P1,): 1.0}

    def test_operator_oracle_helper(self):
        a = symmetrize([Q1, P1])
        assert operator_distance(a, a) == 0.0
