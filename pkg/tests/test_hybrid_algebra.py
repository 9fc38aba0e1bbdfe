import math
import pickle

import numpy as np
import pytest
from hypothesis import given, strategies as st

from symhybrid.hybrid_algebra import (
    HybridObservable,
    PhasePoint,
    bracket,
    bt_bracket,
    classical_derivative,
    coefficient_norm,
    dagger,
    evaluate_classical,
    is_hermitian,
    momentum_matrix,
    pointwise,
    poisson,
    position_matrix,
    star,
    to_matrix,
)
from symhybrid.identities import moyal_product, random_hybrid
from symhybrid.maps import dequantize_hq, requantize_hq
from symhybrid.weyl_algebra import OperatorPolynomial, commutator, multiply

Q, P = 3, 4


def H(terms, hbar=1.0):
    return HybridObservable(terms, 1, hbar)


def O(terms, hbar=1.0):
    return OperatorPolynomial(terms, hbar)


def near(a, b, tol=1e-12):
    return coefficient_norm(a - b) <= tol


q = HybridObservable.variable(1)
x = HybridObservable.variable(2)
QQ = HybridObservable.quantum(Q)
PP = HybridObservable.quantum(P)
seeds = st.integers(0, 2**32 - 1)


class TestStar:
    def test_canonical_pair(self):
        assert near(star(q, x), H({(1, 1): 1, (0, 0): 0.5j}))

    def test_squares(self):
        got = star(H({(2, 0): 1}), H({(0, 2): 1}))
        assert near(got, H({(2, 2): 1, (1, 1): 2j, (0, 0): -0.5}))

    def test_squares_against_operator_route(self):
        a, b = H({(2, 0): 1}), H({(0, 2): 1})
        ref = dequantize_hq(multiply(requantize_hq(a), requantize_hq(b)))
        assert near(star(a, b), ref)

    def test_quantum_constants(self):
        assert near(star(QQ, PP), H({(0, 0): O({(Q, P): 1})}))

    def test_left_coefficient_stays_left(self):
        a = H({(1, 0): O({(P,): 1})})
        b = H({(0, 1): O({(Q,): 1})})
        # P Q = Q P - i
        want = H({(1, 1): O({(Q, P): 1, (): -1j}), (0, 0): O({(Q, P): 0.5j, (): 0.5})})
        assert near(star(a, b), want)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            star(q, HybridObservable.variable(1, hbar=2.0))
        with pytest.raises(ValueError):
            star(q, HybridObservable.variable(1, n_classical=2))

    @given(seeds)
    def test_associative(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (random_hybrid(rng) for _ in range(3))
        assert coefficient_norm(star(star(a, b), c) - star(a, star(b, c))) <= 1e-12

    @given(seeds)
    def test_identity_and_distributive(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (random_hybrid(rng) for _ in range(3))
        one = HybridObservable.identity()
        assert near(star(one, a), a) and near(star(a, one), a)
        assert coefficient_norm(star(a, b + c) - star(a, b) - star(a, c)) <= 1e-12

    @given(seeds)
    def test_classical_limit_is_moyal(self, seed):
        rng = np.random.default_rng(seed)
        f = random_hybrid(rng, classical_only=True)
        g = random_hybrid(rng, classical_only=True)
        scal = lambda h: {k: v.coefficient(()) for k, v in h.items()}  # noqa: E731
        ref = H(moyal_product(scal(f), scal(g), 1.0))
        assert coefficient_norm(star(f, g) - ref) <= 1e-12


class TestBracket:
    def test_examples(self):
        assert near(bracket(q, x), HybridObservable.constant(1j))
        assert near(bracket(QQ, PP), HybridObservable.constant(1j))
        assert near(bracket(q, H({(0, 1): O({(Q,): 1})})), H({(0, 0): O({(Q,): 1j})}))

    @given(seeds)
    def test_lie_axioms(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (random_hybrid(rng) for _ in range(3))
        assert coefficient_norm(bracket(a, b) + bracket(b, a)) <= 1e-12
        jac = bracket(a, bracket(b, c)) + bracket(b, bracket(c, a)) + bracket(c, bracket(a, b))
        assert coefficient_norm(jac) <= 1e-10

    @given(seeds)
    def test_quantum_limit_is_commutator(self, seed):
        rng = np.random.default_rng(seed)
        a = random_hybrid(rng, quantum_only=True)
        b = random_hybrid(rng, quantum_only=True)
        ref = commutator(a.coefficient((0, 0)), b.coefficient((0, 0)))
        assert near(bracket(a, b), HybridObservable.constant(ref))


class TestBtBracket:
    def test_exact_at_low_degree(self):
        assert near(bt_bracket(q, x), HybridObservable.constant(1j))
        f, g = H({(2, 0): 1, (1, 1): 0.3}), H({(0, 2): 1, (1, 0): 2})
        assert near(bt_bracket(f, g), poisson(f, g) * 1j)

    def test_not_a_lie_bracket(self):
        rng = np.random.default_rng(7)
        a, b, c = (random_hybrid(rng, classical_degree=3) for _ in range(3))
        jac = (bt_bracket(a, bt_bracket(b, c)) + bt_bracket(b, bt_bracket(c, a))
               + bt_bracket(c, bt_bracket(a, b)))
        assert coefficient_norm(jac) > 1e-6

    @staticmethod
    def _dense(rng, hbar):
        """Every classical monomial of degree <= 3 with a generic quantum coefficient."""
        words = [(), (Q,), (P,), (Q, Q), (Q, P), (P, P)]
        terms = {}
        for i in range(4):
            for j in range(4 - i):
                c = rng.normal(size=len(words)) + 1j * rng.normal(size=len(words))
                terms[(i, j)] = O(dict(zip(words, c)), hbar)
        return H(terms, hbar)

    @classmethod
    def _gap(cls, hbar, seed=3):
        rng = np.random.default_rng(seed)
        a, b = cls._dense(rng, hbar), cls._dense(rng, hbar)
        return coefficient_norm(bracket(a, b) - bt_bracket(a, b))

    def test_second_order_bound(self):
        c = self._gap(1e-2) / 1e-2**2
        assert self._gap(1e-3) < c * 1e-3**2

    def test_scaling_ratio(self):
        # The O(hbar^2) term is a commutator of coefficients, which carries its
        # own factor of hbar, so the gap shrinks as hbar^3.
        ratio = self._gap(1e-2) / self._gap(1e-3)
        assert 1000 / 1.3 <= ratio <= 1000 * 1.3


class TestDagger:
    def test_examples(self):
        assert near(dagger(q * 1j), q * -1j)
        got = dagger(H({(1, 0): O({(Q, P): 1})}))
        assert near(got, H({(1, 0): O({(Q, P): 1, (): -1j})}))

    @given(seeds)
    def test_involution_and_anti_homomorphism(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_hybrid(rng), random_hybrid(rng)
        assert near(dagger(dagger(a)), a)
        assert coefficient_norm(dagger(star(a, b)) - star(dagger(b), dagger(a))) <= 1e-12

    def test_is_hermitian(self):
        assert is_hermitian(q + QQ + H({(1, 0): O({(Q,): 1})}))
        assert not is_hermitian(q * 1j)


class TestDerivativeAndEvaluation:
    def test_power_rule(self):
        a = H({(2, 1): O({(Q,): 1})})
        assert near(classical_derivative(a, 1), H({(1, 1): O({(Q,): 2})}))
        assert classical_derivative(QQ, 1).is_zero()
        assert near(classical_derivative(classical_derivative(H({(1, 1): 1}), 1), 2),
                    HybridObservable.identity())
        with pytest.raises(ValueError):
            classical_derivative(q, 3)

    @given(seeds, st.integers(1, 2))
    def test_leibniz_for_pointwise(self, seed, i):
        rng = np.random.default_rng(seed)
        a, b = random_hybrid(rng), random_hybrid(rng)
        lhs = classical_derivative(pointwise(a, b), i)
        rhs = pointwise(classical_derivative(a, i), b) + pointwise(a, classical_derivative(b, i))
        assert coefficient_norm(lhs - rhs) <= 1e-12

    def test_evaluate(self):
        assert evaluate_classical(H({(1, 0): O({(Q,): 1})}), (2.0, 0.0)) == O({(Q,): 2.0})
        e = evaluate_classical(H({(2, 0): 0.5, (0, 2): 0.5}), PhasePoint([1.0, 1.0]))
        assert e == O({(): 1.0})
        with pytest.raises(ValueError):
            evaluate_classical(q, (1.0,))

    def test_evaluate_closed_form_at_quarter_period(self):
        t, k = math.pi / 2, 1.0
        qt = H({(1, 0): math.cos(t), (0, 1): math.sin(t), (0, 0): O({(Q,): k * math.sin(t)})})
        e = evaluate_classical(qt, (1.0, 0.0))
        assert abs(e.coefficient((Q,)) - 1.0) < 1e-15 and abs(e.coefficient(())) < 1e-15


class TestFockMatrices:
    def test_identity(self):
        assert np.allclose(to_matrix(O({(): 1}), 5), np.eye(5))

    def test_position_dim2(self):
        m = to_matrix(O({(Q,): 1}), 2)
        assert np.allclose(m, np.array([[0, 1], [1, 0]]) / math.sqrt(2))

    def test_commutator_corner(self):
        dim, hbar = 40, 1.0
        c = to_matrix(commutator(O({(Q,): 1}), O({(P,): 1})), dim)
        x, p = position_matrix(dim, hbar), momentum_matrix(dim, hbar)
        direct = x @ p - p @ x
        want = 1j * hbar * np.eye(dim)
        want[-1, -1] = -1j * hbar * (dim - 1)
        assert np.allclose(direct, want)
        assert np.allclose(c, 1j * hbar * np.eye(dim))  # symbolic form is exact

    def test_words_multiply_left_to_right(self):
        m = to_matrix(O({(Q, P): 1}), 6)
        assert np.allclose(m, position_matrix(6) @ momentum_matrix(6))

    def test_rejects_classical_generators(self):
        with pytest.raises(ValueError):
            to_matrix(O({(1,): 1}), 4)


def test_pickle_round_trip():
    a = H({(1, 2): O({(Q, P): 1 + 2j}), (0, 0): 3})
    assert pickle.loads(pickle.dumps(a)) == a


def test_immutable():
    with pytest.raises(AttributeError):
        q.hbar = 3.0
