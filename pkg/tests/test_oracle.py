import math

import numpy as np
import pytest

from symhybrid.classicality import SectorState, coherent_state
from symhybrid.hybrid_algebra import momentum_matrix, position_matrix
from symhybrid.maps import requantize_hq
from symhybrid.oracle import (
    FullState,
    IntervalMeter,
    Propagator,
    full_operator,
    heisenberg,
    measure_interval,
    operator_factors,
    propagate,
)
from symhybrid.predictions import Interval
from symhybrid.weyl_algebra import OperatorPolynomial, symmetrize

import coupled
from oracles import expm_hermitian


def op(word, c=1.0, hbar=1.0):
    return OperatorPolynomial.from_word(word, hbar, c)


def coupled_h(k, hbar=1.0):
    return requantize_hq(coupled.hamiltonian(k, hbar))


def random_state(rng, dims):
    v = rng.normal(size=math.prod(dims)) + 1j * rng.normal(size=math.prod(dims))
    return FullState(v / np.linalg.norm(v), dims)


class TestFullOperator:
    def test_identity(self):
        assert np.allclose(full_operator(OperatorPolynomial.identity(1.0), (3, 4)), np.eye(12))

    def test_mode_placement(self):
        dims = (4, 5)
        assert np.allclose(full_operator(op((1,)), dims), np.kron(position_matrix(4), np.eye(5)))
        assert np.allclose(full_operator(op((4,)), dims), np.kron(np.eye(4), momentum_matrix(5)))

    def test_coupled_hamiltonian_hermitian(self):
        h = full_operator(coupled_h(0.7), (8, 8))
        assert np.allclose(h, h.conj().T)

    def test_factors_reassemble(self):
        a = coupled_h(0.3) + symmetrize((1, 2, 3, 4), 1.0)
        f = operator_factors(a, (5, 6))
        assert len({id(q) for _, q in f}) == len(f)
        assert np.allclose(sum(np.kron(c, q) for c, q in f), full_operator(a, (5, 6)))

    def test_rejects_third_mode(self):
        with pytest.raises(ValueError):
            full_operator(op((5,)), (3, 3))

    def test_state_validation(self):
        with pytest.raises(ValueError):
            FullState(np.ones(4), (2, 2))
        with pytest.raises(ValueError):
            FullState(np.array([1, 0, 0]), (2, 2))


class TestPropagation:
    dims = (40, 40)

    def state(self):
        return FullState.product(coherent_state(1.0, 0.5, 40), SectorState.fock(0, 40))

    def test_zero_time(self):
        s = self.state()
        out = propagate(s, coupled_h(0.1), 0.0)
        assert np.allclose(out.amplitudes, s.amplitudes, atol=1e-13)

    def test_uncoupled_period(self):
        s = self.state()
        out = propagate(s, coupled_h(0.0), 2 * math.pi)
        assert abs(np.vdot(s.amplitudes, out.amplitudes)) ** 2 > 1 - 1e-6

    def test_half_steps_compose(self):
        s = self.state()
        prop = Propagator.from_operator(coupled_h(0.4), self.dims)
        assert np.allclose(prop(prop(s, 0.35), 0.35).amplitudes, prop(s, 0.7).amplitudes, atol=1e-10)

    def test_norm_preserved(self):
        prop = Propagator.from_operator(coupled_h(0.4), self.dims)
        raw = prop.apply(self.state().amplitudes, 1.3)
        assert abs(np.linalg.norm(raw) - 1) < 1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            Propagator(np.array([[0, 1], [0, 0]]))


class TestBlockOracle:
    """Block-diagonal propagation must agree with dense diagonalization."""

    dims = (9, 7)

    def check(self, a, expect_block, swap=None):
        prop = Propagator.from_operator(a, self.dims)
        assert (prop.block is not None) == expect_block
        if swap is not None:
            assert prop.block[0] == swap
        u = expm_hermitian(full_operator(a, self.dims), 0.8, a.hbar)
        assert np.allclose(prop.matrix(0.8), u, atol=1e-10)
        s = random_state(np.random.default_rng(3), self.dims)
        assert np.allclose(prop.apply(s.amplitudes, 0.8), u @ s.amplitudes, atol=1e-10)

    def test_quantum_side_commutes(self):
        self.check(coupled_h(0.6), True, swap=False)

    def test_classical_side_commutes(self):
        a = symmetrize((3, 3), 1.0) + symmetrize((4, 4), 1.0) + op((1, 3), 0.5) + op((1, 1, 4), -0.3)
        a = a + op((1,), 0.2)
        self.check(a, True, swap=True)

    def test_dense_fallback(self):
        a = coupled_h(0.2) + symmetrize((1, 4)) * 0.4
        self.check(a, False)

    def test_hbar(self):
        self.check(coupled_h(0.6, 0.5), True)


class TestMeasurement:
    def test_examples(self):
        s = FullState(np.array([1, 1, 0, 0]) / math.sqrt(2), (2, 2))
        z = np.diag([0.0, 1.0, 2.0, 3.0])
        assert measure_interval(s, z, Interval(0.5, 0.5)) == pytest.approx(1.0)
        assert measure_interval(s, z, Interval(1.0, 0.25)) == pytest.approx(0.5)
        assert measure_interval(s, z, Interval(3.0, 0.5)) == 0.0

    @pytest.mark.parametrize("mode", [1, 2])
    def test_single_mode_meter_matches_full(self, mode):
        dims = (6, 5)
        s = random_state(np.random.default_rng(mode), dims)
        x = position_matrix(dims[mode - 1])
        full = np.kron(x, np.eye(5)) if mode == 1 else np.kron(np.eye(6), x)
        single, whole = IntervalMeter(x, mode), IntervalMeter(full)
        for i in (Interval(0.0, 0.5), Interval(1.0, 1.5), Interval(-2.0, 10.0)):
            assert single.probability(s, i) == pytest.approx(whole.probability(s, i), abs=1e-12)
            assert single.probability(s, i) == pytest.approx(measure_interval(s, full, i), abs=1e-12)

    def test_heisenberg_schrodinger(self):
        dims = (10, 10)
        a = coupled_h(0.5)
        prop = Propagator.from_operator(a, dims)
        s = FullState.product(coherent_state(0.4, -0.2, 10), SectorState.fock(1, 10))
        obs = full_operator(op((3,)), dims)
        i = Interval(0.2, 0.7)
        h_side = measure_interval(s, heisenberg(obs, prop, 0.9), i)
        s_side = measure_interval(prop(s, 0.9), obs, i)
        assert h_side == pytest.approx(s_side, abs=1e-10)
