"""Brute-force full-quantum reference on a truncated two-mode Fock space.

Mode 1 is the would-be classical mode, mode 2 the quantum mode; states and
operators use ``kron(mode1, mode2)`` ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classicality import SectorState
from .hybrid_algebra import (
    HybridObservable,
    evaluate_classical,
    momentum_matrix,
    position_matrix,
    to_matrix,
)
from .predictions import Interval, spectrum_from_matrix
from .weyl_algebra import OperatorPolynomial


@dataclass(frozen=True)
class FullState:
    amplitudes: np.ndarray
    dims: tuple
    hbar: float = 1.0

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        dims = tuple(int(d) for d in self.dims)
        if amp.size != math.prod(dims):
            raise ValueError(f"{amp.size} amplitudes do not fit dims {dims}")
        if abs(np.vdot(amp, amp).real - 1.0) > 1e-10:
            raise ValueError("state is not normalized")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def product(cls, phi_c: SectorState, phi_q: SectorState) -> "FullState":
        if phi_c.hbar != phi_q.hbar:
            raise ValueError("sector states disagree on hbar")
        return cls(np.kron(phi_c.amplitudes, phi_q.amplitudes), (phi_c.dim, phi_q.dim), phi_c.hbar)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _mode_matrices(dim: int, hbar: float):
    return position_matrix(dim, hbar), momentum_matrix(dim, hbar)


def operator_factors(a: OperatorPolynomial, dims) -> list[tuple[np.ndarray, np.ndarray]]:
    """Write ``a`` as ``sum_m kron(C_m, Q_m)`` with distinct quantum factors ``Q_m``."""
    dc, dq = dims
    if a.generators - {1, 2, 3, 4}:
        raise ValueError("full_operator supports exactly two modes (generators 1..4)")
    mc = dict(zip((1, 2), _mode_matrices(dc, a.hbar)))
    mq = dict(zip((3, 4), _mode_matrices(dq, a.hbar)))
    groups: dict[tuple, np.ndarray] = {}
    qmats: dict[tuple, np.ndarray] = {}
    for w, c in a.items():
        wc = tuple(g for g in w if g <= 2)
        wq = tuple(g for g in w if g > 2)
        cm = np.eye(dc, dtype=complex)
        for g in wc:
            cm = cm @ mc[g]
        if wq not in qmats:
            qm = np.eye(dq, dtype=complex)
            for g in wq:
                qm = qm @ mq[g]
            qmats[wq] = qm
            groups[wq] = np.zeros((dc, dc), dtype=complex)
        groups[wq] += c * cm
    return [(groups[k], qmats[k]) for k in sorted(groups)]


def full_operator(a: OperatorPolynomial, dims) -> np.ndarray:
    """Matrix of a two-mode operator polynomial; words multiplied left to right."""
    dc, dq = dims
    out = np.zeros((dc * dq, dc * dq), dtype=complex)
    for cm, qm in operator_factors(a, dims):
        out += np.kron(cm, qm)
    return out


def _check_hermitian(h: np.ndarray, what: str = "operator"):
    resid = np.abs(h - h.conj().T).max()
    if resid > 1e-10 * max(1.0, np.abs(h).max()):
        raise ValueError(f"{what} is not Hermitian (residual {resid:.3g})")


def _joint_basis(mats: list[np.ndarray]) -> np.ndarray | None:
    """Common eigenbasis of commuting normal matrices, or None."""
    scale = max(1.0, max(np.abs(m).max() for m in mats))
    for i, x in enumerate(mats):
        if np.abs(x @ x.conj().T - x.conj().T @ x).max() > 1e-10 * scale**2:
            return None
        for y in mats[i + 1:]:
            if np.abs(x @ y - y @ x).max() > 1e-10 * scale**2:
                return None
    # a generic Hermitian combination separates every joint eigenspace
    rng = np.random.default_rng(12345)
    k = sum(
        r * (m + m.conj().T) / 2 + s * (m - m.conj().T) / 2j
        for m, r, s in zip(mats, rng.normal(size=len(mats)), rng.normal(size=len(mats)))
    )
    _, v = np.linalg.eigh(k)
    for m in mats:
        d = v.conj().T @ m @ v
        if np.abs(d - np.diag(np.diag(d))).max() > 1e-9 * scale:
            return None
    return v


class Propagator:
    """``exp(-i h t / hbar)`` from one eigendecomposition, reusable over times.

    Built from a dense matrix, or via :meth:`from_operator`, which block
    diagonalizes ``sum_m kron(C_m, Q_m)`` whenever the factors on one side
    commute.  The blocks are exact; only the cost changes.
    """

    def __init__(self, h: np.ndarray | None = None, hbar: float = 1.0):
        self.hbar = hbar
        self.block = None
        if h is not None:
            h = np.asarray(h, dtype=complex)
            _check_hermitian(h, "Hamiltonian")
            self.energies, self.vectors = np.linalg.eigh(h)

    @classmethod
    def from_operator(cls, a: OperatorPolynomial, dims) -> "Propagator":
        factors = operator_factors(a, dims)
        for swap in (False, True):
            side = [c for c, _ in factors] if swap else [q for _, q in factors]
            v = _joint_basis(side)
            if v is None:
                continue
            other = [q for _, q in factors] if swap else [c for c, _ in factors]
            mu = np.array([np.diag(v.conj().T @ m @ v) for m in side])  # (n_terms, d)
            blocks = np.einsum("mj,mab->jab", mu, np.array(other))
            for b in blocks:
                _check_hermitian(b, "Hamiltonian block")
            self = cls(None, a.hbar)
            self.block = (swap, v)
            self.energies, self.vectors = np.linalg.eigh(blocks)
            self.dims = tuple(dims)
            return self
        return cls(full_operator(a, dims), a.hbar)

    def apply(self, amplitudes: np.ndarray, t: float) -> np.ndarray:
        if self.block is None:
            coeff = self.vectors.conj().T @ amplitudes
            return self.vectors @ (np.exp(-1j * self.energies * t / self.hbar) * coeff)
        swap, v = self.block
        psi = np.asarray(amplitudes).reshape(self.dims)
        if swap:
            psi = psi.T
        # columns indexed by the joint eigenbasis of the commuting side
        cols = psi @ v.conj()
        c = np.einsum("jba,bj->aj", self.vectors.conj(), cols)
        c *= np.exp(-1j * self.energies.T * t / self.hbar)
        cols = np.einsum("jab,bj->aj", self.vectors, c)
        psi = cols @ v.T
        return (psi.T if swap else psi).ravel()

    def matrix(self, t: float) -> np.ndarray:
        if self.block is None:
            phase = np.exp(-1j * self.energies * t / self.hbar)
            return (self.vectors * phase) @ self.vectors.conj().T
        n = math.prod(self.dims)
        return np.column_stack([self.apply(e, t) for e in np.eye(n, dtype=complex)])

    def __call__(self, state: FullState, t: float) -> FullState:
        amp = self.apply(state.amplitudes, t)
        return FullState(amp / np.linalg.norm(amp), state.dims, state.hbar)


def propagate(state: FullState, h, t: float) -> FullState:
    """Evolve ``state``; ``h`` is a dense matrix or a two-mode operator polynomial."""
    if isinstance(h, OperatorPolynomial):
        return Propagator.from_operator(h, state.dims)(state, t)
    return Propagator(h, state.hbar)(state, t)


def heisenberg(op: np.ndarray, prop: Propagator, t: float) -> np.ndarray:
    """``U(t)^dagger op U(t)``."""
    u = prop.matrix(t)
    return u.conj().T @ op @ u


def measure_interval(state: FullState, op: np.ndarray, i: Interval) -> float:
    """Probability that measuring Hermitian ``op`` on ``state`` lands in ``i``."""
    s = spectrum_from_matrix(op, state.amplitudes, degeneracy_tolerance=0.0)
    return float(s.probabilities[i.contains(s.eigenvalues)].sum())


class IntervalMeter:
    """Diagonalizes ``op`` once; answers interval probabilities for many states.

    With ``mode`` set, ``op`` is a single-mode matrix acting on that mode
    (1 or 2) of the two-mode space.
    """

    def __init__(self, op: np.ndarray, mode: int | None = None):
        op = np.asarray(op, dtype=complex)
        _check_hermitian(op)
        if mode not in (None, 1, 2):
            raise ValueError("mode must be 1, 2 or None")
        self.mode = mode
        self.values, self.vectors = np.linalg.eigh(op)

    def weights(self, state: FullState) -> np.ndarray:
        if self.mode is None:
            return np.abs(self.vectors.conj().T @ state.amplitudes) ** 2
        psi = state.amplitudes.reshape(state.dims)
        if self.mode == 1:
            return (np.abs(self.vectors.conj().T @ psi) ** 2).sum(axis=1)
        return (np.abs(psi @ self.vectors.conj()) ** 2).sum(axis=0)

    def probability(self, state: FullState, i: Interval) -> float:
        w = self.weights(state)
        return float(w[i.contains(self.values)].sum())


def exact_delta_b(
    b_evolved: HybridObservable,
    a_full: np.ndarray,
    centers,
    eigvec,
    phi_c: SectorState,
) -> float:
    """``||(A - 1 (x) B(centers)) |phi_c> (x) |eigvec>||`` with ``A`` on the full space."""
    v = np.asarray(eigvec, dtype=complex)
    b = to_matrix(evaluate_classical(b_evolved, tuple(centers)), v.size, b_evolved.n_classical)
    psi = np.kron(phi_c.amplitudes, v)
    diff = a_full @ psi - np.kron(phi_c.amplitudes, b @ v)
    return float(np.linalg.norm(diff))
