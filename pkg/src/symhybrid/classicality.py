"""Classical-sector data, error kets and the order-L classicality test.

Classical-sector wavefunctions live on a truncated Fock basis of the single
classical mode (N = 1 for all numerics).  Classical variables are indexed as in
:class:`~symhybrid.hybrid_algebra.PhasePoint`: ``1..N`` are positions and
``N+1..2N`` momenta.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence as Seq

import numpy as np

from .hybrid_algebra import (
    HybridObservable,
    PhasePoint,
    classical_derivative,
    evaluate_classical,
    momentum_matrix,
    position_matrix,
    to_matrix,
)


@dataclass(frozen=True)
class ClassicalData:
    """Initial values ``centers`` with error margins ``margins`` (both length 2N)."""

    centers: tuple
    margins: tuple

    def __init__(self, centers: Iterable[float], margins: Iterable[float]):
        centers = tuple(float(c) for c in centers)
        margins = tuple(float(m) for m in margins)
        if len(centers) != len(margins) or len(centers) % 2 or not centers:
            raise ValueError("centers and margins must both have length 2N, N >= 1")
        if any(not m > 0 for m in margins):
            raise ValueError("margins must be strictly positive")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "margins", margins)

    @property
    def n_classical(self) -> int:
        return len(self.centers) // 2

    @property
    def point(self) -> PhasePoint:
        return PhasePoint(self.centers)


@dataclass(frozen=True)
class SectorState:
    """Normalized amplitudes of one mode on the number basis ``|0>..|dim-1>``."""

    amplitudes: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amp.size < 2:
            raise ValueError("dim must be >= 2")
        if abs(np.vdot(amp, amp).real - 1.0) > 1e-10:
            raise ValueError("state is not normalized")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def fock(cls, n: int, dim: int, hbar: float = 1.0) -> "SectorState":
        amp = np.zeros(dim, dtype=complex)
        amp[n] = 1.0
        return cls(amp, hbar)

    @classmethod
    def from_amplitudes(cls, amplitudes, hbar: float = 1.0, normalize: bool = True):
        amp = np.asarray(amplitudes, dtype=complex)
        if normalize:
            amp = amp / np.linalg.norm(amp)
        return cls(amp, hbar)


@dataclass(frozen=True)
class Sequence:
    """Ordered classical indices ``(i_1, ..., i_n)``."""

    indices: tuple

    def __init__(self, indices: Iterable[int]):
        idx = tuple(int(i) for i in indices)
        if not idx or any(i < 1 for i in idx):
            raise ValueError("a sequence needs at least one index, all >= 1")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def delta(self, data: ClassicalData) -> float:
        """``delta_S`` = product of the margins along the sequence."""
        return math.prod(data.margins[i - 1] for i in self.indices)

    def __add__(self, other: "Sequence") -> "Sequence":
        return Sequence(self.indices + other.indices)


def coherent_state(center_q: float, center_p: float, dim: int, hbar: float = 1.0) -> SectorState:
    alpha = (center_q + 1j * center_p) / math.sqrt(2 * hbar)
    n = np.arange(dim)
    if alpha == 0:
        amp = (n == 0).astype(complex)
    else:
        logmag = n * math.log(abs(alpha)) - 0.5 * np.array([math.lgamma(k + 1) for k in n])
        amp = np.exp(logmag - abs(alpha) ** 2 / 2) * np.exp(1j * n * np.angle(alpha))
    kept = float(np.vdot(amp, amp).real)
    if kept < 1 - 1e-8:
        raise ValueError(
            f"dim={dim} keeps only {kept:.3g} of the coherent state norm; increase dim"
        )
    return SectorState(amp / math.sqrt(kept), hbar)


def _classical_matrix(i: int, dim: int, hbar: float) -> np.ndarray:
    if i == 1:
        return position_matrix(dim, hbar)
    if i == 2:
        return momentum_matrix(dim, hbar)
    raise ValueError("Fock numerics support a single classical mode (indices 1, 2)")


def error_ket(seq: Sequence, state: SectorState, data: ClassicalData) -> np.ndarray:
    """``(O_i1 - O_i1^0)...(O_in - O_in^0)|state>``, unnormalized."""
    eye = np.eye(state.dim)
    v = state.amplitudes.copy()
    for i in reversed(seq.indices):
        v = (_classical_matrix(i, state.dim, state.hbar) - data.centers[i - 1] * eye) @ v
    return v


def _derivative_multisets(obs: HybridObservable):
    """Exponent vectors ``d != 0`` with a nonzero ``d``-th mixed derivative."""
    out = set()
    for idx in (k for k, _ in obs.items()):
        for d in itertools.product(*(range(e + 1) for e in idx)):
            if any(d):
                out.add(d)
    return out


def relevant_sequences(observables: Iterable[HybridObservable], order: int = 1) -> list[Sequence]:
    """Sequences along which some observable has a nonvanishing mixed derivative.

    ``observables`` should already be evolved to every time of interest.
    For ``order=2`` the result is every concatenation of two first-order
    sequences.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    multisets = set()
    for obs in observables:
        multisets |= _derivative_multisets(obs)
    first = set()
    for d in multisets:
        letters = [i + 1 for i, e in enumerate(d) for _ in range(e)]
        first.update(itertools.permutations(letters))
    first = sorted(first, key=lambda s: (len(s), s))
    if order == 1:
        return [Sequence(s) for s in first]
    pairs = sorted({a + b for a in first for b in first}, key=lambda s: (len(s), s))
    return [Sequence(s) for s in pairs]


@dataclass
class SequenceCheck:
    sequence: Sequence
    norm2: float
    bound2: float

    @property
    def passed(self) -> bool:
        return self.norm2 <= self.bound2


@dataclass
class ClassicalityReport:
    entries: list[SequenceCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list[SequenceCheck]:
        return [e for e in self.entries if not e.passed]


def check_classicality(
    state: SectorState, data: ClassicalData, seqs: Seq[Sequence]
) -> ClassicalityReport:
    """Test ``<E_S|E_S> <= delta_S^2`` for every sequence."""
    report = ClassicalityReport()
    for s in seqs:
        e = error_ket(s, state, data)
        report.entries.append(SequenceCheck(s, float(np.vdot(e, e).real), s.delta(data) ** 2))
    return report


def _validate_p_l(p: float, L: int):
    if not 0 <= p < 1:
        raise ValueError("p must lie in [0, 1)")
    if int(L) != L or L < 1:
        raise ValueError("L must be an integer >= 1")


def _derivative_matrices(b: HybridObservable, centers, dim: int):
    """``dB/dO_i`` at ``centers`` as quantum-sector matrices, one per classical index."""
    mats = []
    for i in range(1, 2 * b.n_classical + 1):
        op = evaluate_classical(classical_derivative(b, i), centers)
        mats.append(to_matrix(op, dim, b.n_classical))
    return mats


def spread_bound(
    b_evolved: HybridObservable,
    data: ClassicalData,
    eigvec,
    p: float,
    L: int = 1,
) -> float:
    """First-order spread ``sum_i ||dB/dO_i|v>|| delta_i / (1-p)^(1/(2L))``."""
    _validate_p_l(p, L)
    v = np.asarray(eigvec, dtype=complex)
    mats = _derivative_matrices(b_evolved, data.centers, v.size)
    num = sum(np.linalg.norm(m @ v) * d for m, d in zip(mats, data.margins))
    return float(num / (1 - p) ** (1 / (2 * L)))


def delta_b_first_order(
    b_evolved: HybridObservable, centers, eigvec, phi_c: SectorState
) -> float:
    """Norm of the first-order error ket ``sum_i dB/dO_i|v> (x) (O_i - O_i^0)|phi_c>``.

    The terms are added as vectors, so for observables of degree one in the
    classical variables this equals the exact error-ket norm.
    """
    v = np.asarray(eigvec, dtype=complex)
    centers = tuple(centers)
    mats = _derivative_matrices(b_evolved, centers, v.size)
    data = ClassicalData(centers, [1.0] * len(centers))
    total = np.zeros(phi_c.dim * v.size, dtype=complex)
    for i, m in enumerate(mats, start=1):
        total += np.kron(error_ket(Sequence([i]), phi_c, data), m @ v)
    return float(np.linalg.norm(total))
