"""Hybrid-side predictions: spectra, interval probabilities, sandwich bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classicality import ClassicalData, SectorState, spread_bound
from .hybrid_algebra import HybridObservable, evaluate_classical, to_matrix


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[center - half_width, center + half_width]``."""

    center: float
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be > 0")

    @property
    def low(self) -> float:
        return self.center - self.half_width

    @property
    def high(self) -> float:
        return self.center + self.half_width

    def contains(self, x) -> np.ndarray | bool:
        return (self.low <= x) & (x <= self.high)


@dataclass
class SpectrumTable:
    """Merged eigenvalues (ascending) with their probabilities.

    ``vectors[k]`` holds an orthonormal basis of the k-th eigenspace as columns.
    """

    eigenvalues: np.ndarray
    probabilities: np.ndarray
    degeneracy_tolerance: float = 1e-9
    vectors: list = field(default_factory=list, repr=False)

    @property
    def entries(self) -> list[tuple[float, float]]:
        return list(zip(self.eigenvalues.tolist(), self.probabilities.tolist()))

    def __len__(self):
        return len(self.eigenvalues)


def spectrum_from_matrix(
    mat: np.ndarray, state, degeneracy_tolerance: float = 1e-9
) -> SpectrumTable:
    """Spectral table of Hermitian ``mat`` for the normalized vector ``state``."""
    mat = np.asarray(mat, dtype=complex)
    herm = np.abs(mat - mat.conj().T).max() if mat.size else 0.0
    if herm > 1e-10 * max(1.0, np.abs(mat).max()):
        raise ValueError(f"matrix is not Hermitian (residual {herm:.3g})")
    vals, vecs = np.linalg.eigh(mat)
    amp = np.asarray(state, dtype=complex)
    weights = np.abs(vecs.conj().T @ amp) ** 2
    groups: list[list[int]] = []
    for k, lam in enumerate(vals):
        if groups and abs(lam - vals[groups[-1][0]]) <= degeneracy_tolerance * max(1.0, abs(lam)):
            groups[-1].append(k)
        else:
            groups.append([k])
    eig = np.array([vals[g].mean() for g in groups])
    prob = np.array([weights[g].sum() for g in groups])
    return SpectrumTable(eig, prob, degeneracy_tolerance, [vecs[:, g] for g in groups])


def hybrid_spectrum(
    b_evolved: HybridObservable,
    centers,
    phi_q: SectorState,
    dim: int | None = None,
    degeneracy_tolerance: float = 1e-9,
) -> SpectrumTable:
    """Spectrum of ``B(centers)`` on the quantum sector, weighted by ``phi_q``."""
    dim = phi_q.dim if dim is None else dim
    if dim != phi_q.dim:
        raise ValueError(f"phi_q has dim {phi_q.dim}, requested {dim}")
    op = evaluate_classical(b_evolved, tuple(centers))
    return spectrum_from_matrix(to_matrix(op, dim, b_evolved.n_classical), phi_q.amplitudes,
                                degeneracy_tolerance)


def interval_probability(s: SpectrumTable, i: Interval) -> float:
    return float(s.probabilities[i.contains(s.eigenvalues)].sum())


def spectrum_spread(
    b_evolved: HybridObservable,
    data: ClassicalData,
    s: SpectrumTable,
    p: float,
    L: int = 1,
    min_weight: float = 1e-14,
) -> float:
    """Largest spread over eigenvectors that carry probability above ``min_weight``.

    Within a degenerate eigenspace the spread of the normalized projection of
    ``phi_q`` is not separately tracked; every basis vector is checked instead.
    """
    worst = 0.0
    for prob, vecs in zip(s.probabilities, s.vectors):
        if prob <= min_weight:
            continue
        for v in vecs.T:
            worst = max(worst, spread_bound(b_evolved, data, v, p, L))
    return worst


def additive_factor(p: float, L: int) -> float:
    """``(1-p)^(1/4)`` for L=1, ``(1-p)^(3/8)/sqrt(3)`` for L=2."""
    if not 0 <= p < 1:
        raise ValueError("p must lie in [0, 1)")
    if L == 1:
        return (1 - p) ** 0.25
    if L == 2:
        return (1 - p) ** 0.375 / math.sqrt(3)
    raise ValueError("sandwich bounds are only available for L = 1 or 2")


def worst_case_error(factor: float) -> float:
    """Largest gap between a bound and the bare hybrid probability, ``2f + f^2``."""
    return 2 * factor + factor**2


@dataclass(frozen=True)
class SandwichBounds:
    lower: float
    upper: float
    raw_lower: float
    raw_upper: float
    p_min: float
    p_max: float
    factor: float
    i_min: Interval
    i_max: Interval

    def __iter__(self):
        return iter((self.lower, self.upper))

    def contains(self, prob: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= prob <= self.upper + tol


def sandwich_bounds(
    s: SpectrumTable, i0: Interval, delta: float, p: float, L: int = 1
) -> SandwichBounds:
    """Bounds on the full-quantum probability of ``i0`` from the hybrid spectrum."""
    if delta < 0:
        raise ValueError("spread must be non-negative")
    if not i0.half_width > 2 * delta:
        raise ValueError(f"need D > 2*spread (D={i0.half_width}, spread={delta})")
    f = additive_factor(p, L)
    i_max = Interval(i0.center, i0.half_width + 2 * delta)
    i_min = Interval(i0.center, i0.half_width - 2 * delta)
    p_max = interval_probability(s, i_max)
    p_min = interval_probability(s, i_min)
    outside = max(0.0, 1.0 - p_min)
    raw_lower = 1 - (math.sqrt(outside) + f) ** 2
    raw_upper = (math.sqrt(p_max) + f) ** 2
    clamp = lambda v: min(1.0, max(0.0, v))  # noqa: E731
    return SandwichBounds(
        clamp(raw_lower), clamp(raw_upper), raw_lower, raw_upper, p_min, p_max, f, i_min, i_max
    )
