"""Hybrid observables: phase-space polynomials with operator coefficients.

A :class:`HybridObservable` on ``N`` classical modes maps a classical
multi-index ``(q_1..q_N, p_1..p_N)`` to an :class:`OperatorPolynomial` in the
quantum-sector generators (modes ``> N``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._kernel import bidiff_product
from .weyl_algebra import (
    OperatorPolynomial,
    Word,
    adjoint,
    mode_of,
    multiply,
    symmetric_norm,
)

MultiIndex = tuple  # tuple[int, ...] of length 2N


@dataclass(frozen=True)
class PhasePoint:
    values: tuple

    def __init__(self, values: Iterable[float]):
        object.__setattr__(self, "values", tuple(float(v) for v in values))

    @property
    def n_classical(self) -> int:
        return len(self.values) // 2

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


class HybridObservable:
    """Element of the hybrid algebra, immutable.

    ``terms`` maps classical exponent tuples (length ``2*n_classical``,
    ordered q's then p's) to quantum-sector operator polynomials.
    """

    __slots__ = ("_terms", "n_classical", "hbar")

    def __init__(
        self,
        terms: Mapping[MultiIndex, OperatorPolynomial] | None = None,
        n_classical: int = 1,
        hbar: float = 1.0,
    ):
        if n_classical < 0:
            raise ValueError("n_classical must be >= 0")
        clean: dict[MultiIndex, OperatorPolynomial] = {}
        for idx, op in (terms or {}).items():
            idx = tuple(int(e) for e in idx)
            if len(idx) != 2 * n_classical or any(e < 0 for e in idx):
                raise ValueError(f"bad classical multi-index {idx} for N={n_classical}")
            if not isinstance(op, OperatorPolynomial):
                op = OperatorPolynomial.identity(hbar, op)
            if op.hbar != hbar:
                raise ValueError(f"hbar mismatch: {op.hbar} vs {hbar}")
            bad = [g for g in op.generators if mode_of(g) <= n_classical]
            if bad:
                raise ValueError(f"classical-sector generators {bad} in a coefficient")
            clean[idx] = clean[idx] + op if idx in clean else op
        object.__setattr__(self, "_terms", {k: v for k, v in clean.items() if v})
        object.__setattr__(self, "n_classical", int(n_classical))
        object.__setattr__(self, "hbar", float(hbar))

    def __setattr__(self, name, value):
        raise AttributeError("HybridObservable is immutable")

    def __reduce__(self):
        return (HybridObservable, (self._terms, self.n_classical, self.hbar))

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, op=1.0, n_classical: int = 1, hbar: float = 1.0):
        """``1_C`` times ``op`` (an operator polynomial or a scalar)."""
        return cls({(0,) * (2 * n_classical): op}, n_classical, hbar)

    @classmethod
    def identity(cls, n_classical: int = 1, hbar: float = 1.0):
        return cls.constant(1.0, n_classical, hbar)

    @classmethod
    def zero(cls, n_classical: int = 1, hbar: float = 1.0):
        return cls({}, n_classical, hbar)

    @classmethod
    def variable(cls, i: int, n_classical: int = 1, hbar: float = 1.0, coeff=1.0):
        """Classical generator ``O_i`` (1-based, q's first then p's)."""
        if not 1 <= i <= 2 * n_classical:
            raise ValueError(f"classical index {i} out of range 1..{2 * n_classical}")
        idx = [0] * (2 * n_classical)
        idx[i - 1] = 1
        return cls({tuple(idx): coeff}, n_classical, hbar)

    @classmethod
    def quantum(cls, generator: int, n_classical: int = 1, hbar: float = 1.0, coeff=1.0):
        """Quantum generator as a classical constant, e.g. ``Q̂ = quantum(2N+1)``."""
        return cls.constant(
            OperatorPolynomial.generator(generator, hbar) * coeff, n_classical, hbar
        )

    # inspection -------------------------------------------------------
    @property
    def terms(self) -> dict[MultiIndex, OperatorPolynomial]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def coefficient(self, idx: Sequence[int]) -> OperatorPolynomial:
        return self._terms.get(tuple(idx), OperatorPolynomial.zero(self.hbar))

    @property
    def classical_degree(self) -> int:
        return max((sum(k) for k in self._terms), default=0)

    @property
    def quantum_modes(self) -> set[int]:
        return {m for op in self._terms.values() for m in op.modes}

    def is_zero(self) -> bool:
        return not self._terms

    def pruned(self) -> "HybridObservable":
        """Copy with every coefficient re-pruned at the current threshold."""
        return HybridObservable(
            {k: OperatorPolynomial(v.terms, v.hbar) for k, v in self._terms.items()},
            self.n_classical,
            self.hbar,
        )

    def is_classical(self) -> bool:
        """True when every coefficient is a multiple of the identity."""
        return all(set(op.terms) <= {()} for op in self._terms.values())

    # arithmetic -------------------------------------------------------
    def _check(self, other: "HybridObservable"):
        if self.n_classical != other.n_classical:
            raise ValueError(
                f"classical dimension mismatch: {self.n_classical} vs {other.n_classical}"
            )
        if self.hbar != other.hbar:
            raise ValueError(f"hbar mismatch: {self.hbar} vs {other.hbar}")

    def _lift(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return HybridObservable.constant(complex(other), self.n_classical, self.hbar)
        return other

    def __add__(self, other):
        other = self._lift(other)
        if not isinstance(other, HybridObservable):
            return NotImplemented
        self._check(other)
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out[k] + v if k in out else v
        return HybridObservable(out, self.n_classical, self.hbar)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return HybridObservable(
                {k: v * other for k, v in self._terms.items()}, self.n_classical, self.hbar
            )
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, HybridObservable):
            return NotImplemented
        return (
            self.n_classical == other.n_classical
            and self.hbar == other.hbar
            and self._terms == other._terms
        )

    def __hash__(self):
        return hash((self.n_classical, self.hbar, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        n = self.n_classical
        parts = []
        for k in sorted(self._terms, key=lambda k: (sum(k), k)):
            mono = "*".join(
                f"{'q' if i < n else 'p'}{i % n + 1 if n else ''}^{e}" if e > 1
                else f"{'q' if i < n else 'p'}{i % n + 1}"
                for i, e in enumerate(k) if e
            ) or "1"
            parts.append(f"{mono}·[{self._terms[k]!r}]")
        return " + ".join(parts)


# flat representation -------------------------------------------------------


def _layout(*obs: HybridObservable):
    n = obs[0].n_classical
    top = max((max(o.quantum_modes, default=n) for o in obs), default=n)
    nq = max(top - n, 0)
    pairs = [(i, n + i, "moyal") for i in range(n)]
    pairs += [(2 * n + 2 * j, 2 * n + 2 * j + 1, "standard") for j in range(nq)]
    return n, nq, pairs


def _flatten(a: HybridObservable, n: int, nq: int):
    rows, coefs = [], []
    for idx, op in a.items():
        for w, c in op.items():
            row = list(idx) + [0] * (2 * nq)
            for g in w:
                row[g - 1] += 1  # generator 2n+1 lands on column 2n
            rows.append(row)
            coefs.append(c)
    exps = np.array(rows, dtype=np.int64).reshape(len(rows), 2 * n + 2 * nq)
    return exps, np.array(coefs, dtype=complex)


def _unflatten(exps, coefs, n: int, hbar: float) -> HybridObservable:
    acc: dict[MultiIndex, dict[Word, complex]] = {}
    for row, c in zip(exps.tolist(), coefs.tolist()):
        idx = tuple(row[: 2 * n])
        w = tuple(
            v + 1 for v, k in enumerate(row) if v >= 2 * n for _ in range(k)
        )
        acc.setdefault(idx, {})[w] = c
    return HybridObservable(
        {k: OperatorPolynomial(v, hbar) for k, v in acc.items()}, n, hbar
    )


def _product(a, b, pairs_filter=None):
    a._check(b)
    n, nq, pairs = _layout(a, b)
    if pairs_filter is not None:
        pairs = [pr for pr in pairs if pr[2] == pairs_filter]
    ea, ca = _flatten(a, n, nq)
    eb, cb = _flatten(b, n, nq)
    e, c = bidiff_product(ea, ca, eb, cb, pairs, a.hbar)
    return _unflatten(e, c, n, a.hbar)


# operations ----------------------------------------------------------------


def star(a: HybridObservable, b: HybridObservable) -> HybridObservable:
    """Hybrid star product ``A exp(i hbar J / 2) B``.

    ``J`` differentiates classical variables only; the quantum coefficient of
    ``a`` always multiplies from the left.
    """
    return _product(a, b)


def bracket(a: HybridObservable, b: HybridObservable) -> HybridObservable:
    """Hybrid Moyal bracket ``a⋆b - b⋆a``."""
    return star(a, b) - star(b, a)


def pointwise(a: HybridObservable, b: HybridObservable) -> HybridObservable:
    """Undeformed product: classical parts commute, coefficients multiply in order."""
    return _product(a, b, pairs_filter="standard")


def poisson(a: HybridObservable, b: HybridObservable) -> HybridObservable:
    """Ordered Poisson bracket ``sum_i d_qi a d_pi b - d_pi a d_qi b``."""
    n = a.n_classical
    out = HybridObservable.zero(n, a.hbar)
    for i in range(1, n + 1):
        out = out + pointwise(
            classical_derivative(a, i), classical_derivative(b, n + i)
        )
        out = out - pointwise(
            classical_derivative(a, n + i), classical_derivative(b, i)
        )
    return out


def bt_bracket(a: HybridObservable, b: HybridObservable) -> HybridObservable:
    """First-order truncation ``[A,B] + (i hbar/2)({A,B} - {B,A})``.

    Not a Lie bracket in general.
    """
    comm = pointwise(a, b) - pointwise(b, a)
    return comm + (poisson(a, b) - poisson(b, a)) * (0.5j * a.hbar)


def dagger(a: HybridObservable) -> HybridObservable:
    return HybridObservable(
        {k: adjoint(v) for k, v in a.items()}, a.n_classical, a.hbar
    )


def classical_derivative(a: HybridObservable, i: int) -> HybridObservable:
    """Formal partial derivative with respect to the classical variable ``O_i``."""
    n = a.n_classical
    if not 1 <= i <= 2 * n:
        raise ValueError(f"classical index {i} out of range 1..{2 * n}")
    out = {}
    for idx, op in a.items():
        e = idx[i - 1]
        if e == 0:
            continue
        new = list(idx)
        new[i - 1] -= 1
        out[tuple(new)] = op * e
    return HybridObservable(out, n, a.hbar)


def evaluate_classical(a: HybridObservable, pt) -> OperatorPolynomial:
    """Substitute classical values ``pt`` and return the quantum operator."""
    vals = tuple(pt)
    if len(vals) != 2 * a.n_classical:
        raise ValueError(f"phase point has length {len(vals)}, expected {2 * a.n_classical}")
    acc: dict[Word, complex] = {}
    for idx, op in a.items():
        scale = math.prod(v**e for v, e in zip(vals, idx))
        for w, c in op.items():
            acc[w] = acc.get(w, 0) + scale * c
    return OperatorPolynomial(acc, a.hbar)


def coefficient_norm(a: HybridObservable) -> float:
    """Sum over classical monomials of the symmetric-basis norm of each coefficient.

    This is the norm used by every residual check in the package.
    """
    return sum(symmetric_norm(op) for op in a._terms.values())


def is_hermitian(a: HybridObservable, tol: float = 1e-12) -> bool:
    return coefficient_norm(dagger(a) - a) <= tol


# truncated Fock representation --------------------------------------------


@lru_cache(maxsize=64)
def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def annihilation(dim: int) -> np.ndarray:
    """``a|n> = sqrt(n)|n-1>`` on the ``dim``-dimensional number basis."""
    return _ladder(dim).copy()


def position_matrix(dim: int, hbar: float = 1.0) -> np.ndarray:
    a = _ladder(dim)
    return np.sqrt(hbar / 2) * (a + a.T) + 0j


def momentum_matrix(dim: int, hbar: float = 1.0) -> np.ndarray:
    a = _ladder(dim)
    return 1j * np.sqrt(hbar / 2) * (a.T - a)


def word_matrix(word: Word, mats: Mapping[int, np.ndarray], dim: int) -> np.ndarray:
    out = np.eye(dim, dtype=complex)
    for g in word:
        out = out @ mats[g]
    return out


def to_matrix(op: OperatorPolynomial, dim: int, n_classical: int = 1) -> np.ndarray:
    """Matrix of a single-mode quantum operator on a truncated Fock basis.

    The quantum mode is mode ``n_classical + 1``; any other generator is
    rejected.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    gq, gp = 2 * n_classical + 1, 2 * n_classical + 2
    stray = op.generators - {gq, gp}
    if stray:
        raise ValueError(
            f"generators {sorted(stray)} are not in quantum mode {n_classical + 1}"
        )
    mats = {gq: position_matrix(dim, op.hbar), gp: momentum_matrix(dim, op.hbar)}
    out = np.zeros((dim, dim), dtype=complex)
    for w, c in op.items():
        out += c * word_matrix(w, mats, dim)
    return out
