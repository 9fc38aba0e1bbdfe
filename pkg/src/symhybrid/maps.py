"""Symmetric dequantization maps and the half-quantization map.

All three maps go through :func:`to_symmetric_basis`, so the identity
``quantize_hq ∘ dequantize_total == dequantize_hq`` holds by construction.
"""

from __future__ import annotations

from typing import Mapping

from .hybrid_algebra import HybridObservable
from .weyl_algebra import (
    OperatorPolynomial,
    Word,
    mode_of,
    multiply,
    symmetrize,
    to_symmetric_basis,
)


class ClassicalPolynomial:
    """Commutative polynomial on the full phase space of ``n_modes`` modes.

    Exponent tuples use generator order ``(q_1, p_1, q_2, p_2, ...)``; the
    first ``n_classical`` modes form the classical sector.
    """

    __slots__ = ("terms", "n_modes", "n_classical")

    def __init__(self, terms: Mapping[tuple, complex], n_modes: int, n_classical: int = 1):
        if not 0 <= n_classical <= n_modes:
            raise ValueError("need 0 <= n_classical <= n_modes")
        clean: dict[tuple, complex] = {}
        for e, c in terms.items():
            e = tuple(int(x) for x in e)
            if len(e) != 2 * n_modes or any(x < 0 for x in e):
                raise ValueError(f"bad exponent tuple {e} for {n_modes} modes")
            clean[e] = clean.get(e, 0) + complex(c)
        self.terms = {e: c for e, c in clean.items() if c != 0}
        self.n_modes = n_modes
        self.n_classical = n_classical

    def __eq__(self, other):
        if not isinstance(other, ClassicalPolynomial):
            return NotImplemented
        return (self.terms, self.n_modes, self.n_classical) == (
            other.terms, other.n_modes, other.n_classical
        )

    def __repr__(self):
        return f"ClassicalPolynomial({self.terms!r}, n_modes={self.n_modes})"


def _word_from_exponents(e) -> Word:
    return tuple(v + 1 for v, k in enumerate(e) for _ in range(k))


def _exponents_from_word(w: Word, n_modes: int) -> tuple:
    e = [0] * (2 * n_modes)
    for g in w:
        e[g - 1] += 1
    return tuple(e)


def _split(w: Word, n_classical: int):
    """Classical multi-index (q's then p's) and quantum word of a sorted word."""
    idx = [0] * (2 * n_classical)
    quantum = []
    for g in w:
        m = mode_of(g)
        if m <= n_classical:
            idx[(m - 1) + (0 if g % 2 else n_classical)] += 1
        else:
            quantum.append(g)
    return tuple(idx), tuple(quantum)


def dequantize_hq(a: OperatorPolynomial, n_classical: int = 1) -> HybridObservable:
    """Half dequantization: classical-sector symmetric factors become monomials."""
    acc: dict[tuple, dict[Word, complex]] = {}
    for w, c in to_symmetric_basis(a).items():
        idx, qw = _split(w, n_classical)
        slot = acc.setdefault(idx, {})
        for w2, c2 in symmetrize(qw, a.hbar).items():
            slot[w2] = slot.get(w2, 0) + c * c2
    return HybridObservable(
        {k: OperatorPolynomial(v, a.hbar) for k, v in acc.items()}, n_classical, a.hbar
    )


def requantize_hq(h: HybridObservable) -> OperatorPolynomial:
    """Inverse of :func:`dequantize_hq`: classical monomials become symmetric words."""
    n = h.n_classical
    out = OperatorPolynomial.zero(h.hbar)
    for idx, op in h.items():
        word = []
        for i in range(n):
            word += [2 * i + 1] * idx[i] + [2 * i + 2] * idx[n + i]
        out = out + multiply(symmetrize(word, h.hbar), op)
    return out


def dequantize_total(a: OperatorPolynomial, n_modes: int | None = None, n_classical: int = 1):
    """Total dequantization: every symmetric factor becomes a monomial."""
    if n_modes is None:
        n_modes = max(max(a.modes, default=0), n_classical, 1)
    return ClassicalPolynomial(
        {_exponents_from_word(w, n_modes): c for w, c in to_symmetric_basis(a).items()},
        n_modes,
        n_classical,
    )


def quantize_total(c: ClassicalPolynomial, hbar: float = 1.0) -> OperatorPolynomial:
    """Inverse of :func:`dequantize_total` (full Weyl quantization)."""
    acc: dict[Word, complex] = {}
    for e, coef in c.terms.items():
        for w, c2 in symmetrize(_word_from_exponents(e), hbar).items():
            acc[w] = acc.get(w, 0) + coef * c2
    return OperatorPolynomial(acc, hbar)


def quantize_hq(c: ClassicalPolynomial, hbar: float = 1.0) -> HybridObservable:
    """Symmetric half quantization: quantum-sector monomials become symmetric words."""
    n = c.n_classical
    acc: dict[tuple, dict[Word, complex]] = {}
    for e, coef in c.terms.items():
        idx, qw = _split(_word_from_exponents(e), n)
        slot = acc.setdefault(idx, {})
        for w2, c2 in symmetrize(qw, hbar).items():
            slot[w2] = slot.get(w2, 0) + coef * c2
    return HybridObservable(
        {k: OperatorPolynomial(v, hbar) for k, v in acc.items()}, n, hbar
    )
