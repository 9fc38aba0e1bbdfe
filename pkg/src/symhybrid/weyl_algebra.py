"""Polynomials in canonical generators q_m, p_m with CCR rewriting.

Generator ``2m-1`` is ``q_m`` and generator ``2m`` is ``p_m``.  A word is a
tuple of generator indices; a word is in normal order when it is sorted,
which puts modes in ascending order and, inside a mode, every ``q`` before
every ``p``.  Distinct modes commute and ``p_m q_m = q_m p_m - i*hbar``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._kernel import bidiff_product, prune_tol, pruning

Word = tuple  # tuple[int, ...] of generator indices


@dataclass(frozen=True)
class GeneratorId:
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"generator index must be >= 1, got {self.index}")

    @property
    def mode(self) -> int:
        return (self.index + 1) // 2

    @property
    def kind(self) -> str:
        return "position" if self.index % 2 else "momentum"

    def sector(self, n_classical: int) -> str:
        return "classical" if self.mode <= n_classical else "quantum"

    def __index__(self) -> int:
        return self.index

    def __str__(self) -> str:
        return f"{'q' if self.index % 2 else 'p'}{self.mode}"


def q(mode: int) -> int:
    """Generator index of the position operator of ``mode``."""
    return 2 * mode - 1


def p(mode: int) -> int:
    """Generator index of the momentum operator of ``mode``."""
    return 2 * mode


def mode_of(index: int) -> int:
    return (index + 1) // 2


def generator_name(index: int) -> str:
    return str(GeneratorId(index))


def _as_word(word: Iterable) -> Word:
    out = tuple(int(g) for g in word)
    if any(g < 1 for g in out):
        raise ValueError(f"invalid generator index in word {out}")
    return out


def _prune(terms: Mapping[Word, complex]) -> dict[Word, complex]:
    tol = prune_tol()
    return {w: complex(c) for w, c in terms.items() if c != 0 and abs(c) >= tol}


class OperatorPolynomial:
    """Complex combination of normal-ordered words.

    Instances are immutable; ``terms`` maps sorted generator tuples to
    coefficients and never holds a coefficient below :func:`prune_tol`.
    """

    __slots__ = ("_terms", "hbar")

    def __init__(self, terms: Mapping[Word, complex] | None = None, hbar: float = 1.0):
        if not hbar > 0:
            raise ValueError(f"hbar must be positive, got {hbar}")
        clean: dict[Word, complex] = {}
        for w, c in (terms or {}).items():
            w = _as_word(w)
            if list(w) != sorted(w):
                raise ValueError(f"word {w} is not in normal order; use normal_order()")
            clean[w] = clean.get(w, 0) + c
        object.__setattr__(self, "_terms", _prune(clean))
        object.__setattr__(self, "hbar", float(hbar))

    def __setattr__(self, name, value):
        raise AttributeError("OperatorPolynomial is immutable")

    def __reduce__(self):
        return (_restore, (self._terms, self.hbar))

    # construction -----------------------------------------------------
    @classmethod
    def identity(cls, hbar: float = 1.0, coeff: complex = 1.0) -> "OperatorPolynomial":
        return cls({(): coeff}, hbar)

    @classmethod
    def zero(cls, hbar: float = 1.0) -> "OperatorPolynomial":
        return cls({}, hbar)

    @classmethod
    def generator(cls, index: int, hbar: float = 1.0) -> "OperatorPolynomial":
        return cls({(int(index),): 1.0}, hbar)

    @classmethod
    def from_word(cls, word: Iterable, hbar: float = 1.0, coeff: complex = 1.0):
        """Arbitrary (not necessarily ordered) word, rewritten to normal order."""
        return normal_order(_as_word(word), hbar) * coeff

    # inspection -------------------------------------------------------
    @property
    def terms(self) -> dict[Word, complex]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coefficient(self, word: Iterable = ()) -> complex:
        return self._terms.get(_as_word(word), 0j)

    @property
    def degree(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    @property
    def modes(self) -> set[int]:
        return {mode_of(g) for w in self._terms for g in w}

    @property
    def generators(self) -> set[int]:
        return {g for w in self._terms for g in w}

    def is_zero(self) -> bool:
        return not self._terms

    def norm(self) -> float:
        """Euclidean norm of the normal-ordered coefficients."""
        return math.sqrt(sum(abs(c) ** 2 for c in self._terms.values()))

    # arithmetic -------------------------------------------------------
    def _check(self, other: "OperatorPolynomial"):
        if self.hbar != other.hbar:
            raise ValueError(f"hbar mismatch: {self.hbar} vs {other.hbar}")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = OperatorPolynomial.identity(self.hbar, other)
        if not isinstance(other, OperatorPolynomial):
            return NotImplemented
        self._check(other)
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out.get(w, 0) + c
        return OperatorPolynomial(out, self.hbar)

    __radd__ = __add__

    def __neg__(self):
        return OperatorPolynomial({w: -c for w, c in self._terms.items()}, self.hbar)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, OperatorPolynomial):
            return multiply(self, other)
        if isinstance(other, (int, float, complex, np.number)):
            return OperatorPolynomial(
                {w: c * other for w, c in self._terms.items()}, self.hbar
            )
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, OperatorPolynomial):
            return NotImplemented
        return self.hbar == other.hbar and self._terms == other._terms

    def __hash__(self):
        return hash((self.hbar, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for w in sorted(self._terms, key=lambda w: (len(w), w)):
            c = self._terms[w]
            name = "*".join(generator_name(g) for g in w) or "1"
            parts.append(f"({c:.6g})*{name}")
        return " + ".join(parts)


# flat conversion -----------------------------------------------------------


def _restore(terms, hbar):
    with pruning(0.0):
        return OperatorPolynomial(terms, hbar)


def _nvars(*polys: OperatorPolynomial) -> int:
    top = max((max(pl.modes, default=0) for pl in polys), default=0)
    return 2 * max(top, 1)


def _to_arrays(poly: OperatorPolynomial, nvars: int):
    exps = np.zeros((len(poly), nvars), dtype=np.int64)
    coefs = np.empty(len(poly), dtype=complex)
    for row, (w, c) in enumerate(poly.items()):
        for g in w:
            exps[row, g - 1] += 1
        coefs[row] = c
    return exps, coefs


def _exps_to_word(exps) -> Word:
    return tuple(v + 1 for v, k in enumerate(exps) for _ in range(int(k)))


def _from_arrays(exps, coefs, hbar) -> OperatorPolynomial:
    return OperatorPolynomial(
        {_exps_to_word(e): c for e, c in zip(exps.tolist(), coefs.tolist())}, hbar
    )


def _standard_pairs(nvars: int) -> list[tuple[int, int, str]]:
    return [(v, v + 1, "standard") for v in range(0, nvars, 2)]


# operations ----------------------------------------------------------------


def multiply(a: OperatorPolynomial, b: OperatorPolynomial) -> OperatorPolynomial:
    """Operator product ``a·b`` in normal form.

    Degree of the result is at most ``a.degree + b.degree``.
    """
    a._check(b)
    nv = _nvars(a, b)
    ea, ca = _to_arrays(a, nv)
    eb, cb = _to_arrays(b, nv)
    e, c = bidiff_product(ea, ca, eb, cb, _standard_pairs(nv), a.hbar)
    return _from_arrays(e, c, a.hbar)


def normal_order(word: Sequence, hbar: float = 1.0) -> OperatorPolynomial:
    """Rewrite an arbitrary word into normal order using the CCR."""
    word = _as_word(word)
    out = OperatorPolynomial.identity(hbar)
    # multiply runs of already-ordered factors at once
    run: list[int] = []
    for g in word:
        if run and g < run[-1]:
            out = multiply(out, OperatorPolynomial({tuple(run): 1.0}, hbar))
            run = []
        run.append(g)
    if run:
        out = multiply(out, OperatorPolynomial({tuple(run): 1.0}, hbar))
    return out


def commutator(a: OperatorPolynomial, b: OperatorPolynomial) -> OperatorPolynomial:
    return multiply(a, b) - multiply(b, a)


def _mode_blocks(word: Word) -> dict[int, tuple[int, int]]:
    """Per-mode (number of q, number of p) of a word, in mode order."""
    counts = Counter(word)
    blocks: dict[int, tuple[int, int]] = {}
    for m in sorted({mode_of(g) for g in word}):
        blocks[m] = (counts.get(q(m), 0), counts.get(p(m), 0))
    return blocks


def _contract_modes(word: Word, weight: complex, coeff: complex, hbar: float):
    """Sum over per-mode contractions ``k! C(a,k) C(b,k) weight^k q^(a-k) p^(b-k)``."""
    blocks = _mode_blocks(word)
    per_mode = []
    for m, (na, nb) in blocks.items():
        opts = []
        for k in range(min(na, nb) + 1):
            c = math.factorial(k) * math.comb(na, k) * math.comb(nb, k) * weight**k
            opts.append(((q(m),) * (na - k) + (p(m),) * (nb - k), c))
        per_mode.append(opts)
    out: dict[Word, complex] = {}
    for choice in itertools.product(*per_mode):
        w = tuple(g for part, _ in choice for g in part)
        c = coeff
        for _, ci in choice:
            c *= ci
        out[w] = out.get(w, 0) + c
    return OperatorPolynomial(out, hbar)


def symmetrize(word: Sequence, hbar: float = 1.0) -> OperatorPolynomial:
    """Weyl-symmetric ordering: average of the word over all factor orderings.

    Modes commute, so the average factorises per mode, and for one mode
    ``(q^a p^b)_+ = sum_k k! C(a,k) C(b,k) (-i hbar/2)^k q^(a-k) p^(b-k)``.
    """
    return _contract_modes(tuple(sorted(_as_word(word))), -0.5j * hbar, 1.0, hbar)


def adjoint(a: OperatorPolynomial) -> OperatorPolynomial:
    """Hermitian conjugate: reverse words, conjugate coefficients, reorder."""
    out: dict[Word, complex] = {}
    for w, c in a.items():
        # reversed normal-ordered word is p^b q^a per mode
        for w2, c2 in _contract_modes(w, -1j * a.hbar, c.conjugate(), a.hbar).items():
            out[w2] = out.get(w2, 0) + c2
    return OperatorPolynomial(out, a.hbar)


def to_symmetric_basis(a: OperatorPolynomial) -> dict[Word, complex]:
    """Coefficients of ``a`` on the Weyl-symmetrized basis, keyed by sorted word.

    Highest-degree words are peeled off first; ``symmetrize(w) - w`` only has
    lower-degree terms, so each degree is final once reached.
    """
    rem = dict(a.items())
    out: dict[Word, complex] = {}
    tol = prune_tol()
    while rem:
        deg = max(len(w) for w in rem)
        for w in [w for w in rem if len(w) == deg]:
            c = rem.pop(w)
            if c == 0 or abs(c) < tol:
                continue
            out[w] = out.get(w, 0) + c
            for w2, c2 in symmetrize(w, a.hbar).items():
                if w2 != w:
                    rem[w2] = rem.get(w2, 0) - c * c2
        rem = {w: c for w, c in rem.items() if c != 0 and abs(c) >= tol}
    return out


def from_symmetric_basis(coeffs: Mapping[Word, complex], hbar: float = 1.0):
    """Inverse of :func:`to_symmetric_basis`."""
    out: dict[Word, complex] = {}
    for w, c in coeffs.items():
        for w2, c2 in symmetrize(w, hbar).items():
            out[w2] = out.get(w2, 0) + c * c2
    return OperatorPolynomial(out, hbar)


def symmetric_norm(a: OperatorPolynomial) -> float:
    """Euclidean norm of the symmetric-basis coefficients (nothing is pruned)."""
    with pruning(0.0):
        coeffs = to_symmetric_basis(a)
    return math.sqrt(sum(abs(c) ** 2 for c in coeffs.values()))
