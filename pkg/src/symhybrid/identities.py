"""Randomized property suites for the operator and hybrid algebras.

Every suite draws its inputs from one seeded generator, so a given
``(seed, trials)`` pair always yields the same report.  Inputs live at one
classical and one quantum mode: classical degree <= 3, quantum words of
length <= 2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EvolutionConfig, evolve_series
from .hybrid_algebra import (
    HybridObservable,
    bracket,
    coefficient_norm,
    dagger,
    star,
)
from .maps import dequantize_hq
from .weyl_algebra import OperatorPolynomial, commutator, multiply, symmetrize

THRESHOLDS = {
    "associativity": 1e-12,
    "jacobi": 1e-10,
    "product_isomorphism": 1e-10,
    "bracket_isomorphism": 1e-10,
    "dagger": 1e-12,
    "moyal_limit": 1e-12,
    "commutator_limit": 1e-12,
    "canonicality": 1e-10,
}


@dataclass
class IdentityReport:
    seed: int
    trials: int
    residuals: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=lambda: dict(THRESHOLDS))

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v <= self.thresholds[k]]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "trials": self.trials,
            "residuals": dict(self.residuals),
            "thresholds": dict(self.thresholds),
            "passed": self.passed,
        }


def _coeff(rng) -> complex:
    return complex(rng.normal(), rng.normal())


def random_operator_word(rng, max_len: int, generators) -> tuple:
    n = int(rng.integers(0, max_len + 1))
    return tuple(int(g) for g in rng.choice(generators, size=n))


def random_hybrid(rng, hbar: float = 1.0, max_terms: int = 4, classical_degree: int = 3,
                  word_length: int = 2, classical_only: bool = False,
                  quantum_only: bool = False) -> HybridObservable:
    """Random element at N=M=1; quantum words are arbitrary orderings of Q, P."""
    terms: dict[tuple, OperatorPolynomial] = {}
    for _ in range(int(rng.integers(2, max_terms + 1))):
        if quantum_only:
            idx = (0, 0)
        else:
            deg = int(rng.integers(0, classical_degree + 1))
            a = int(rng.integers(0, deg + 1))
            idx = (a, deg - a)
        if classical_only:
            op = OperatorPolynomial.identity(hbar, _coeff(rng))
        else:
            word = random_operator_word(rng, word_length, [3, 4])
            op = OperatorPolynomial.from_word(word, hbar, _coeff(rng))
        terms[idx] = terms[idx] + op if idx in terms else op
    return HybridObservable(terms, 1, hbar)


def random_operator(rng, hbar: float = 1.0, max_terms: int = 4) -> OperatorPolynomial:
    """Random two-mode operator: classical word of length <= 3 times quantum word <= 2."""
    out = OperatorPolynomial.zero(hbar)
    for _ in range(int(rng.integers(2, max_terms + 1))):
        cw = random_operator_word(rng, 3, [1, 2])
        qw = random_operator_word(rng, 2, [3, 4])
        out = out + multiply(
            OperatorPolynomial.from_word(cw, hbar, _coeff(rng)),
            OperatorPolynomial.from_word(qw, hbar),
        )
    return out


def random_quadratic_hamiltonian(rng, hbar: float = 1.0) -> HybridObservable:
    """Hermitian, total degree <= 2 in (q, p, Q, P), real symmetric-basis coefficients."""
    h = OperatorPolynomial.zero(hbar)
    for deg in (1, 2):
        for w in itertools.combinations_with_replacement((1, 2, 3, 4), deg):
            h = h + symmetrize(w, hbar) * rng.normal()
    return dequantize_hq(h)


# independent Moyal product on scalar polynomials in (q, p) -------------------


def _as_scalar_poly(a: HybridObservable) -> dict:
    out = {}
    for idx, op in a.items():
        if set(op.terms) - {()}:
            raise ValueError("expected a purely classical observable")
        out[idx] = op.coefficient(())
    return out


def _diff(poly: dict, nq: int, np_: int) -> dict:
    out = {}
    for (a, b), c in poly.items():
        if a < nq or b < np_:
            continue
        f = math.perm(a, nq) * math.perm(b, np_)
        out[(a - nq, b - np_)] = out.get((a - nq, b - np_), 0) + c * f
    return out


def _mul(f: dict, g: dict) -> dict:
    out = {}
    for (a, b), c in f.items():
        for (a2, b2), c2 in g.items():
            k = (a + a2, b + b2)
            out[k] = out.get(k, 0) + c * c2
    return out


def moyal_product(f: dict, g: dict, hbar: float) -> dict:
    """``sum_n (i hbar/2)^n/n! sum_k C(n,k) (-1)^k d_q^{n-k} d_p^k f  d_p^{n-k} d_q^k g``."""
    top = max((a + b for a, b in f), default=0)
    out: dict = {}
    for n in range(top + 1):
        w = (0.5j * hbar) ** n / math.factorial(n)
        for k in range(n + 1):
            term = _mul(_diff(f, n - k, k), _diff(g, k, n - k))
            s = w * math.comb(n, k) * (-1) ** k
            for key, c in term.items():
                out[key] = out.get(key, 0) + s * c
    return out


def moyal_bracket(f: dict, g: dict, hbar: float) -> dict:
    out = moyal_product(f, g, hbar)
    for key, c in moyal_product(g, f, hbar).items():
        out[key] = out.get(key, 0) - c
    return out


def _from_scalar_poly(poly: dict, hbar: float) -> HybridObservable:
    return HybridObservable({k: c for k, c in poly.items() if c != 0}, 1, hbar)


# suites ----------------------------------------------------------------------


def _suite_algebra(rng, hbar):
    a, b, c = (random_hybrid(rng, hbar) for _ in range(3))
    assoc = coefficient_norm(star(star(a, b), c) - star(a, star(b, c)))
    jac = coefficient_norm(
        bracket(a, bracket(b, c)) + bracket(b, bracket(c, a)) + bracket(c, bracket(a, b))
    )
    dag = coefficient_norm(dagger(star(a, b)) - star(dagger(b), dagger(a)))
    return {"associativity": assoc, "jacobi": jac, "dagger": dag}


def _suite_isomorphism(rng, hbar):
    a, b = random_operator(rng, hbar), random_operator(rng, hbar)
    va, vb = dequantize_hq(a), dequantize_hq(b)
    prod = coefficient_norm(dequantize_hq(multiply(a, b)) - star(va, vb))
    br = coefficient_norm(dequantize_hq(commutator(a, b)) - bracket(va, vb))
    return {"product_isomorphism": prod, "bracket_isomorphism": br}


def _suite_limits(rng, hbar):
    f = random_hybrid(rng, hbar, classical_only=True)
    g = random_hybrid(rng, hbar, classical_only=True)
    ref = _from_scalar_poly(moyal_bracket(_as_scalar_poly(f), _as_scalar_poly(g), hbar), hbar)
    moyal = coefficient_norm(bracket(f, g) - ref)
    a = random_hybrid(rng, hbar, quantum_only=True)
    b = random_hybrid(rng, hbar, quantum_only=True)
    ca, cb = a.coefficient((0, 0)), b.coefficient((0, 0))
    comm = coefficient_norm(bracket(a, b) - HybridObservable.constant(commutator(ca, cb), 1, hbar))
    return {"moyal_limit": moyal, "commutator_limit": comm}


def _suite_canonical(rng, hbar, time=0.3, order=20):
    """Evolution under a random quadratic Hamiltonian keeps the canonical brackets."""
    h = random_quadratic_hamiltonian(rng, hbar)
    cfg = EvolutionConfig(time, order)
    gens = [HybridObservable.variable(1, 1, hbar), HybridObservable.variable(2, 1, hbar),
            HybridObservable.quantum(3, 1, hbar), HybridObservable.quantum(4, 1, hbar)]
    ev = [evolve_series(g, h, cfg) for g in gens]
    worst = 0.0
    for i, j in itertools.combinations(range(4), 2):
        want = bracket(gens[i], gens[j])  # constant, so invariant under evolution
        worst = max(worst, coefficient_norm(bracket(ev[i], ev[j]) - want))
    return {"canonicality": worst}


SUITES = (_suite_algebra, _suite_isomorphism, _suite_limits, _suite_canonical)


def check_identities(seed: int = 0, trials: int = 100, hbar: float = 1.0) -> IdentityReport:
    """Run every suite ``trials`` times; the report keeps the max residual of each check."""
    if int(trials) != trials or trials < 1:
        raise ValueError("trials must be an integer >= 1")
    rng = np.random.default_rng(seed)
    report = IdentityReport(seed, int(trials), {k: 0.0 for k in THRESHOLDS})
    for _ in range(int(trials)):
        for suite in SUITES:
            for key, val in suite(rng, hbar).items():
                report.residuals[key] = max(report.residuals[key], float(val))
    return report
