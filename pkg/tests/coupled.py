"""Closed-form reference for the oscillator pair H = (x^2 + q^2)/2 + k x Q.

(q, x) is the classical canonical pair, Q, P the quantum one.  The equations
of motion are linear, so every Heisenberg observable is linear in the
initial values:

    q(t) = q cos t + (x + kQ) sin t
    x(t) = x cos t - q sin t + kQ (cos t - 1)
    Q(t) = Q
    P(t) = P - k [q (cos t - 1) + x sin t] - k^2 (sin t - t) Q
"""

import math

from symhybrid.hybrid_algebra import HybridObservable
from symhybrid.weyl_algebra import OperatorPolynomial
from symhybrid.scenario import Scenario, coupled_oscillator

Q_GEN, P_GEN = 3, 4


def hamiltonian(k, hbar=1.0):
    doc = coupled_oscillator(k)
    doc["hbar"] = hbar
    return Scenario.from_dict(doc).hybrid_hamiltonian()


def _build(c_q, c_x, c_Q, c_P=0.0, hbar=1.0):
    one = lambda c: OperatorPolynomial.identity(hbar, c)  # noqa: E731
    terms = {}
    if c_q:
        terms[(1, 0)] = one(c_q)
    if c_x:
        terms[(0, 1)] = one(c_x)
    op = OperatorPolynomial({(Q_GEN,): c_Q, (P_GEN,): c_P}, hbar)
    if op:
        terms[(0, 0)] = op
    return HybridObservable(terms, 1, hbar)


def closed_form(name, t, k, hbar=1.0):
    c, s = math.cos(t), math.sin(t)
    if name == "q":
        return _build(c, s, k * s, hbar=hbar)
    if name == "x":
        return _build(-s, c, k * (c - 1), hbar=hbar)
    if name == "Q":
        return _build(0, 0, 1.0, hbar=hbar)
    if name == "P":
        return _build(-k * (c - 1), -k * s, -k * k * (s - t), 1.0, hbar=hbar)
    raise KeyError(name)


def spread_formula(name, t, k, dq, dx, p, L):
    """Spread of each observable for any normalized quantum-sector vector."""
    c, s = math.cos(t), math.sin(t)
    num = {
        "q": abs(c) * dq + abs(s) * dx,
        "x": abs(s) * dq + abs(c) * dx,
        "Q": 0.0,
        "P": abs(k * (c - 1)) * dq + abs(k * s) * dx,
    }[name]
    return num / (1 - p) ** (1 / (2 * L))


def observable(name, hbar=1.0):
    g = {"q": 1, "x": 2, "Q": 3, "P": 4}[name]
    if g <= 2:
        return HybridObservable.variable(g, 1, hbar)
    return HybridObservable.quantum(g, 1, hbar)
