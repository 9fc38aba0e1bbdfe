"""Time evolution of hybrid observables.

Two routes are provided: the nested-bracket (Heisenberg) series and the
star-exponential propagator followed by conjugation.  Both are truncated power
series in ``t``; neither is resummed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ._kernel import prune_tol, pruning
from .hybrid_algebra import (
    HybridObservable,
    bracket,
    coefficient_norm,
    dagger,
    star,
)


# Propagators keep coefficients down to this size.  Derivative contractions
# against high-degree monomials amplify anything dropped from U by many orders
# of magnitude, so the ambient threshold is too coarse here.
FINE_TOL = 1e-20


def _fine():
    return pruning(min(prune_tol(), FINE_TOL))


class ConvergenceError(RuntimeError):
    """Raised when the last retained series term is above ``tail_tolerance``."""

    def __init__(self, message: str, report: "SeriesReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class EvolutionConfig:
    time: float
    max_order: int = 25
    degree_cap: int | None = None
    tail_tolerance: float = 0.0

    def __post_init__(self):
        if int(self.max_order) != self.max_order or self.max_order < 1:
            raise ValueError("max_order must be an integer >= 1")
        if self.tail_tolerance < 0:
            raise ValueError("tail_tolerance must be >= 0")
        if self.degree_cap is not None and self.degree_cap < 0:
            raise ValueError("degree_cap must be >= 0")


@dataclass
class SeriesReport:
    """Diagnostics of one truncated series."""

    order: int
    tail_norm: float
    discarded_norm: float = 0.0
    term_norms: list[float] = field(default_factory=list)


def _require_hermitian(h: HybridObservable):
    resid = coefficient_norm(dagger(h) - h)
    if resid > 1e-12 * max(1.0, coefficient_norm(h)):
        raise ValueError(f"Hamiltonian is not Hermitian (residual {resid:.3g})")


def _cap(a: HybridObservable, cap: int | None):
    if cap is None:
        return a, 0.0
    keep = {k: v for k, v in a.items() if sum(k) <= cap}
    if len(keep) == len(a):
        return a, 0.0
    dropped = HybridObservable(
        {k: v for k, v in a.items() if sum(k) > cap}, a.n_classical, a.hbar
    )
    return HybridObservable(keep, a.n_classical, a.hbar), coefficient_norm(dropped)


def _finish(total, report: SeriesReport, cfg: EvolutionConfig, with_report: bool):
    if cfg.tail_tolerance > 0 and report.tail_norm > cfg.tail_tolerance:
        raise ConvergenceError(
            f"last series term has norm {report.tail_norm:.3g} "
            f"> tolerance {cfg.tail_tolerance:.3g}",
            report,
        )
    return (total, report) if with_report else total


def evolve_series(
    a: HybridObservable,
    h: HybridObservable,
    cfg: EvolutionConfig,
    with_report: bool = False,
):
    """Heisenberg evolution ``sum_n (i t/hbar)^n / n! ad_H^n(A)``.

    ``ad_H(X) = H⋆X - X⋆H``.  With ``with_report`` the return value is
    ``(observable, SeriesReport)``.
    """
    a._check(h)
    _require_hermitian(h)
    factor = 1j * cfg.time / h.hbar
    term, lost = _cap(a, cfg.degree_cap)
    total = term
    norms = [coefficient_norm(term)]
    for n in range(1, cfg.max_order + 1):
        if term.is_zero():
            norms.append(0.0)
            continue
        term, d = _cap(bracket(h, term) * (factor / n), cfg.degree_cap)
        lost += d
        total = total + term
        norms.append(coefficient_norm(term))
    report = SeriesReport(cfg.max_order, norms[-1], lost, norms)
    return _finish(total, report, cfg, with_report)


def propagator_series(h: HybridObservable, cfg: EvolutionConfig, with_report: bool = False):
    """Star exponential ``sum_n (-i t/hbar)^n / n! h⋆...⋆h`` with ``U(0) = 1``.

    Coefficients are kept down to ``FINE_TOL``.
    """
    _require_hermitian(h)
    factor = -1j * cfg.time / h.hbar
    term = HybridObservable.identity(h.n_classical, h.hbar)
    total = term
    norms = [1.0]
    lost = 0.0
    with _fine():
        for n in range(1, cfg.max_order + 1):
            term, d = _cap(star(h, term) * (factor / n), cfg.degree_cap)
            lost += d
            total = total + term
            norms.append(coefficient_norm(term))
    report = SeriesReport(cfg.max_order, norms[-1], lost, norms)
    return _finish(total, report, cfg, with_report)


def conjugate_by(u: HybridObservable, a: HybridObservable) -> HybridObservable:
    """``u† ⋆ a ⋆ u``.

    Evaluated at ``FINE_TOL`` and re-pruned at the ambient threshold, which
    also clears the cancellation residue left at high classical degree.
    """
    with _fine():
        out = star(dagger(u), star(a, u))
    return out.pruned()


def check_canonical(u: HybridObservable, a: HybridObservable, b: HybridObservable) -> float:
    """Norm of ``u†⋆[[a,b]]⋆u - [[u†⋆a⋆u, u†⋆b⋆u]]`` (``u†`` stands in for ``u⁻¹``)."""
    lhs = conjugate_by(u, bracket(a, b))
    rhs = bracket(conjugate_by(u, a), conjugate_by(u, b))
    return coefficient_norm(lhs - rhs)


def unitarity_residual(u: HybridObservable) -> float:
    """``|| u†⋆u - 1 ||`` computed literally from ``u``."""
    one = HybridObservable.identity(u.n_classical, u.hbar)
    with _fine():
        prod = star(dagger(u), u)
    return coefficient_norm(prod.pruned() - one)


def truncation_unitarity_residual(h: HybridObservable, cfg: EvolutionConfig) -> float:
    """``|| U_K†⋆U_K - 1 ||`` for the order-``K`` propagator of Hermitian ``h``.

    With ``U_K = sum_{n<=K} c_n h^n`` and ``h† = h`` the residual equals
    ``sum_{s=K+1}^{2K} g_s h^s`` where ``g_s = sum_{m+n=s} conj(c_m) c_n``; the
    lower orders cancel identically.  Evaluated this way there is no
    cancellation between large intermediate terms, so the residual stays
    accurate well below the double-precision floor of the literal product.
    """
    _require_hermitian(h)
    order = cfg.max_order
    x = -1j * cfg.time / h.hbar
    c = [x**n / math.factorial(n) for n in range(order + 1)]
    power = HybridObservable.identity(h.n_classical, h.hbar)
    for _ in range(order):
        power = star(h, power)
    with pruning(0.0):
        resid = HybridObservable.zero(h.n_classical, h.hbar)
        for s in range(order + 1, 2 * order + 1):
            power = star(h, power)
            g = math.fsum(
                (c[m].conjugate() * c[s - m]).real for m in range(s - order, order + 1)
            )
            if g:
                resid = resid + power * g
    return coefficient_norm(resid)
