"""Scenario files and the prediction pipeline.

A scenario is a JSON document describing one coupled system, its initial
data, and the measurements to predict.  :func:`run` produces hybrid spectra,
spreads and sandwich bounds, then checks every bound against the full-quantum
oracle.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .classicality import (
    ClassicalData,
    SectorState,
    check_classicality,
    coherent_state,
    relevant_sequences,
)
from .dynamics import EvolutionConfig, evolve_series
from .hybrid_algebra import HybridObservable, is_hermitian, momentum_matrix, position_matrix
from .maps import requantize_hq
from .oracle import FullState, IntervalMeter, Propagator
from .predictions import (
    Interval,
    hybrid_spectrum,
    interval_probability,
    sandwich_bounds,
    spectrum_spread,
)
from .weyl_algebra import OperatorPolynomial, symmetrize

# Oracle probabilities are sums of many squared amplitudes and can overshoot
# an exact bound of 0 or 1 by a few ulps.
VERDICT_TOL = 1e-12

REQUIRED = (
    "hamiltonian", "hbar", "classical_data", "phi_c", "phi_q", "times",
    "observables", "intervals", "p_values", "order_L", "dims", "evolution",
)


class SchemaError(ValueError):
    """Scenario document does not match the expected layout."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _need(doc: dict, key: str, where: str = ""):
    name = f"{where}.{key}" if where else key
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(name, "missing required field")
    return doc[key]


def _num(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(name, f"expected a number, got {value!r}")
    return float(value)


def _num_list(value, name: str, length: int | None = None) -> list[float]:
    if not isinstance(value, list):
        raise SchemaError(name, "expected a list of numbers")
    out = [_num(v, f"{name}[{i}]") for i, v in enumerate(value)]
    if length is not None and len(out) != length:
        raise SchemaError(name, f"expected {length} entries, got {len(out)}")
    return out


@dataclass
class Scenario:
    hamiltonian: list[dict]
    hbar: float
    data: ClassicalData
    phi_c: dict
    phi_q: dict
    times: list[float]
    observables: dict[str, int]
    intervals: dict
    p_values: list[float]
    orders: list[int]
    dim_c: int = 40
    dim_q: int = 40
    check_convergence: bool = True
    convergence_tolerance: float = 1e-6
    max_order: int = 25
    degree_cap: int | None = None
    tail_tolerance: float = 0.0
    raw: dict = field(default_factory=dict, repr=False)

    n_classical = 1

    @classmethod
    def from_dict(cls, doc: Any) -> "Scenario":
        if not isinstance(doc, dict):
            raise SchemaError("<root>", "scenario must be a JSON object")
        for key in REQUIRED:
            _need(doc, key)
        hbar = _num(doc["hbar"], "hbar")
        if hbar <= 0:
            raise SchemaError("hbar", "must be positive")

        terms = doc["hamiltonian"]
        if not isinstance(terms, list) or not terms:
            raise SchemaError("hamiltonian", "expected a non-empty list of terms")
        for i, t in enumerate(terms):
            where = f"hamiltonian[{i}]"
            _num(_need(t, "coeff_re", where), f"{where}.coeff_re")
            _num(t.get("coeff_im", 0.0), f"{where}.coeff_im")
            exps = _need(t, "classical_exponents", where)
            if not isinstance(exps, list) or len(exps) != 2 or any(
                not isinstance(e, int) or e < 0 for e in exps
            ):
                raise SchemaError(f"{where}.classical_exponents", "expected two non-negative integers")
            word = _need(t, "quantum_word", where)
            if not isinstance(word, list) or any(g not in (3, 4) for g in word):
                raise SchemaError(f"{where}.quantum_word", "generators must be 3 (Q) or 4 (P)")

        cd = doc["classical_data"]
        centers = _num_list(_need(cd, "centers", "classical_data"), "classical_data.centers", 2)
        margins = _num_list(_need(cd, "margins", "classical_data"), "classical_data.margins", 2)
        if any(m <= 0 for m in margins):
            raise SchemaError("classical_data.margins", "margins must be positive")

        for key in ("phi_c", "phi_q"):
            spec = doc[key]
            if not isinstance(spec, dict) or not ({"coherent", "fock", "amplitudes"} & set(spec)):
                raise SchemaError(key, "expected one of 'coherent', 'fock', 'amplitudes'")

        times = _num_list(doc["times"], "times")
        obs = doc["observables"]
        if not isinstance(obs, dict) or not obs:
            raise SchemaError("observables", "expected a name -> generator index map")
        for name, g in obs.items():
            if g not in (1, 2, 3, 4):
                raise SchemaError(f"observables.{name}", "generator index must be 1..4")

        intervals = doc["intervals"]
        if not isinstance(intervals, dict):
            raise SchemaError("intervals", "expected an object")
        if "auto" not in intervals:
            for name in obs:
                for j, iv in enumerate(_need(intervals, name, "intervals")):
                    where = f"intervals.{name}[{j}]"
                    _num(_need(iv, "center", where), f"{where}.center")
                    if _num(_need(iv, "half_width", where), f"{where}.half_width") <= 0:
                        raise SchemaError(f"{where}.half_width", "must be positive")

        p_values = _num_list(doc["p_values"], "p_values")
        if any(not 0 <= p < 1 for p in p_values):
            raise SchemaError("p_values", "probabilities must lie in [0, 1)")
        orders = doc["order_L"]
        orders = [orders] if isinstance(orders, int) else orders
        if not isinstance(orders, list) or any(L not in (1, 2) for L in orders):
            raise SchemaError("order_L", "expected 1, 2 or a list of them")

        dims = doc["dims"]
        dim_c = int(_num(_need(dims, "classical", "dims"), "dims.classical"))
        dim_q = int(_num(_need(dims, "quantum", "dims"), "dims.quantum"))
        if dim_c < 2 or dim_q < 2:
            raise SchemaError("dims", "dimensions must be >= 2")
        ev = doc["evolution"]
        max_order = int(_num(_need(ev, "max_order", "evolution"), "evolution.max_order"))
        if max_order < 1:
            raise SchemaError("evolution.max_order", "must be >= 1")
        cap = ev.get("degree_cap")

        return cls(
            hamiltonian=terms,
            hbar=hbar,
            data=ClassicalData(centers, margins),
            phi_c=doc["phi_c"],
            phi_q=doc["phi_q"],
            times=times,
            observables=dict(obs),
            intervals=intervals,
            p_values=p_values,
            orders=list(orders),
            dim_c=dim_c,
            dim_q=dim_q,
            check_convergence=bool(dims.get("check_convergence", True)),
            convergence_tolerance=float(dims.get("convergence_tolerance", 1e-6)),
            max_order=max_order,
            degree_cap=None if cap is None else int(cap),
            tail_tolerance=float(ev.get("tail_tolerance", 0.0)),
            raw=doc,
        )

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError("<file>", f"invalid JSON: {exc}") from None
        return cls.from_dict(doc)

    # builders ---------------------------------------------------------
    def hybrid_hamiltonian(self) -> HybridObservable:
        out: dict[tuple, OperatorPolynomial] = {}
        for t in self.hamiltonian:
            c = complex(t["coeff_re"], t.get("coeff_im", 0.0))
            op = symmetrize(t["quantum_word"], self.hbar) * c
            key = tuple(t["classical_exponents"])
            out[key] = out[key] + op if key in out else op
        h = HybridObservable(out, self.n_classical, self.hbar)
        if not is_hermitian(h, 1e-12):
            raise SchemaError("hamiltonian", "terms do not form a Hermitian Hamiltonian")
        return h

    def observable(self, name: str) -> HybridObservable:
        g = self.observables[name]
        if g <= 2 * self.n_classical:
            return HybridObservable.variable(g, self.n_classical, self.hbar)
        return HybridObservable.quantum(g, self.n_classical, self.hbar)

    def sector_state(self, key: str, dim: int) -> SectorState:
        spec = getattr(self, key)
        if "coherent" in spec:
            q0, p0 = _num_list(spec["coherent"], f"{key}.coherent", 2)
            return coherent_state(q0, p0, dim, self.hbar)
        if "fock" in spec:
            n = int(spec["fock"])
            if not 0 <= n < dim:
                raise SchemaError(f"{key}.fock", f"level {n} outside dim {dim}")
            return SectorState.fock(n, dim, self.hbar)
        amps = [complex(*a) if isinstance(a, list) else complex(a) for a in spec["amplitudes"]]
        if len(amps) > dim:
            raise SchemaError(f"{key}.amplitudes", f"more than dim={dim} amplitudes")
        return SectorState.from_amplitudes(amps + [0] * (dim - len(amps)), self.hbar)

    def evolution(self, t: float) -> EvolutionConfig:
        return EvolutionConfig(t, self.max_order, self.degree_cap, self.tail_tolerance)


def auto_intervals(mean: float, sigma: float, spread: float, hbar: float,
                   count: int = 5, sigmas: float = 6.0) -> list[Interval]:
    """``count`` intervals with ``D > 2*spread`` whose edges sit in the tails.

    ``D = 2*spread + sigmas*sigma + sqrt(hbar/2)``; neighbours are offset so
    that no edge comes closer than ``spread + sigmas*sigma`` to ``mean``.
    """
    width = 2 * spread + sigmas * sigma + math.sqrt(hbar / 2)
    step = width + spread + sigmas * sigma
    half = count // 2
    return [Interval(mean + j * step, width) for j in range(-half, count - half)]


@dataclass
class _Oracle:
    state0: FullState
    prop: Propagator
    meters: dict

    def probability(self, t: float, name: str, i: Interval) -> float:
        return self.meters[name].probability(self.prop(self.state0, t), i)


def _build_oracle(sc: Scenario, h: HybridObservable, dim_c: int, dim_q: int) -> _Oracle:
    dims = (dim_c, dim_q)
    state = FullState.product(sc.sector_state("phi_c", dim_c), sc.sector_state("phi_q", dim_q))
    meters = {}
    for name, g in sc.observables.items():
        mode, dim = (1, dim_c) if g <= 2 else (2, dim_q)
        mat = position_matrix(dim, sc.hbar) if g % 2 else momentum_matrix(dim, sc.hbar)
        meters[name] = IntervalMeter(mat, mode)
    return _Oracle(state, Propagator.from_operator(requantize_hq(h), dims), meters)


def _coeffs_json(b: HybridObservable) -> list:
    rows = []
    for idx in sorted(k for k, _ in b.items()):
        for w, c in sorted(b.coefficient(idx).items()):
            rows.append({"classical": list(idx), "word": list(w), "re": c.real, "im": c.imag})
    return rows


def run(sc: Scenario, threads: int = 1, seed: int | None = None) -> dict:
    """Full pipeline; returns the result bundle as a JSON-ready dict."""
    h = sc.hybrid_hamiltonian()
    phi_c = sc.sector_state("phi_c", sc.dim_c)
    phi_q = sc.sector_state("phi_q", sc.dim_q)
    warnings: list[str] = []

    # (2) evolve every observable to every time
    jobs = [(t, name) for t in sc.times for name in sc.observables]

    def _evolve(job):
        t, name = job
        return evolve_series(sc.observable(name), h, sc.evolution(t))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        evolved = dict(zip(jobs, pool.map(_evolve, jobs)))

    # (1) classicality of the classical-sector state
    classicality = {}
    for L in sc.orders:
        seqs = relevant_sequences(evolved.values(), L)
        rep = check_classicality(phi_c, sc.data, seqs)
        classicality[str(L)] = {
            "passed": rep.passed,
            "sequences": [
                {"indices": list(e.sequence.indices), "norm2": e.norm2, "bound2": e.bound2,
                 "passed": e.passed}
                for e in rep.entries
            ],
        }
        if not rep.passed:
            warnings.append(f"inconsistent initial data: order-{L} classicality fails")

    oracle = _build_oracle(sc, h, sc.dim_c, sc.dim_q)
    check = (
        _build_oracle(sc, h, 2 * sc.dim_c, 2 * sc.dim_q) if sc.check_convergence else None
    )

    # (3)-(6) spectra, spreads, bounds, oracle, verdicts
    auto = sc.intervals.get("auto")

    def _predict(job):
        t, name = job
        b = evolved[job]
        spec = hybrid_spectrum(b, sc.data.centers, phi_q)
        mean = float(spec.eigenvalues @ spec.probabilities)
        sigma = float(math.sqrt(max(0.0, ((spec.eigenvalues - mean) ** 2) @ spec.probabilities)))
        spreads, rows = [], []
        for p in sc.p_values:
            for L in sc.orders:
                delta = spectrum_spread(b, sc.data, spec, p, L)
                spreads.append({"time": t, "observable": name, "p": p, "L": L, "spread": delta})
                if auto is not None:
                    grid = auto_intervals(mean, sigma, delta, sc.hbar,
                                          int(auto.get("count", 5)), float(auto.get("sigmas", 6.0)))
                else:
                    grid = [Interval(iv["center"], iv["half_width"]) for iv in sc.intervals[name]]
                for iv in grid:
                    row = {"time": t, "observable": name, "p": p, "L": L,
                           "center": iv.center, "half_width": iv.half_width,
                           "hybrid": interval_probability(spec, iv)}
                    if not iv.half_width > 2 * delta:
                        row.update(lower=None, upper=None, oracle=None, verdict="skipped")
                        rows.append(row)
                        continue
                    bd = sandwich_bounds(spec, iv, delta, p, L)
                    prob = oracle.probability(t, name, iv)
                    row.update(lower=bd.lower, upper=bd.upper, oracle=prob,
                               raw_lower=bd.raw_lower, raw_upper=bd.raw_upper)
                    if check is not None:
                        drift = abs(check.probability(t, name, iv) - prob)
                        row["convergence_drift"] = drift
                        row["converged"] = drift < sc.convergence_tolerance
                    row["verdict"] = "pass" if bd.contains(prob, VERDICT_TOL) else "fail"
                    rows.append(row)
        spectrum = {"eigenvalues": spec.eigenvalues.tolist(),
                    "probabilities": spec.probabilities.tolist()}
        return spectrum, spreads, rows

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(_predict, jobs))

    bounds = [r for _, _, rows in results for r in rows]
    unconverged = [r for r in bounds if r.get("converged") is False]
    if unconverged:
        warnings.append(f"{len(unconverged)} oracle probabilities drift beyond tolerance at doubled dims")
    checked = [r for r in bounds if r["verdict"] != "skipped"]
    return {
        "scenario": sc.raw,
        "seed": seed,
        "classicality": classicality,
        "evolved": [
            {"time": t, "observable": name, "terms": _coeffs_json(evolved[(t, name)])}
            for t, name in jobs
        ],
        "spectra": [
            {"time": t, "observable": name, **spec}
            for (t, name), (spec, _, _) in zip(jobs, results)
        ],
        "spreads": [s for _, spreads, _ in results for s in spreads],
        "bounds": bounds,
        "warnings": warnings,
        "all_pass": bool(checked) and all(r["verdict"] == "pass" for r in checked),
        "converged": not unconverged,
    }


BOUND_COLUMNS = ["time", "observable", "p", "L", "center", "half_width",
                 "lower", "oracle", "upper", "verdict"]
SPREAD_COLUMNS = ["time", "observable", "p", "L", "spread"]


def write_outputs(bundle: dict, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.json").write_text(json.dumps(bundle, indent=1, sort_keys=True) + "\n")
    for fname, cols, rows in (
        ("bounds.csv", BOUND_COLUMNS, bundle["bounds"]),
        ("spreads.csv", SPREAD_COLUMNS, bundle["spreads"]),
    ):
        with open(out / fname, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in rows:
                w.writerow(["" if r.get(c) is None else repr(r[c]) if isinstance(r[c], float)
                            else r[c] for c in cols])


def read_results(path) -> dict:
    return json.loads(Path(path).read_text())


def coupled_oscillator(k: float = 0.1) -> dict:
    """The linearly coupled oscillator pair ``(x^2 + q^2)/2 + k x Q``."""
    return {
        "hbar": 1.0,
        "hamiltonian": [
            {"coeff_re": 0.5, "coeff_im": 0.0, "classical_exponents": [2, 0], "quantum_word": []},
            {"coeff_re": 0.5, "coeff_im": 0.0, "classical_exponents": [0, 2], "quantum_word": []},
            {"coeff_re": k, "coeff_im": 0.0, "classical_exponents": [0, 1], "quantum_word": [3]},
        ],
        "classical_data": {"centers": [1.0, 0.5], "margins": [1.0, 1.0]},
        "phi_c": {"coherent": [1.0, 0.5]},
        "phi_q": {"fock": 0},
        "times": [0.5, 1.0, 2.0],
        "observables": {"q": 1, "x": 2, "Q": 3, "P": 4},
        "intervals": {"auto": {"count": 5, "sigmas": 6.0}},
        "p_values": [0.9999],
        "order_L": [1, 2],
        "dims": {"classical": 40, "quantum": 40, "check_convergence": True,
                 "convergence_tolerance": 1e-6},
        "evolution": {"max_order": 25, "degree_cap": None, "tail_tolerance": 0.0},
    }
