"""Bidifferential product on commuting exponent vectors.

Both the operator product (normal-ordered words) and the hybrid star product
reduce to the same computation once every word is written as a commutative
monomial: ``A exp(sum_m c_m D_m) B`` where ``D_m`` acts on one pair of
variables.  Two kinds of pairs occur:

``"moyal"``
    classical pair ``(x, y)``: ``D = <-d_x ->d_y - <-d_y ->d_x`` with
    weight ``i*hbar/2``.
``"standard"``
    quantum pair ``(x, y)`` in q-before-p order: ``D = <-d_y ->d_x`` with
    weight ``-i*hbar`` (one CCR swap per contraction).

Terms are passed as an ``(n, V)`` integer exponent array plus an ``(n,)``
complex coefficient array.
"""

from __future__ import annotations

import contextlib
import contextvars
import itertools
import math
from typing import Sequence

import numba
import numpy as np

PRUNE_TOL = 1e-14
_tol = contextvars.ContextVar("prune_tol", default=PRUNE_TOL)


def prune_tol() -> float:
    """Coefficients with modulus below this are dropped (exact zeros always are)."""
    return _tol.get()


@contextlib.contextmanager
def pruning(tol: float):
    """Temporarily change the pruning threshold; ``pruning(0.0)`` keeps everything nonzero."""
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    token = _tol.set(tol)
    try:
        yield
    finally:
        _tol.reset(token)

# above this many candidate pairs the vectorised path wins
_SMALL_PAIRS = 48
_CHUNK = 1 << 20
_COMPACT = 1 << 22
# dense accumulation when the packed key space is at most this large
_DENSE = 1 << 24


def _pair_options(kind, x, y, max_a, max_b, hbar):
    """Derivative options for one pair: (dA, dB, weight) with dA/dB as {var: order}."""
    opts = []
    if kind == "moyal":
        c = 0.5j * hbar
        for r in range(min(max_a[x], max_b[y]) + 1):
            for s in range(min(max_a[y], max_b[x]) + 1):
                w = c ** (r + s) * (-1) ** s / (math.factorial(r) * math.factorial(s))
                opts.append(({x: r, y: s}, {y: r, x: s}, w))
    elif kind == "standard":
        c = -1j * hbar
        for k in range(min(max_a[y], max_b[x]) + 1):
            opts.append(({y: k}, {x: k}, c**k / math.factorial(k)))
    else:
        raise ValueError(f"unknown pair kind {kind!r}")
    return opts


def _combos(pairs, max_a, max_b, hbar):
    per_pair = [_pair_options(kind, x, y, max_a, max_b, hbar) for x, y, kind in pairs]
    for choice in itertools.product(*per_pair):
        da: dict[int, int] = {}
        db: dict[int, int] = {}
        w = 1.0 + 0j
        for oa, ob, wi in choice:
            for v, k in oa.items():
                if k:
                    da[v] = da.get(v, 0) + k
            for v, k in ob.items():
                if k:
                    db[v] = db.get(v, 0) + k
            w *= wi
        yield da, db, w


def _falling(e: np.ndarray, k: int) -> np.ndarray:
    out = np.ones(e.shape, dtype=float)
    for j in range(k):
        out *= e - j
    return out


def _empty(nvars):
    return np.zeros((0, nvars), dtype=np.int64), np.zeros(0, dtype=complex)


def product_reference(ea, ca, eb, cb, pairs, hbar):
    """Pure-Python term-by-term product (small inputs, and the test oracle)."""
    nvars = ea.shape[1]
    acc: dict[tuple, complex] = {}
    for ra, va in zip(ea.tolist(), ca.tolist()):
        for rb, vb in zip(eb.tolist(), cb.tolist()):
            opts = [
                _pair_options(kind, x, y, ra, rb, hbar) for x, y, kind in pairs
            ]
            for choice in itertools.product(*opts):
                fa = list(ra)
                fb = list(rb)
                w = va * vb
                for oa, ob, wi in choice:
                    w *= wi
                    for v, k in oa.items():
                        w *= math.perm(fa[v], k)
                        fa[v] -= k
                    for v, k in ob.items():
                        w *= math.perm(fb[v], k)
                        fb[v] -= k
                if w == 0:
                    continue
                key = tuple(a + b for a, b in zip(fa, fb))
                acc[key] = acc.get(key, 0) + w
    tol = prune_tol()
    keys = [k for k, v in acc.items() if v != 0 and abs(v) >= tol]
    if not keys:
        return _empty(nvars)
    return (
        np.array(keys, dtype=np.int64).reshape(len(keys), nvars),
        np.array([acc[k] for k in keys], dtype=complex),
    )


def _reduce(keys, vals):
    uniq, inv = np.unique(keys, return_inverse=True)
    re = np.bincount(inv, weights=vals.real, minlength=len(uniq))
    im = np.bincount(inv, weights=vals.imag, minlength=len(uniq))
    return uniq, re + 1j * im


def _flush(keys_acc, vals_acc, dense, acc_re, acc_im):
    if not keys_acc:
        return [], []
    keys = np.concatenate(keys_acc)
    vals = np.concatenate(vals_acc)
    if dense:
        acc_re += np.bincount(keys, weights=vals.real, minlength=len(acc_re))
        acc_im += np.bincount(keys, weights=vals.imag, minlength=len(acc_im))
        return [], []
    k_, v_ = _reduce(keys, vals)
    return [k_], [v_]


def _falling_table(top: int) -> np.ndarray:
    """``T[n, k] = n!/(n-k)!`` for ``0 <= k <= n <= top`` (zero for ``k > n``)."""
    t = np.zeros((top + 1, top + 1))
    for n in range(top + 1):
        t[n, 0] = 1.0
        for k in range(1, n + 1):
            t[n, k] = t[n, k - 1] * (n - k + 1)
    return t


@numba.njit(cache=True)
def _pair_loop(ea, ca, eb, cb, px, py, moyal, wr, wsgn, ws, fall, mult, acc):  # pragma: no cover
    npairs = px.shape[0]
    top = fall.shape[0]
    # per-pair option lists: weight factor and key shift
    fac = np.zeros((npairs, top * top), np.complex128)
    sh = np.zeros((npairs, top * top), np.int64)
    cnt = np.zeros(npairs, np.int64)
    idx = np.zeros(npairs, np.int64)
    part_w = np.zeros(npairs + 1, np.complex128)
    part_k = np.zeros(npairs + 1, np.int64)
    nv = ea.shape[1]
    for i in range(ea.shape[0]):
        a = ea[i]
        ka = 0
        for v in range(nv):
            ka += a[v] * mult[v]
        for j in range(eb.shape[0]):
            b = eb[j]
            kb = ka
            for v in range(nv):
                kb += b[v] * mult[v]
            for t in range(npairs):
                x = px[t]
                y = py[t]
                step = mult[x] + mult[y]
                n = 0
                if moyal[t]:
                    for r in range(min(a[x], b[y]) + 1):
                        fr = wr[r] * fall[a[x], r] * fall[b[y], r]
                        for s_ in range(min(a[y], b[x]) + 1):
                            fac[t, n] = fr * wsgn[s_] * fall[a[y], s_] * fall[b[x], s_]
                            sh[t, n] = (r + s_) * step
                            n += 1
                else:
                    for r in range(min(a[y], b[x]) + 1):
                        fac[t, n] = ws[r] * fall[a[y], r] * fall[b[x], r]
                        sh[t, n] = r * step
                        n += 1
                cnt[t] = n
                idx[t] = 0
            # tensor product over pairs, partial products kept per level
            part_w[0] = ca[i] * cb[j]
            part_k[0] = kb
            level = 0
            while True:
                while level < npairs:
                    part_w[level + 1] = part_w[level] * fac[level, idx[level]]
                    part_k[level + 1] = part_k[level] - sh[level, idx[level]]
                    level += 1
                if npairs == 0:
                    acc[part_k[0]] += part_w[0]
                    break
                # innermost pair handled in a flat loop
                last = npairs - 1
                w0 = part_w[last]
                k0 = part_k[last]
                for u in range(cnt[last]):
                    acc[k0 - sh[last, u]] += w0 * fac[last, u]
                level = last
                idx[last] = cnt[last] - 1
                while level >= 0 and idx[level] + 1 >= cnt[level]:
                    idx[level] = 0
                    level -= 1
                if level < 0:
                    break
                idx[level] += 1


def _compiled(ea, ca, eb, cb, pairs, hbar, space, mult):
    top = int(max(ea.max(), eb.max()))
    fall = _falling_table(top)
    c = 0.5j * hbar
    wr = np.array([c**r / math.factorial(r) for r in range(top + 1)], dtype=complex)
    wsgn = np.array([(-c) ** r / math.factorial(r) for r in range(top + 1)], dtype=complex)
    ws = np.array([(-1j * hbar) ** k / math.factorial(k) for k in range(top + 1)], dtype=complex)
    px = np.array([x for x, _, _ in pairs], dtype=np.int64)
    py = np.array([y for _, y, _ in pairs], dtype=np.int64)
    for kind in {k for _, _, k in pairs} - {"moyal", "standard"}:
        raise ValueError(f"unknown pair kind {kind!r}")
    moyal = np.array([k == "moyal" for _, _, k in pairs], dtype=np.bool_)
    acc = np.zeros(space, dtype=complex)
    _pair_loop(
        np.ascontiguousarray(ea), np.ascontiguousarray(ca),
        np.ascontiguousarray(eb), np.ascontiguousarray(cb),
        px, py, moyal, wr, wsgn, ws, fall, mult, acc,
    )
    return acc


def bidiff_product(
    ea: np.ndarray,
    ca: np.ndarray,
    eb: np.ndarray,
    cb: np.ndarray,
    pairs: Sequence[tuple[int, int, str]],
    hbar: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Return the pruned product ``(exponents, coefficients)``."""
    nvars = ea.shape[1]
    if len(ca) == 0 or len(cb) == 0:
        return _empty(nvars)
    if len(ca) * len(cb) <= _SMALL_PAIRS:
        return product_reference(ea, ca, eb, cb, pairs, hbar)
    return _direct(ea, ca, eb, cb, pairs, hbar)


def _direct(ea, ca, eb, cb, pairs, hbar, prune=True):
    nvars = ea.shape[1]
    if len(ca) == 0 or len(cb) == 0:
        return _empty(nvars)

    max_a = ea.max(axis=0).tolist()
    max_b = eb.max(axis=0).tolist()
    bases = [a + b + 1 for a, b in zip(max_a, max_b)]
    if math.prod(bases) >= 2**62:
        e, c = product_reference(ea, ca, eb, cb, pairs, hbar)
        return e, c
    mult = np.ones(nvars, dtype=np.int64)
    for v in range(1, nvars):
        mult[v] = mult[v - 1] * bases[v - 1]

    space = math.prod(bases)
    if space <= _DENSE and pairs:
        acc = _compiled(ea, ca, eb, cb, pairs, hbar, space, mult)
        keys = np.flatnonzero(acc)
        return _decode(keys, acc[keys], bases, nvars, prune)
    dense = space <= _DENSE
    acc_re = np.zeros(space) if dense else None
    acc_im = np.zeros(space) if dense else None
    key_a = ea @ mult
    key_b = eb @ mult
    keys_acc: list[np.ndarray] = []
    vals_acc: list[np.ndarray] = []
    n_acc = 0

    for da, db, w in _combos(pairs, max_a, max_b, hbar):
        wa = ca.copy()
        for v, k in da.items():
            wa = wa * _falling(ea[:, v], k)
        wb = cb * w
        for v, k in db.items():
            wb = wb * _falling(eb[:, v], k)
        sel_a = np.flatnonzero(wa)
        sel_b = np.flatnonzero(wb)
        if len(sel_a) == 0 or len(sel_b) == 0:
            continue
        shift = sum(k * int(mult[v]) for v, k in da.items()) + sum(
            k * int(mult[v]) for v, k in db.items()
        )
        ka = key_a[sel_a] - shift
        kb = key_b[sel_b]
        va = wa[sel_a]
        vb = wb[sel_b]
        step = max(1, _CHUNK // len(sel_b))
        for start in range(0, len(sel_a), step):
            keys_acc.append((ka[start : start + step, None] + kb[None, :]).ravel())
            vals_acc.append((va[start : start + step, None] * vb[None, :]).ravel())
            n_acc += keys_acc[-1].size
            if n_acc > _COMPACT:
                keys_acc, vals_acc = _flush(keys_acc, vals_acc, dense, acc_re, acc_im)
                n_acc = sum(k.size for k in keys_acc)

    keys_acc, vals_acc = _flush(keys_acc, vals_acc, dense, acc_re, acc_im)
    if dense:
        keys = np.flatnonzero((acc_re != 0) | (acc_im != 0))
        vals = acc_re[keys] + 1j * acc_im[keys]
    elif keys_acc:
        keys, vals = keys_acc[0], vals_acc[0]
    else:
        return _empty(nvars)
    return _decode(keys, vals, bases, nvars, prune)


def _decode(keys, vals, bases, nvars, prune=True):
    keep = np.abs(vals) >= (prune_tol() if prune else 0.0)
    keep &= vals != 0
    keys, vals = keys[keep], vals[keep]
    exps = np.empty((len(keys), nvars), dtype=np.int64)
    rem = keys.copy()
    for v in range(nvars):
        exps[:, v] = rem % bases[v]
        rem //= bases[v]
    return exps, vals
