"""Hot inner loops, each in a numba and a numpy/pure-Python flavour.

The public entry points at the bottom dispatch on :func:`rholab._backend.use_numba`.
Both flavours are bit-identical: every random choice comes from the same
splitmix64 keyed hash, never from a backend-specific RNG.

Walk conventions shared by all kernels
--------------------------------------
model 0 (exponent model): elements are residues mod ``n``; the group
operation is addition, ``g`` is 1 and ``h`` is the planted log ``y``.
model 1 (multiplicative): elements are residues mod a prime ``p``; the
group operation is multiplication and ``g``, ``h`` are actual group elements.

Partition class 0/1/2 means S1/S2/S3, i.e. multiply by ``g`` / by ``h`` /
square. A non-empty ``table`` overrides the keyed hash: ``table[x]`` is the
class of element ``x``.
"""

from __future__ import annotations

import numpy as np

from rholab._backend import njit, use_numba

EXPONENT = 0
MULTIPLICATIVE = 1

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB

EMPTY_TABLE = np.zeros(0, dtype=np.int8)


# ---------------------------------------------------------------- hashing


def mix64(z: int) -> int:
    """splitmix64 finaliser on a Python int."""
    z = (z + _GOLDEN) & _M64
    z = ((z ^ (z >> 30)) * _C1) & _M64
    z = ((z ^ (z >> 27)) * _C2) & _M64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z += np.uint64(_GOLDEN)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_C1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_C2)
    z ^= z >> np.uint64(31)
    return z


@njit
def _mix64_nb(z):
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def partition_class(x: int, key: int) -> int:
    return mix64(x ^ key) % 3


def partition_class_array(xs: np.ndarray, key: int) -> np.ndarray:
    h = mix64_array(np.asarray(xs, dtype=np.uint64) ^ np.uint64(key))
    return (h % np.uint64(3)).astype(np.int8)


def _random_choice_array(walk_keys: np.ndarray, step: int) -> np.ndarray:
    h = mix64_array(walk_keys + np.uint64(step))
    return (h % np.uint64(3)).astype(np.int64)


# ---------------------------------------------------------------- scalar step


def mulmod(a: int, b: int, m: int) -> int:
    return a * b % m


@njit
def _mulmod_nb(a, b, m):
    if m < 4294967296:
        return np.int64((np.uint64(a) * np.uint64(b)) % np.uint64(m))
    # double-and-add keeps every intermediate below 2**64 for m < 2**63
    ua = np.uint64(a) % np.uint64(m)
    ub = np.uint64(b)
    um = np.uint64(m)
    acc = np.uint64(0)
    while ub > np.uint64(0):
        if ub & np.uint64(1):
            acc = acc + ua
            if acc >= um:
                acc = acc - um
        ua = ua + ua
        if ua >= um:
            ua = ua - um
        ub = ub >> np.uint64(1)
    return np.int64(acc)


@njit
def _op_nb(model, x, z, m):
    if model == 0:
        s = x + z
        return s - m if s >= m else s
    return _mulmod_nb(x, z, m)


@njit
def _class_nb(x, key, table):
    if table.size > 0:
        return np.int64(table[x])
    return np.int64(_mix64_nb(np.uint64(x) ^ key) % np.uint64(3))


@njit
def _advance_nb(cls, x, a, b, model, m, g, h, n):
    if cls == 0:
        return _op_nb(model, x, g, m), a, (b + 1) % n
    if cls == 1:
        return _op_nb(model, x, h, m), (a + 1) % n, b
    return _op_nb(model, x, x, m), (2 * a) % n, (2 * b) % n


def advance(cls: int, x: int, a: int, b: int, model: int, m: int, g: int, h: int, n: int):
    """One application of the iteration map given the partition class of ``x``."""
    if model == EXPONENT:
        op = lambda u, v: (u + v) % m  # noqa: E731
    else:
        op = lambda u, v: u * v % m  # noqa: E731
    if cls == 0:
        return op(x, g), a, (b + 1) % n
    if cls == 1:
        return op(x, h), (a + 1) % n, b
    return op(x, x), 2 * a % n, 2 * b % n


def _class_py(x: int, key: int, table: np.ndarray) -> int:
    if table.size:
        return int(table[x])
    return mix64(x ^ key) % 3


# ---------------------------------------------------------------- Floyd


@njit
def _floyd_nb(x0, a0, b0, model, m, g, h, n, key, table, max_steps):
    x, a, b = x0, a0, b0
    X, A, B = x0, a0, b0
    for k in range(1, max_steps + 1):
        x, a, b = _advance_nb(_class_nb(x, key, table), x, a, b, model, m, g, h, n)
        X, A, B = _advance_nb(_class_nb(X, key, table), X, A, B, model, m, g, h, n)
        X, A, B = _advance_nb(_class_nb(X, key, table), X, A, B, model, m, g, h, n)
        if x == X:
            return k, x, a, b, A, B
    return -1, x, a, b, A, B


def _floyd_py(x0, a0, b0, model, m, g, h, n, key, table, max_steps):
    x, a, b = x0, a0, b0
    X, A, B = x0, a0, b0
    for k in range(1, max_steps + 1):
        x, a, b = advance(_class_py(x, key, table), x, a, b, model, m, g, h, n)
        X, A, B = advance(_class_py(X, key, table), X, A, B, model, m, g, h, n)
        X, A, B = advance(_class_py(X, key, table), X, A, B, model, m, g, h, n)
        if x == X:
            return k, x, a, b, A, B
    return -1, x, a, b, A, B


# ---------------------------------------------------------------- first self-intersection


@njit
def _first_collision_nb(x0s, hs, keys, n, table, max_steps):
    T = x0s.shape[0]
    out = np.full(T, -1, dtype=np.int64)
    stamp = np.full(n, -1, dtype=np.int64)
    for i in range(T):
        x = x0s[i]
        stamp[x] = i
        a = 0
        b = 0
        for s in range(1, max_steps + 1):
            x, a, b = _advance_nb(_class_nb(x, keys[i], table), x, a, b, 0, n, 1, hs[i], n)
            if stamp[x] == i:
                out[i] = s
                break
            stamp[x] = i
    return out


def _exp_step_array(x, cls, hs, n):
    """Vectorised exponent-model step for classes ``cls``."""
    return np.where(cls == 0, x + 1, np.where(cls == 1, x + hs, 2 * x)) % n


def _classes_array(x, keys, table):
    if table.size:
        return table[x].astype(np.int64)
    h = mix64_array(x.astype(np.uint64) ^ keys)
    return (h % np.uint64(3)).astype(np.int64)


def _chunks(T: int, n: int, cap: int = 50_000_000):
    per = max(1, cap // max(n, 1))
    for lo in range(0, T, per):
        yield lo, min(T, lo + per)


def _first_collision_np(x0s, hs, keys, n, table, max_steps):
    T = x0s.shape[0]
    out = np.full(T, -1, dtype=np.int64)
    for lo, hi in _chunks(T, n):
        idx = np.arange(lo, hi)
        x = x0s[idx].astype(np.int64)
        seen = np.zeros((hi - lo, n), dtype=bool)
        rows = np.arange(hi - lo)
        seen[rows, x] = True
        alive = rows.copy()
        for s in range(1, max_steps + 1):
            if alive.size == 0:
                break
            xa = x[alive]
            cls = _classes_array(xa, keys[lo + alive], table)
            xa = _exp_step_array(xa, cls, hs[lo + alive], n)
            x[alive] = xa
            hit = seen[alive, xa]
            out[lo + alive[hit]] = s
            seen[alive, xa] = True
            alive = alive[~hit]
    return out


# ---------------------------------------------------------------- spaced sampling


@njit
def _spaced_hits_nb(x0s, hs, keys, walk_keys, n, t, r, samples, random_model, table):
    T = x0s.shape[0]
    early = np.full(T, -1, dtype=np.int64)
    hits = np.zeros((T, samples), dtype=np.uint8)
    stamp = np.full(n, -1, dtype=np.int64)
    for i in range(T):
        x = x0s[i]
        a = 0
        b = 0
        for s in range(1, t + 1):
            x, a, b = _advance_nb(_class_nb(x, keys[i], table), x, a, b, 0, n, 1, hs[i], n)
            if stamp[x] == i or x == x0s[i]:
                early[i] = s
                break
            stamp[x] = i
        if early[i] >= 0:
            continue
        step = np.uint64(0)
        for j in range(samples):
            for _ in range(r):
                if random_model:
                    cls = np.int64(_mix64_nb(walk_keys[i] + step) % np.uint64(3))
                else:
                    cls = _class_nb(x, keys[i], table)
                step += np.uint64(1)
                x, a, b = _advance_nb(cls, x, a, b, 0, n, 1, hs[i], n)
            if stamp[x] == i:
                hits[i, j] = 1
    return early, hits


def _spaced_hits_np(x0s, hs, keys, walk_keys, n, t, r, samples, random_model, table):
    T = x0s.shape[0]
    early = np.full(T, -1, dtype=np.int64)
    hits = np.zeros((T, samples), dtype=np.uint8)
    for lo, hi in _chunks(T, n):
        rows = np.arange(hi - lo)
        k = keys[lo:hi]
        hh = hs[lo:hi]
        x = x0s[lo:hi].astype(np.int64)
        x_start = x.copy()
        inS = np.zeros((hi - lo, n), dtype=bool)
        ok = np.ones(hi - lo, dtype=bool)
        for s in range(1, t + 1):
            x = _exp_step_array(x, _classes_array(x, k, table), hh, n)
            clash = ok & (inS[rows, x] | (x == x_start))
            early[lo + rows[clash]] = s
            ok &= ~clash
            inS[rows[ok], x[ok]] = True
        live = rows[ok]
        x = x[live]
        k, hh, wk = k[live], hh[live], walk_keys[lo:hi][live]
        step = 0
        for j in range(samples):
            for _ in range(r):
                if random_model:
                    cls = _random_choice_array(wk, step)
                else:
                    cls = _classes_array(x, k, table)
                step += 1
                x = _exp_step_array(x, cls, hh, n)
            hits[lo + live, j] = inS[live, x]
    return early, hits


# ---------------------------------------------------------------- exact distribution evolution


@njit
def _evolve_tv_nb(P, inv_maps, steps, stop_at):
    R, n = P.shape
    D = inv_maps.shape[0]
    cur = P.copy()
    nxt = np.empty_like(cur)
    curve = np.empty(steps + 1)
    u = 1.0 / n
    worst = 0.0
    for i in range(R):
        acc = 0.0
        for w in range(n):
            acc += abs(cur[i, w] - u)
        worst = max(worst, 0.5 * acc)
    curve[0] = worst
    if worst <= stop_at:
        return curve[:1], cur
    for s in range(1, steps + 1):
        worst = 0.0
        for i in range(R):
            acc = 0.0
            for w in range(n):
                v = 0.0
                for j in range(D):
                    v += cur[i, inv_maps[j, w]]
                v /= D
                nxt[i, w] = v
                acc += abs(v - u)
            worst = max(worst, 0.5 * acc)
        cur, nxt = nxt, cur
        curve[s] = worst
        if worst <= stop_at:
            return curve[: s + 1], cur
    return curve, cur


def _evolve_tv_np(P, inv_maps, steps, stop_at):
    n = P.shape[1]
    D = inv_maps.shape[0]
    cur = P.copy()
    curve = [0.5 * np.abs(cur - 1.0 / n).sum(axis=1).max()]
    if curve[0] <= stop_at:
        return np.array(curve), cur
    for _ in range(steps):
        nxt = cur[:, inv_maps[0]].copy()
        for j in range(1, D):
            nxt += cur[:, inv_maps[j]]
        cur = nxt / D
        curve.append(0.5 * np.abs(cur - 1.0 / n).sum(axis=1).max())
        if curve[-1] <= stop_at:
            break
    return np.array(curve), cur


# ---------------------------------------------------------------- Fourier-basis operator


@njit
def _normal_apply_nb(c, d, fwd, inv):
    """A^* A c with (A c)_j = d_j c_j + sum_p c[inv_p[j]]."""
    n = c.shape[0]
    P = fwd.shape[0]
    Ac = np.empty_like(c)
    for j in range(n):
        v = d[j] * c[j]
        for p in range(P):
            v += c[inv[p, j]]
        Ac[j] = v
    out = np.empty_like(c)
    for k in range(n):
        v = np.conj(d[k]) * Ac[k]
        for p in range(P):
            v += Ac[fwd[p, k]]
        out[k] = v
    return out


def _normal_apply_np(c, d, fwd, inv):
    Ac = d * c
    for p in range(inv.shape[0]):
        Ac = Ac + c[inv[p]]
    out = np.conj(d) * Ac
    for p in range(fwd.shape[0]):
        out = out + Ac[fwd[p]]
    return out


# ---------------------------------------------------------------- dispatch


def floyd(x0, a0, b0, model, m, g, h, n, key, table, max_steps):
    """Floyd cycle detection; returns (k, x_k, a_k, b_k, a_2k, b_2k), k=-1 on budget."""
    if use_numba():
        res = _floyd_nb(
            np.int64(x0), np.int64(a0), np.int64(b0), np.int64(model), np.int64(m),
            np.int64(g), np.int64(h), np.int64(n), np.uint64(key), table, np.int64(max_steps),
        )
        return tuple(int(v) for v in res)
    return _floyd_py(int(x0), int(a0), int(b0), model, int(m), int(g), int(h), int(n),
                     int(key), table, int(max_steps))


def first_collision_batch(x0s, hs, keys, n, table, max_steps):
    """Exponent-model first self-intersection time per walk (-1 on budget)."""
    x0s = np.ascontiguousarray(x0s, dtype=np.int64)
    hs = np.ascontiguousarray(hs, dtype=np.int64)
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    if use_numba():
        return _first_collision_nb(x0s, hs, keys, np.int64(n), table, np.int64(max_steps))
    return _first_collision_np(x0s, hs, keys, int(n), table, int(max_steps))


def spaced_hits_batch(x0s, hs, keys, walk_keys, n, t, r, samples, random_model, table):
    """Per trial: early-collision step (or -1) and hit indicators of spaced samples."""
    args = (
        np.ascontiguousarray(x0s, dtype=np.int64),
        np.ascontiguousarray(hs, dtype=np.int64),
        np.ascontiguousarray(keys, dtype=np.uint64),
        np.ascontiguousarray(walk_keys, dtype=np.uint64),
    )
    if use_numba():
        return _spaced_hits_nb(*args, np.int64(n), np.int64(t), np.int64(r),
                               np.int64(samples), bool(random_model), table)
    return _spaced_hits_np(*args, int(n), int(t), int(r), int(samples), bool(random_model), table)


def evolve_tv(P, inv_maps, steps, stop_at=-1.0):
    """Evolve row distributions; returns (max-row TV curve, final rows)."""
    P = np.ascontiguousarray(P, dtype=np.float64)
    inv_maps = np.ascontiguousarray(inv_maps, dtype=np.int64)
    if use_numba():
        return _evolve_tv_nb(P, inv_maps, np.int64(steps), float(stop_at))
    return _evolve_tv_np(P, inv_maps, int(steps), float(stop_at))


def normal_apply(c, d, fwd, inv):
    if use_numba():
        return _normal_apply_nb(c, d, fwd, inv)
    return _normal_apply_np(c, d, fwd, inv)
