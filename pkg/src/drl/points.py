"""Sorted, deduplicated point sets with named coordinates, and joins."""

from __future__ import annotations

import os

import numpy as np

from .gf import GuardError

DEFAULT_POINT_GUARD = 10**7


def point_guard() -> int:
    env = os.environ.get("DRL_GUARD_POINTS")
    return int(env) if env else DEFAULT_POINT_GUARD


def check_guard(n: int, what: str = "point set"):
    g = point_guard()
    if n > g:
        raise GuardError(f"{what} would hold {n} points, above the guard {g} (DRL_GUARD_POINTS)")


def pack_rows(arr: np.ndarray):
    """Order-preserving int64 key per row (mixed radix), or None if it would overflow."""
    k = arr.shape[1]
    if k == 0 or len(arr) == 0:
        return np.zeros(len(arr), dtype=np.int64)
    if k == 1:
        return arr[:, 0].astype(np.int64)
    radix = int(arr.max()) + 1
    if radix ** k >= 2**62 or int(arr.min()) < 0:
        return None
    key = arr[:, 0].astype(np.int64)
    for j in range(1, k):
        key = key * radix + arr[:, j]
    return key


def unique_rows(arr: np.ndarray) -> np.ndarray:
    key = pack_rows(arr)
    if key is None:
        return np.unique(arr, axis=0)
    _, idx = np.unique(key, return_index=True)
    return arr[idx]


class PointSet:
    """Rows of field-element codes, lexicographically sorted and unique."""

    __slots__ = ("coords", "data", "_set")

    def __init__(self, coords, data, _sorted=False):
        self.coords = tuple(coords)
        k = len(self.coords)
        arr = np.asarray(data, dtype=np.int64).reshape(-1, k) if k else np.zeros((min(len(data), 1), 0), np.int64)
        if k and not _sorted and len(arr):
            arr = unique_rows(arr)
        self.data = arr
        self._set = None

    @classmethod
    def unit(cls):
        return cls((), np.zeros((1, 0), np.int64), _sorted=True)

    @classmethod
    def empty(cls, coords):
        return cls(coords, np.zeros((0, len(coords)), np.int64), _sorted=True)

    def __len__(self):
        return int(self.data.shape[0])

    def __iter__(self):
        return iter(self.tuples())

    def tuples(self) -> list:
        return [tuple(int(x) for x in row) for row in self.data]

    def __contains__(self, pt):
        if self._set is None:
            self._set = set(map(tuple, self.data.tolist()))
        return tuple(pt) in self._set

    def __eq__(self, other):
        return (isinstance(other, PointSet) and self.coords == other.coords
                and self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data)))

    def __repr__(self):
        return f"PointSet({self.coords}, {len(self)} points)"

    def col(self, name) -> np.ndarray:
        return self.data[:, self.coords.index(name)]

    def columns(self, names) -> np.ndarray:
        idx = [self.coords.index(c) for c in names]
        return self.data[:, idx]

    def project(self, names) -> "PointSet":
        names = tuple(names)
        if not names:
            return PointSet.unit() if len(self) else PointSet.empty(())
        return PointSet(names, self.columns(names))

    def select(self, mask) -> "PointSet":
        return PointSet(self.coords, self.data[np.asarray(mask, bool)], _sorted=True)

    def reorder(self, names) -> "PointSet":
        return PointSet(names, self.columns(names))


def row_keys(arr: np.ndarray) -> np.ndarray:
    """Map each row to a dense integer id; equal rows get equal ids."""
    if arr.shape[1] == 0:
        return np.zeros(arr.shape[0], dtype=np.int64)
    key = pack_rows(arr)
    if key is not None:
        _, inv = np.unique(key, return_inverse=True)
        return inv.reshape(-1).astype(np.int64)
    _, inv = np.unique(arr, axis=0, return_inverse=True)
    return inv.reshape(-1).astype(np.int64)


def member_mask(ps: PointSet, sub: PointSet) -> np.ndarray:
    """For each row of ``ps``, whether its restriction to sub.coords lies in ``sub``."""
    if not sub.coords:
        return np.full(len(ps), len(sub) > 0)
    a = ps.columns(sub.coords)
    if len(sub) == 0 or len(a) == 0:
        return np.zeros(len(a), dtype=bool)
    both = np.concatenate([sub.data, a])
    packed = pack_rows(both)
    if packed is not None:
        return np.isin(packed[len(sub):], packed[: len(sub)])
    keys = row_keys(both)
    ks = keys[: len(sub)]
    return np.isin(keys[len(sub):], ks)


def join(a: PointSet, b: PointSet, coords=None) -> PointSet:
    """Natural join on shared coordinate names."""
    shared = [c for c in a.coords if c in b.coords]
    extra = [c for c in b.coords if c not in a.coords]
    out = tuple(a.coords) + tuple(extra)
    if len(a) == 0 or len(b) == 0:
        res = PointSet.empty(out)
    elif not shared:
        n = len(a) * len(b)
        check_guard(n, "fibre product")
        ia = np.repeat(np.arange(len(a)), len(b))
        ib = np.tile(np.arange(len(b)), len(a))
        res = PointSet(out, np.hstack([a.data[ia], b.columns(extra)[ib]]) if extra else a.data[ia])
    else:
        ka = a.columns(shared)
        kb = b.columns(shared)
        keys = row_keys(np.concatenate([ka, kb]))
        key_a, key_b = keys[: len(a)], keys[len(a):]
        order = np.argsort(key_b, kind="stable")
        sk = key_b[order]
        lo = np.searchsorted(sk, key_a, side="left")
        hi = np.searchsorted(sk, key_a, side="right")
        cnt = hi - lo
        total = int(cnt.sum())
        check_guard(total, "fibre product")
        ia = np.repeat(np.arange(len(a)), cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        ib = order[np.repeat(lo, cnt) + offs]
        if extra:
            res = PointSet(out, np.hstack([a.data[ia], b.columns(extra)[ib]]))
        else:
            res = PointSet(out, a.data[ia])
    if coords is not None:
        res = res.reorder(coords)
    return res
