"""Parity-check matrices, array-code construction, and alist I/O."""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .decoder import TannerGraph


class CodeError(ValueError):
    pass


class ParityCheckMatrix:
    """Sparse binary parity-check matrix with exact GF(2) rank and rate."""

    def __init__(self, m: int, n: int, check_neighbors: list[list[int]]):
        if len(check_neighbors) != m:
            raise CodeError("row count mismatch")
        self.m = m
        self.n = n
        self.check_neighbors = [sorted(row) for row in check_neighbors]
        for i, row in enumerate(self.check_neighbors):
            if len(set(row)) != len(row):
                raise CodeError(f"repeated column in row {i}")
            if row and (row[0] < 0 or row[-1] >= n):
                raise CodeError(f"column index out of range in row {i}")
        self._rank: int | None = None

    def to_graph(self) -> TannerGraph:
        return TannerGraph(self.n, self.check_neighbors)

    def rank(self) -> int:
        """GF(2) rank via bit-packed Gaussian elimination."""
        if self._rank is None:
            words = (self.n + 63) // 64
            rows = np.zeros((self.m, words), dtype=np.uint64)
            for i, cols in enumerate(self.check_neighbors):
                for j in cols:
                    rows[i, j >> 6] ^= np.uint64(1) << np.uint64(j & 63)
            r = 0
            for col in range(self.n):
                w, bit = col >> 6, np.uint64(1) << np.uint64(col & 63)
                pivot = None
                for i in range(r, self.m):
                    if rows[i, w] & bit:
                        pivot = i
                        break
                if pivot is None:
                    continue
                rows[[r, pivot]] = rows[[pivot, r]]
                hit = (rows[:, w] & bit).astype(bool)
                hit[r] = False
                rows[hit] ^= rows[r]
                r += 1
            self._rank = r
        return self._rank

    def rate(self) -> float:
        return (self.n - self.rank()) / self.n

    def syndrome(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        return np.array(
            [int(bits[cols].sum()) & 1 for cols in self.check_neighbors], dtype=np.uint8
        )

    def is_codeword(self, bits) -> bool:
        return not self.syndrome(bits).any()


def array_code(gamma: int, p: int) -> ParityCheckMatrix:
    """gamma x p grid of p x p circulant permutation blocks; block (i, j)
    is the cyclic shift by i*j.  p must be prime, gamma <= p."""
    if p < 2 or any(p % q == 0 for q in range(2, int(math.isqrt(p)) + 1)):
        raise CodeError(f"p={p} is not prime")
    if not 1 <= gamma <= p:
        raise CodeError(f"need 1 <= gamma <= p, got gamma={gamma}")
    m, n = gamma * p, p * p
    rows: list[list[int]] = [[] for _ in range(m)]
    for i in range(gamma):
        for j in range(p):
            # shift-by-(i*j) circulant: row r has a 1 in column (r + i*j) mod p
            for r in range(p):
                rows[i * p + r].append(j * p + (r + i * j) % p)
    return ParityCheckMatrix(m, n, rows)


def load_alist(path) -> ParityCheckMatrix:
    """Read the standard alist sparse-matrix format (1-based indices,
    zero-padded rows tolerated)."""
    with open(path) as fh:
        tokens_by_line = [line.split() for line in fh]
    flat: list[tuple[int, int]] = []  # (value, lineno)
    for lineno, toks in enumerate(tokens_by_line, start=1):
        for t in toks:
            try:
                flat.append((int(t), lineno))
            except ValueError:
                raise CodeError(f"alist line {lineno}: non-integer token {t!r}")
    pos = 0

    def take(k: int) -> list[int]:
        nonlocal pos
        if pos + k > len(flat):
            last = flat[-1][1] if flat else 0
            raise CodeError(f"alist truncated near line {last}")
        vals = [v for v, _ in flat[pos : pos + k]]
        pos += k
        return vals

    n, m = take(2)
    take(2)  # max column / row degrees (redundant, re-derived below)
    col_deg = take(n)
    row_deg = take(m)
    check_neighbors: list[list[int]] = [[] for _ in range(m)]
    for j in range(n):
        dmax = max(col_deg) if col_deg else 0
        entries = take(dmax) if len(set(col_deg)) > 1 else take(col_deg[j])
        live = [e for e in entries if e != 0]
        if len(live) != col_deg[j]:
            raise CodeError(f"alist column {j}: degree {col_deg[j]} but {len(live)} entries")
        for e in live:
            if not 1 <= e <= m:
                raise CodeError(f"alist column {j}: row index {e} out of range")
            check_neighbors[e - 1].append(j)
    for i in range(m):
        dmax = max(row_deg) if row_deg else 0
        entries = take(dmax) if len(set(row_deg)) > 1 else take(row_deg[i])
        live = sorted(e - 1 for e in entries if e != 0)
        if live != check_neighbors[i]:
            raise CodeError(f"alist row {i}: row list disagrees with column lists")
    return ParityCheckMatrix(m, n, check_neighbors)


def store_alist(H: ParityCheckMatrix, path) -> None:
    var_neighbors: list[list[int]] = [[] for _ in range(H.n)]
    for i, cols in enumerate(H.check_neighbors):
        for j in cols:
            var_neighbors[j].append(i)
    cmax = max((len(v) for v in var_neighbors), default=0)
    rmax = max((len(r) for r in H.check_neighbors), default=0)
    with open(path, "w") as fh:
        fh.write(f"{H.n} {H.m}\n{cmax} {rmax}\n")
        fh.write(" ".join(str(len(v)) for v in var_neighbors) + "\n")
        fh.write(" ".join(str(len(r)) for r in H.check_neighbors) + "\n")
        for v in var_neighbors:
            fh.write(" ".join(str(i + 1) for i in v) + " " + "0 " * (cmax - len(v)) + "\n")
        for r in H.check_neighbors:
            fh.write(" ".join(str(j + 1) for j in r) + " " + "0 " * (rmax - len(r)) + "\n")


def find_weight_w_codewords(
    H: ParityCheckMatrix, w: int, limit: int | None = None, guard: int = 1 << 30
) -> list[tuple[int, ...]]:
    """All weight-w codeword supports by exhaustive search over w-subsets,
    guarded by C(n, w) <= guard."""
    total = math.comb(H.n, w)
    if total > guard:
        raise CodeError(f"C({H.n},{w}) = {total} exceeds search guard {guard}")
    var_rows: list[set[int]] = [set() for _ in range(H.n)]
    for i, cols in enumerate(H.check_neighbors):
        for j in cols:
            var_rows[j].add(i)
    out = []
    syn = bytearray(H.m)

    def rec(start: int, left: int):
        if left == 0:
            if not any(syn):
                out.append(tuple(chosen))
            return
        if limit is not None and len(out) >= limit:
            return
        for j in range(start, H.n - left + 1):
            chosen.append(j)
            for i in var_rows[j]:
                syn[i] ^= 1
            rec(j + 1, left - 1)
            for i in var_rows[j]:
                syn[i] ^= 1
            chosen.pop()

    chosen: list[int] = []
    rec(0, w)
    return out


def count_weight_w_codewords_array(gamma: int, p: int, w: int) -> int:
    """Closed-form weight-w codeword count for gamma = 3 array codes at
    w = 6: p^2 (p-1)(p-2) / 6."""
    if gamma != 3 or w != 6:
        raise CodeError("closed form known only for gamma=3, w=6")
    return p * p * (p - 1) * (p - 2) // 6
