"""Compiled inner loops for exhaustive channel-pattern enumeration.

These kernels replay exactly the arithmetic of
:class:`~ldpcfloor.decoder.BatchDecoder` (exact integer sums in quantizer
step units, requantization through a precomputed lookup table), but decode
one pattern at a time so that a row-schedule pipeline can bail out on the
first success.  A pattern counts as a failure only when every schedule in
the pipeline fails to restore it.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_EMPTY = np.int64(1) << 40


@njit(cache=True)
def _decode_one(
    digits,
    v2c,
    c2v,
    prev,
    tot,
    edge_var,
    check_ptr,
    check_edges,
    U_r,  # (pcols_max, m) level idx or -1
    pcols_r,
    stable_r,
    max_iter,
    is_spa,
    lvl_units,
    phi1,
    phi2,
    top_u,
    sat,
    lut,
    lut_off,
):
    """True iff the pattern is NOT corrected within max_iter iterations."""
    E = edge_var.shape[0]
    m = check_ptr.shape[0] - 1
    a = tot.shape[0]
    for e in range(E):
        v2c[e] = digits[edge_var[e]]
    for it in range(1, max_iter + 1):
        col = it - 1
        if col > pcols_r - 1:
            col = pcols_r - 1
        for j in range(m):
            u_idx = U_r[col, j]
            lo = check_ptr[j]
            hi = check_ptr[j + 1]
            if is_spa:
                total = np.int64(0)
                parity = 0
                for q in range(lo, hi):
                    k = v2c[check_edges[q]]
                    total += phi1[k]
                    if lvl_units[k] < 0:
                        parity ^= 1
                if u_idx >= 0:
                    total += phi1[u_idx]
                    if lvl_units[u_idx] < 0:
                        parity ^= 1
                for q in range(lo, hi):
                    e = check_edges[q]
                    k = v2c[e]
                    s = total - phi1[k]
                    if s <= 0:
                        mag = top_u
                    else:
                        mag = phi2[lut[2 * s + lut_off]]
                    neg = parity
                    if lvl_units[k] < 0:
                        neg ^= 1
                    val = -mag if neg == 1 else mag
                    c2v[e] = lut[2 * val + lut_off]
            else:
                min1 = _EMPTY
                min2 = _EMPTY
                amin = np.int64(-1)
                parity = 0
                for q in range(lo, hi):
                    u_ = lvl_units[v2c[check_edges[q]]]
                    mg = -u_ if u_ < 0 else u_
                    if u_ < 0:
                        parity ^= 1
                    if mg < min1:
                        min2 = min1
                        min1 = mg
                        amin = q
                    elif mg < min2:
                        min2 = mg
                if u_idx >= 0:
                    uu = lvl_units[u_idx]
                    um = -uu if uu < 0 else uu
                    if uu < 0:
                        parity ^= 1
                    if um < min1:
                        min1 = um
                    if um < min2:
                        min2 = um
                for q in range(lo, hi):
                    e = check_edges[q]
                    excl = min2 if q == amin else min1
                    if excl > sat:
                        excl = sat
                    neg = parity
                    if lvl_units[v2c[e]] < 0:
                        neg ^= 1
                    val = -excl if neg == 1 else excl
                    c2v[e] = lut[2 * val + lut_off]
        # hard decisions from exact totals; all-zero transmission means
        # every total must be strictly positive
        ok = True
        for v in range(a):
            tot[v] = lvl_units[digits[v]]
        for e in range(E):
            tot[edge_var[e]] += lvl_units[c2v[e]]
        for v in range(a):
            if tot[v] <= 0:
                ok = False
                break
        if ok:
            return False
        if it >= stable_r + 2:
            same = True
            for e in range(E):
                if v2c[e] != prev[e]:
                    same = False
                    break
            if same:
                return True
        for e in range(E):
            prev[e] = v2c[e]
        for e in range(E):
            s = tot[edge_var[e]] - lvl_units[c2v[e]]
            v2c[e] = lut[2 * s + lut_off]
    return True


@njit(cache=True)
def enum_failures(
    start,
    stop,
    t,
    a,
    edge_var,
    check_ptr,
    check_edges,
    U,  # (R, pcols_max, m)
    pcols,
    stable,
    max_iter,
    is_spa,
    lvl_units,
    phi1,
    phi2,
    top_u,
    sat,
    lut,
    lut_off,
    out_idx,
):
    """Scan patterns [start, stop) in lexicographic digit order; store the
    indices failing every row schedule into out_idx, return how many."""
    E = edge_var.shape[0]
    R = U.shape[0]
    digits = np.zeros(a, np.int64)
    x = start
    for i in range(a - 1, -1, -1):
        digits[i] = x % t
        x //= t
    v2c = np.empty(E, np.int64)
    c2v = np.empty(E, np.int64)
    prev = np.empty(E, np.int64)
    tot = np.empty(a, np.int64)
    n_out = 0
    for idx in range(start, stop):
        all_fail = True
        for r in range(R):
            if not _decode_one(
                digits, v2c, c2v, prev, tot,
                edge_var, check_ptr, check_edges,
                U[r], pcols[r], stable[r], max_iter,
                is_spa, lvl_units, phi1, phi2, top_u, sat, lut, lut_off,
            ):
                all_fail = False
                break
        if all_fail:
            out_idx[n_out] = idx
            n_out += 1
        i = a - 1
        while i >= 0:
            digits[i] += 1
            if digits[i] < t:
                break
            digits[i] = 0
            i -= 1
    return n_out


@njit(cache=True)
def enum_failures_orbits(
    start,
    stop,
    t,
    a,
    perms,  # (G, a) variable permutations forming the automorphism group
    edge_var,
    check_ptr,
    check_edges,
    U,
    pcols,
    stable,
    max_iter,
    is_spa,
    lvl_units,
    phi1,
    phi2,
    top_u,
    sat,
    lut,
    lut_off,
    out_idx,
    out_cnt,
):
    """Like enum_failures, but decodes only patterns that are
    lexicographically minimal in their automorphism orbit and reports the
    orbit size alongside (valid when the external schedule is identical on
    every check, so decoding failure is orbit-invariant)."""
    E = edge_var.shape[0]
    R = U.shape[0]
    G = perms.shape[0]
    digits = np.zeros(a, np.int64)
    x = start
    for i in range(a - 1, -1, -1):
        digits[i] = x % t
        x //= t
    v2c = np.empty(E, np.int64)
    c2v = np.empty(E, np.int64)
    prev = np.empty(E, np.int64)
    tot = np.empty(a, np.int64)
    n_out = 0
    for idx in range(start, stop):
        canon = True
        stab = 0
        for gi in range(G):
            cmp = 0
            for i in range(a):
                d = digits[perms[gi, i]] - digits[i]
                if d != 0:
                    cmp = -1 if d < 0 else 1
                    break
            if cmp < 0:
                canon = False
                break
            if cmp == 0:
                stab += 1
        if canon:
            all_fail = True
            for r in range(R):
                if not _decode_one(
                    digits, v2c, c2v, prev, tot,
                    edge_var, check_ptr, check_edges,
                    U[r], pcols[r], stable[r], max_iter,
                    is_spa, lvl_units, phi1, phi2, top_u, sat, lut, lut_off,
                ):
                    all_fail = False
                    break
            if all_fail:
                out_idx[n_out] = idx
                out_cnt[n_out] = G // stab
                n_out += 1
        i = a - 1
        while i >= 0:
            digits[i] += 1
            if digits[i] < t:
                break
            digits[i] = 0
            i -= 1
    return n_out


@njit(cache=True)
def mask_failures(
    xs,  # (N, a) level indices
    edge_var,
    check_ptr,
    check_edges,
    U,
    pcols,
    stable,
    max_iter,
    is_spa,
    lvl_units,
    phi1,
    phi2,
    top_u,
    sat,
    lut,
    lut_off,
    out_mask,
):
    """Per-pattern failure flags for an explicit list of patterns."""
    E = edge_var.shape[0]
    R = U.shape[0]
    a = xs.shape[1]
    v2c = np.empty(E, np.int64)
    c2v = np.empty(E, np.int64)
    prev = np.empty(E, np.int64)
    tot = np.empty(a, np.int64)
    for i in range(xs.shape[0]):
        all_fail = True
        for r in range(R):
            if not _decode_one(
                xs[i], v2c, c2v, prev, tot,
                edge_var, check_ptr, check_edges,
                U[r], pcols[r], stable[r], max_iter,
                is_spa, lvl_units, phi1, phi2, top_u, sat, lut, lut_off,
            ):
                all_fail = False
                break
        out_mask[i] = 1 if all_fail else 0
