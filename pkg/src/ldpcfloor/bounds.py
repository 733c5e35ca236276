"""Failure-probability lower bounds from absorbing-set decoder graphs.

The engine enumerates every channel pattern on the sub-graph variables,
runs the quantized decoder once per external-input row schedule, and
keeps the patterns no schedule can correct.  Because decoding failure is
determined purely by level indices, the surviving pattern set is
SNR-independent; the probability of landing in it is evaluated afterwards
for any channel, giving lambda-hat and the error-floor estimate
N * lambda-hat.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
import time
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from . import _enum
from .absorbing import DecoderGraphDA, automorphisms, is_fully_symmetric
from .decoder import BatchDecoder, DecoderConfig, TannerGraph, get_phi_tables
from .quantizer import ChannelModel, Quantizer, snr_to_sigma


class BoundError(ValueError):
    pass


@dataclass(frozen=True)
class RowMatrix:
    """A (kappa x p) schedule of external-input level indices: row k feeds
    auxiliary check k, column i is used at iteration i+1 (the last column
    repeats forever)."""

    name: str
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.entries or not self.entries[0]:
            raise BoundError("row matrix must be non-empty")
        p = len(self.entries[0])
        if any(len(row) != p for row in self.entries):
            raise BoundError("ragged row matrix")

    @property
    def kappa(self) -> int:
        return len(self.entries)

    @property
    def p(self) -> int:
        return len(self.entries[0])

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def schedule(self) -> np.ndarray:
        """(p, kappa) iteration-major view for the decoder."""
        return self.array().T.copy()


def build_w_max(kappa: int, quantizer: Quantizer) -> RowMatrix:
    """Single-column schedule holding every external input at the top
    (most reliable correct) level."""
    top = quantizer.t - 1
    return RowMatrix("w-max", tuple((top,) for _ in range(kappa)))


def build_w_inc(kappa: int, quantizer: Quantizer, h: int = 3) -> RowMatrix:
    """Increasing-reliability schedule: each level of the non-negative half
    held for h iterations, ascending (starting from the neutral level 0),
    identically on all external edges; p = h*t/2."""
    if h < 1:
        raise BoundError("h must be >= 1")
    upper = [k for k in range(quantizer.t) if quantizer.units[k] >= 0]
    cols = tuple(k for k in upper for _ in range(h))
    return RowMatrix(f"w-inc-h{h}", tuple(cols for _ in range(kappa)))


@dataclass
class FailureSet:
    """Undecodable channel patterns of one sub-graph, stored as a
    composition histogram (sorted level-index tuple -> pattern count),
    optionally with the explicit pattern list for tiny sets."""

    a: int
    t: int
    counts: dict[tuple[int, ...], int]
    meta: dict = field(default_factory=dict)
    vectors: list[tuple[int, ...]] | None = None

    @property
    def total_failures(self) -> int:
        return sum(self.counts.values())

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# a {self.a}\n# t {self.t}\n")
            for k, v in sorted(self.meta.items()):
                fh.write(f"# meta {k} {json.dumps(v)}\n")
            for key in sorted(self.counts):
                fh.write(" ".join(map(str, key)) + f" : {self.counts[key]}\n")

    @classmethod
    def load(cls, path) -> "FailureSet":
        a = t = None
        meta: dict = {}
        counts: dict[tuple[int, ...], int] = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    parts = line[1:].split(None, 2)
                    if parts[0] == "a":
                        a = int(parts[1])
                    elif parts[0] == "t":
                        t = int(parts[1])
                    elif parts[0] == "meta":
                        meta[parts[1]] = json.loads(parts[2])
                    continue
                if ":" not in line:
                    raise BoundError(f"line {lineno}: expected 'levels : count'")
                head, tail = line.rsplit(":", 1)
                key = tuple(int(x) for x in head.split())
                counts[key] = int(tail)
        if a is None or t is None:
            raise BoundError("missing a/t header")
        return cls(a=a, t=t, counts=counts, meta=meta)


def _digest(da: DecoderGraphDA, config: DecoderConfig, rows, max_iter: int) -> str:
    blob = json.dumps(
        {
            "graph": da.digest_dict(),
            "decoder": config.digest_dict(),
            "rows": [{"name": r.name, "entries": list(map(list, r.entries))} for r in rows],
            "max_iterations": max_iter,
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _kernel_args(da: DecoderGraphDA, config: DecoderConfig, rows, max_iter: int):
    """Pack graph structure, schedules and quantizer tables for the
    compiled kernels."""
    g = da.base
    q = config.quantizer
    edges = [(v, j) for j in range(g.gamma) for v in g.check_vars[j]]
    edge_var = np.array([v for v, _ in edges], dtype=np.int64)
    check_ptr = np.zeros(g.gamma + 1, dtype=np.int64)
    for _, j in edges:
        check_ptr[j + 1] += 1
    check_ptr = np.cumsum(check_ptr)
    check_edges = np.arange(len(edges), dtype=np.int64)  # edges already check-major

    pmax = max(r.p for r in rows)
    U = np.full((len(rows), pmax, g.gamma), -1, dtype=np.int64)
    pcols = np.empty(len(rows), dtype=np.int64)
    stable = np.empty(len(rows), dtype=np.int64)
    for ri, r in enumerate(rows):
        if r.kappa != da.kappa:
            raise BoundError(f"row matrix {r.name}: kappa {r.kappa} != graph kappa {da.kappa}")
        ent = r.array()
        if ent.min() < 0 or ent.max() >= q.t:
            raise BoundError(f"row matrix {r.name}: level index out of range")
        for k, j in enumerate(da.aux_checks):
            U[ri, : r.p, j] = ent[k]
        pcols[ri] = r.p
        sf = r.p - 1
        while sf > 0 and np.array_equal(U[ri, sf - 1], U[ri, r.p - 1]):
            sf -= 1
        stable[ri] = sf

    lvl_units = q.units.astype(np.int64)
    max_abs = int(np.abs(lvl_units).max())
    sat = max_abs + 1
    dmax = max(
        max(len(vs) for vs in g.check_vars) + 1,
        max(len(cs) for cs in g.var_checks) + 1,
    )
    M = (dmax + 2) * sat
    # indexed by doubled unit sums (odd entries are never hit but harmless)
    s2 = np.arange(-2 * M, 2 * M + 1, dtype=np.int64)
    lut = q.quantize_units(s2).astype(np.int64)
    lut_off = np.int64(2 * M)

    if config.algorithm == "spa":
        tab = get_phi_tables(q, config.phi_zero)
        phi1 = tab.phi1_u.astype(np.int64)
        phi2 = tab.phi2_u.astype(np.int64)
        top_u = np.int64(tab.top_u)
        is_spa = True
    else:
        phi1 = np.zeros(q.t, dtype=np.int64)
        phi2 = np.zeros(q.t, dtype=np.int64)
        top_u = np.int64(lvl_units[-1])
        is_spa = False
    return dict(
        edge_var=edge_var,
        check_ptr=check_ptr,
        check_edges=check_edges,
        U=U,
        pcols=pcols,
        stable=stable,
        max_iter=np.int64(max_iter),
        is_spa=is_spa,
        lvl_units=lvl_units,
        phi1=phi1,
        phi2=phi2,
        top_u=top_u,
        sat=np.int64(sat),
        lut=lut,
        lut_off=lut_off,
    )


def _digits_of(idx: np.ndarray, t: int, a: int) -> np.ndarray:
    out = np.empty((idx.shape[0], a), dtype=np.int64)
    x = idx.copy()
    for i in range(a - 1, -1, -1):
        out[:, i] = x % t
        x //= t
    return out


def _key_pack(digits_sorted: np.ndarray, t: int) -> np.ndarray:
    key = np.zeros(digits_sorted.shape[0], dtype=np.int64)
    for i in range(digits_sorted.shape[1]):
        key = key * t + digits_sorted[:, i]
    return key


def _key_unpack(key: int, t: int, a: int) -> tuple[int, ...]:
    out = []
    for _ in range(a):
        out.append(key % t)
        key //= t
    return tuple(reversed(out))


def _reference_failing_mask(da, config, rows, xs, max_iter) -> np.ndarray:
    """Independent (vectorized, uncompiled) evaluation of the same
    pipeline; used to cross-check the compiled kernels."""
    g = da.base
    graph = TannerGraph(g.a, g.check_vars)
    dec = BatchDecoder(graph, config, aux_checks=list(da.aux_checks))
    failing = np.ones(xs.shape[0], dtype=bool)
    for r in rows:
        act = np.flatnonzero(failing)
        if act.size == 0:
            break
        conv, _, _ = dec.decode_batch(
            xs[act], u_schedule=r.schedule(), max_iterations=max_iter, stop_on="correct"
        )
        failing[act[conv]] = False
    return failing


def compute_failure_set(
    da: DecoderGraphDA,
    rows: list[RowMatrix],
    config: DecoderConfig,
    *,
    max_iterations: int | None = None,
    orbit_reduction: str | bool = "auto",
    chunk: int = 1 << 21,
    guard: int = 1 << 34,
    workers: int = 1,
    checkpoint=None,
    progress: bool = False,
    engine: str = "compiled",
) -> FailureSet:
    """Enumerate all t^a channel patterns against the row pipeline.

    ``orbit_reduction`` exploits a fully symmetric sub-graph (uniform
    external schedules on every check) by enumerating multisets only and
    weighting each by its permutation count.  ``guard`` caps the total
    decode budget; ``checkpoint`` names a JSON resume file.
    """
    q = config.quantizer
    t, a = q.t, da.base.a
    max_iter = max_iterations if max_iterations is not None else config.max_iterations
    digest = _digest(da, config, rows, max_iter)

    # orbit reduction is sound when the external schedule is identical on
    # every check, so any sub-graph automorphism preserves decodability
    uniform = set(da.aux_checks) == set(range(da.base.gamma)) and all(
        len(set(r.entries)) == 1 for r in rows
    )
    mode = "none"
    if orbit_reduction == "auto" or orbit_reduction is True:
        if uniform and is_fully_symmetric(da.base):
            mode = "multiset"
        elif uniform and a <= 12:
            group = automorphisms(da.base)
            if len(group) > 1:
                mode = "group"
        if orbit_reduction is True and mode == "none":
            raise BoundError("orbit reduction needs uniform schedules and symmetry")
    elif orbit_reduction in ("multiset", "group"):
        if not uniform:
            raise BoundError("orbit reduction needs uniform schedules on all checks")
        if orbit_reduction == "multiset" and not is_fully_symmetric(da.base):
            raise BoundError("multiset reduction needs a fully symmetric sub-graph")
        if orbit_reduction == "group":
            group = automorphisms(da.base)
        mode = orbit_reduction

    n_patterns = math.comb(t + a - 1, a) if mode == "multiset" else t**a
    if n_patterns * len(rows) > guard:
        raise BoundError(
            f"{n_patterns} patterns x {len(rows)} rows exceeds guard {guard}"
        )

    ka = _kernel_args(da, config, rows, max_iter)
    counts: dict[tuple[int, ...], int] = {}
    vectors: list[tuple[int, ...]] | None = [] if (a <= 4 and mode == "none") else None

    if mode == "multiset":
        reps = np.array(
            list(combinations_with_replacement(range(t), a)), dtype=np.int64
        )
        fact = [math.factorial(k) for k in range(a + 1)]
        mask = np.zeros(reps.shape[0], dtype=np.uint8)
        if engine == "compiled":
            _enum.mask_failures(reps, **ka, out_mask=mask)
        else:
            mask[:] = _reference_failing_mask(da, config, rows, reps, max_iter)
        for rep in reps[mask.astype(bool)]:
            key = tuple(int(x) for x in rep)
            orbit = math.factorial(a)
            for mult in Counter(key).values():
                orbit //= fact[mult]
            counts[key] = counts.get(key, 0) + orbit
    else:
        start = 0
        if checkpoint is not None:
            try:
                with open(checkpoint) as fh:
                    st = json.load(fh)
                if st.get("digest") == digest:
                    start = st["next"]
                    counts = {
                        tuple(map(int, k.split(","))): v for k, v in st["counts"].items()
                    }
            except (FileNotFoundError, json.JSONDecodeError):
                pass
        out_buf = np.empty(min(chunk, t**a), dtype=np.int64)
        cnt_buf = np.empty_like(out_buf)
        last_save = time.monotonic()
        perms = (
            np.array(group, dtype=np.int64) if mode == "group" else np.empty((0, a), np.int64)
        )
        while start < t**a:
            stop = min(start + chunk, t**a)
            if engine != "compiled":
                xs = _digits_of(np.arange(start, stop, dtype=np.int64), t, a)
                fmask = _reference_failing_mask(da, config, rows, xs, max_iter)
                fail_idx = np.arange(start, stop, dtype=np.int64)[fmask]
                fail_cnt = np.ones(fail_idx.shape[0], dtype=np.int64)
            elif mode == "group":
                nf = _enum.enum_failures_orbits(
                    start, stop, t, a, perms, **ka, out_idx=out_buf, out_cnt=cnt_buf
                )
                fail_idx, fail_cnt = out_buf[:nf], cnt_buf[:nf]
            else:
                nf = _enum.enum_failures(start, stop, t, a, **ka, out_idx=out_buf)
                fail_idx = out_buf[:nf]
                fail_cnt = np.ones(nf, dtype=np.int64)
            if fail_idx.size:
                dig = _digits_of(fail_idx, t, a)
                if vectors is not None:
                    vectors.extend(tuple(map(int, row)) for row in dig)
                keys, inverse = np.unique(_key_pack(np.sort(dig, axis=1), t), return_inverse=True)
                kcounts = np.bincount(inverse, weights=fail_cnt).astype(np.int64)
                for kk, cc in zip(keys, kcounts):
                    key = _key_unpack(int(kk), t, a)
                    counts[key] = counts.get(key, 0) + int(cc)
            start = stop
            now = time.monotonic()
            if checkpoint is not None and (now - last_save > 60 or start >= t**a):
                state = {
                    "digest": digest,
                    "next": start,
                    "counts": {",".join(map(str, k)): v for k, v in counts.items()},
                }
                tmp = str(checkpoint) + ".tmp"
                with open(tmp, "w") as fh:
                    json.dump(state, fh)
                os.replace(tmp, checkpoint)
                last_save = now
            if progress:
                done = start / t**a
                print(f"\renumeration {done:6.1%}", end="", file=sys.stderr, flush=True)
        if progress:
            print(file=sys.stderr)

    meta = {
        "digest": digest,
        "rows": [r.name for r in rows],
        "algorithm": config.algorithm,
        "max_iterations": max_iter,
        "orbit_reduction": mode,
        "patterns": int(t**a),
    }
    return FailureSet(a=a, t=t, counts=counts, meta=meta, vectors=vectors)


def lambda_hat(fs: FailureSet, quantizer: Quantizer, channel: ChannelModel) -> float:
    """Probability that the channel pattern on the sub-graph variables
    lands in the failure set (all-zero transmission)."""
    if quantizer.t != fs.t:
        raise BoundError("quantizer does not match failure set")
    p = quantizer.level_probabilities(channel)
    terms = []
    for key, c in fs.counts.items():
        prod = float(c)
        for k in key:
            prod *= p[k]
        terms.append(prod)
    return math.fsum(terms)


def lambda_hat_from_vectors(
    vectors, quantizer: Quantizer, channel: ChannelModel
) -> float:
    p = quantizer.level_probabilities(channel)
    terms = []
    for vec in vectors:
        prod = 1.0
        for k in vec:
            prod *= p[k]
        terms.append(prod)
    return math.fsum(terms)


def fer_estimate(lam: float, multiplicity: int) -> float:
    """Error-floor estimate N * lambda-hat, clamped to a probability."""
    return min(1.0, multiplicity * lam)


@dataclass
class BoundCurve:
    ebn0_db: np.ndarray
    lam: np.ndarray
    fer: np.ndarray
    rate: float
    multiplicity: int

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("ebn0_db,lambda_hat,fer_estimate\n")
            for e, l, f in zip(self.ebn0_db, self.lam, self.fer):
                fh.write(f"{e:.6g},{l:.12e},{f:.12e}\n")


def bound_curve(
    fs: FailureSet,
    quantizer: Quantizer,
    ebn0_grid,
    rate: float,
    multiplicity: int,
) -> BoundCurve:
    ebn0 = np.asarray(ebn0_grid, dtype=float)
    lam = np.array(
        [lambda_hat(fs, quantizer, ChannelModel(snr_to_sigma(e, rate))) for e in ebn0]
    )
    fer = np.minimum(1.0, multiplicity * lam)
    return BoundCurve(ebn0_db=ebn0, lam=lam, fer=fer, rate=rate, multiplicity=multiplicity)


def rate_shift_db(rate_from: float, rate_to: float) -> float:
    """A curve computed at one code rate maps to another by a horizontal
    Eb/N0 shift of 10 log10(r_to / r_from) dB (same sigma grid)."""
    return 10.0 * math.log10(rate_to / rate_from)


def exact_failure_set(
    da: DecoderGraphDA,
    config: DecoderConfig,
    p: int,
    guard_rows: int = 1 << 24,
    guard_patterns: int = 1 << 16,
) -> FailureSet:
    """Ground-truth failure set over ALL t^(kappa*p) external schedules:
    a pattern fails only if no schedule whatsoever corrects it within p
    iterations.  Exponential; guarded to toy sizes.  Uses the vectorized
    reference decoder, independent of the compiled enumeration path."""
    q = config.quantizer
    t, a, kappa = q.t, da.base.a, da.kappa
    n_rows = t ** (kappa * p)
    if n_rows > guard_rows:
        raise BoundError(f"t^(kappa*p) = {n_rows} exceeds guard {guard_rows}")
    if t**a > guard_patterns:
        raise BoundError(f"t^a = {t**a} exceeds guard {guard_patterns}")
    graph = TannerGraph(da.base.a, da.base.check_vars)
    dec = BatchDecoder(graph, config, aux_checks=list(da.aux_checks))
    xs = _digits_of(np.arange(t**a, dtype=np.int64), t, a)
    failing = np.ones(t**a, dtype=bool)
    for widx in range(n_rows):
        act = np.flatnonzero(failing)
        if act.size == 0:
            break
        sched = _digits_of(np.array([widx], dtype=np.int64), t, kappa * p)[0]
        sched = sched.reshape(kappa, p).T.copy()  # (p, kappa)
        conv, _, _ = dec.decode_batch(
            xs[act], u_schedule=sched, max_iterations=p, stop_on="correct",
            detect_fixed_point=False,
        )
        failing[act[conv]] = False
    counts: dict[tuple[int, ...], int] = {}
    vectors = [tuple(map(int, row)) for row in xs[failing]]
    for vec in vectors:
        key = tuple(sorted(vec))
        counts[key] = counts.get(key, 0) + 1
    meta = {"exact": True, "p": p, "rows": n_rows}
    return FailureSet(a=a, t=t, counts=counts, meta=meta, vectors=vectors)
