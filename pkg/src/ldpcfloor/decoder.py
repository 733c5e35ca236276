"""Quantized message-passing decoder kernels (SPA and MSA).

Messages are level indices into a :class:`~ldpcfloor.quantizer.Quantizer`.
All intermediate sums are taken exactly, as integers in units of the
quantizer step, and requantized onto the level grid only where the update
rules call for it.  The SPA check rule composes two quantized tables,
phi1 = Q(phi(.)) and phi2 = Q(phi_inv(Q(.))), with phi(x) =
log((e^x+1)/(e^x-1)); phi(0) is undefined and replaced by a configured
constant.  Both tables are precomputed per (quantizer, phi_zero) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quantizer import Quantizer


class DecoderError(ValueError):
    pass


def phi(x: float, phi_zero: float | None = None) -> float:
    """The check-node kernel log((e^x+1)/(e^x-1)), self-inverse on (0, inf).

    For x <= 0 the function is undefined; if ``phi_zero`` is given it is
    returned instead, otherwise a ValueError is raised.
    """
    if x <= 0.0:
        if phi_zero is None:
            raise DecoderError("phi undefined for x <= 0")
        return phi_zero
    # -log(tanh(x/2)), written to stay accurate for large x
    e = math.exp(-x)
    return math.log1p(e) - math.log1p(-e)


@dataclass(frozen=True)
class DecoderConfig:
    algorithm: str  # "spa" | "msa"
    quantizer: Quantizer
    phi_zero: float = 4.25
    max_iterations: int = 200

    def __post_init__(self):
        if self.algorithm not in ("spa", "msa"):
            raise DecoderError(f"unknown algorithm {self.algorithm!r}")
        if self.max_iterations < 1:
            raise DecoderError("max_iterations must be >= 1")
        if not self.phi_zero > 0:
            raise DecoderError("phi_zero must be positive")

    def digest_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "quantizer": self.quantizer.config_dict(),
            "phi_zero": self.phi_zero,
            "max_iterations": self.max_iterations,
        }


class PhiTables:
    """Precomputed quantized phi tables for one (quantizer, phi_zero) pair.

    phi1_u[k] is the quantized phi of level k's magnitude, in step units.
    phi2_u[k] is the quantized phi of level k's value (the outer half of
    the check update, applied to the requantized phi1 sum).  Magnitude
    outputs are floored at the smallest positive level so a check message
    can never lose its sign.
    """

    def __init__(self, quantizer: Quantizer, phi_zero: float):
        self.quantizer = quantizer
        self.phi_zero = phi_zero
        q = quantizer
        self.min_pos_u = int(q.units[q.min_positive_index])
        self.top_u = int(q.units[-1])
        phi1 = np.empty(q.t, dtype=np.int64)
        phi2 = np.empty(q.t, dtype=np.int64)
        for k in range(q.t):
            mag = abs(float(q.levels[k]))
            phi1[k] = self.mag_quantize_u(phi(mag, phi_zero))
            val = float(q.levels[k])
            if val > 0:
                phi2[k] = self.mag_quantize_u(phi(val, phi_zero))
            else:
                # a vanished phi1 sum inverts to +inf; saturate high
                phi2[k] = self.top_u
        self.phi1_u = phi1
        self.phi2_u = phi2

    def mag_quantize_u(self, x: float) -> int:
        q = self.quantizer
        u = int(q.units[int(q.quantize(x))])
        return max(u, self.min_pos_u)


@lru_cache(maxsize=32)
def get_phi_tables(quantizer: Quantizer, phi_zero: float) -> PhiTables:
    return PhiTables(quantizer, phi_zero)


def _requantize_units(quantizer: Quantizer, units):
    """Requantize exact unit sums onto the level grid (ties to lower)."""
    return quantizer.quantize_units(2 * np.asarray(units))


def spa_check_update(incoming: list[int], quantizer: Quantizer, phi_zero: float) -> int:
    """Quantized SPA check rule on the already-excluded incoming messages."""
    if len(incoming) == 0:
        raise DecoderError("check update needs at least one incoming message")
    tab = get_phi_tables(quantizer, phi_zero)
    units = quantizer.units[list(incoming)]
    neg = int(np.sum(units < 0)) % 2
    s = int(np.sum(tab.phi1_u[list(incoming)]))
    inner_idx = int(_requantize_units(quantizer, s))
    mag_u = int(tab.phi2_u[inner_idx])
    return int(_requantize_units(quantizer, -mag_u if neg else mag_u))


def msa_check_update(incoming: list[int], quantizer: Quantizer) -> int:
    """Min-sum check rule: sign product, minimum magnitude."""
    if len(incoming) == 0:
        raise DecoderError("check update needs at least one incoming message")
    units = quantizer.units[list(incoming)]
    neg = int(np.sum(units < 0)) % 2
    mag = int(np.min(np.abs(units)))
    return int(_requantize_units(quantizer, -mag if neg else mag))


def variable_update(channel_idx: int, incoming: list[int], quantizer: Quantizer) -> int:
    """Requantized exact sum of channel and non-excluded check messages."""
    s = int(quantizer.units[channel_idx])
    s += int(np.sum(quantizer.units[list(incoming)], dtype=np.int64)) if len(incoming) else 0
    return int(_requantize_units(quantizer, s))


def hard_decision(channel_idx: int, incoming: list[int], quantizer: Quantizer) -> int:
    """Bit estimate: 0 iff the exact (unrequantized) total is positive."""
    s = int(quantizer.units[channel_idx])
    s += int(np.sum(quantizer.units[list(incoming)], dtype=np.int64)) if len(incoming) else 0
    return 0 if s > 0 else 1


class TannerGraph:
    """Bipartite variable/check adjacency of a parity-check matrix."""

    def __init__(self, n: int, check_neighbors: list[list[int]]):
        self.n = n
        self.m = len(check_neighbors)
        self.check_neighbors = [list(c) for c in check_neighbors]
        self.var_neighbors: list[list[int]] = [[] for _ in range(n)]
        for j, vs in enumerate(self.check_neighbors):
            if not vs:
                raise DecoderError(f"check {j} has degree 0")
            if len(set(vs)) != len(vs):
                raise DecoderError(f"repeated edge at check {j}")
            for v in vs:
                if not 0 <= v < n:
                    raise DecoderError(f"check {j}: variable {v} out of range")
                self.var_neighbors[v].append(j)
        for v in range(n):
            if not self.var_neighbors[v]:
                raise DecoderError(f"variable {v} has degree 0")
        self.edges = [(v, j) for j in range(self.m) for v in self.check_neighbors[j]]

    @property
    def edge_count(self) -> int:
        return len(self.edges)


@dataclass
class DecodeResult:
    converged: bool
    iterations_used: int
    hard_decisions: np.ndarray
    per_iteration_hard_decisions: list[np.ndarray] | None = None


# saturation stand-in for "min over an empty set"; large but overflow-safe
_EMPTY_MIN = np.int64(1) << 40


class BatchDecoder:
    """Vectorized flooding-schedule decoder over batches of inputs.

    Also drives the absorbing-set decoder: ``aux_checks`` names checks
    that receive one auxiliary external message per iteration, supplied
    at decode time as a (columns x kappa) schedule of level indices
    (clamped to the last column beyond its width).  A check update with
    no incoming messages at all saturates to the top positive level.
    """

    def __init__(self, graph: TannerGraph, config: DecoderConfig, aux_checks: list[int] | None = None):
        self.graph = graph
        self.config = config
        q = config.quantizer
        self.q = q
        self.aux_checks = list(aux_checks) if aux_checks else []
        if len(set(self.aux_checks)) != len(self.aux_checks):
            raise DecoderError("duplicate auxiliary check")
        for j in self.aux_checks:
            if not 0 <= j < graph.m:
                raise DecoderError(f"auxiliary check {j} out of range")

        E = graph.edge_count
        self.edge_var = np.array([v for v, _ in graph.edges], dtype=np.int64)
        self.edge_check = np.array([j for _, j in graph.edges], dtype=np.int64)
        cdeg = np.array([len(c) for c in graph.check_neighbors], dtype=np.int64)
        vdeg = np.array([len(v) for v in graph.var_neighbors], dtype=np.int64)
        self.check_deg = cdeg
        self.var_deg = vdeg
        self.ce = np.full((graph.m, int(cdeg.max())), 0, dtype=np.int64)
        self.ce_mask = np.zeros_like(self.ce, dtype=bool)
        self.ve = np.full((graph.n, int(vdeg.max())), 0, dtype=np.int64)
        self.ve_mask = np.zeros_like(self.ve, dtype=bool)
        pos_c = np.zeros(graph.m, dtype=np.int64)
        pos_v = np.zeros(graph.n, dtype=np.int64)
        for e in range(E):
            v, j = graph.edges[e]
            self.ce[j, pos_c[j]] = e
            self.ce_mask[j, pos_c[j]] = True
            pos_c[j] += 1
            self.ve[v, pos_v[v]] = e
            self.ve_mask[v, pos_v[v]] = True
            pos_v[v] += 1
        self.tables = get_phi_tables(q, config.phi_zero) if config.algorithm == "spa" else None
        self.lvl_units = q.units.astype(np.int64)
        self.check_of_aux = np.array(self.aux_checks, dtype=np.int64)

    def _check_update(self, v2c_idx, u_idx):
        """One flooding check update; returns c2v level indices (B, E)."""
        q = self.q
        B = v2c_idx.shape[0]
        m, dmax = self.ce.shape
        mask = self.ce_mask[None, :, :]
        gathered = v2c_idx[:, self.ce]  # (B, m, dmax), garbage where masked out
        units = np.where(mask, self.lvl_units[gathered], 0)
        neg = (units < 0) & mask
        parity = np.bitwise_xor.reduce(neg.astype(np.int8), axis=2)  # (B, m)
        has_aux = len(self.aux_checks) > 0
        if has_aux:
            u_units = self.lvl_units[u_idx]  # (B, kappa)
            u_mag = np.full((B, m), _EMPTY_MIN, dtype=np.int64)
            u_mag[:, self.check_of_aux] = np.abs(u_units)
            u_neg = np.zeros((B, m), dtype=np.int8)
            u_neg[:, self.check_of_aux] = (u_units < 0).astype(np.int8)
            parity = parity ^ u_neg

        if self.config.algorithm == "msa":
            mag = np.where(mask, np.abs(units), _EMPTY_MIN)
            amin = np.argmin(mag, axis=2)
            min1 = np.take_along_axis(mag, amin[:, :, None], axis=2)[:, :, 0]
            tmp = mag.copy()
            np.put_along_axis(tmp, amin[:, :, None], _EMPTY_MIN, axis=2)
            min2 = np.min(tmp, axis=2) if dmax > 1 else np.full_like(min1, _EMPTY_MIN)
            if has_aux:
                min1 = np.minimum(min1, u_mag)
                min2 = np.minimum(min2, u_mag)
            pos = np.arange(dmax)
            is_amin = pos[None, None, :] == amin[:, :, None]
            excl = np.where(is_amin, min2[:, :, None], min1[:, :, None])
            excl = np.minimum(excl, _EMPTY_MIN)
            sign_neg = (parity[:, :, None] ^ neg.astype(np.int8)).astype(bool)
            out_units = np.where(sign_neg, -excl, excl)
            out_idx_pad = q.quantize_units(2 * out_units)
        else:
            phi1 = np.where(mask, self.tables.phi1_u[gathered], 0)
            total = phi1.sum(axis=2)
            if has_aux:
                u_phi1 = np.zeros((B, m), dtype=np.int64)
                u_phi1[:, self.check_of_aux] = self.tables.phi1_u[u_idx]
                total = total + u_phi1
            excl_sum = total[:, :, None] - phi1  # (B, m, dmax)
            inner_idx = q.quantize_units(2 * excl_sum)
            mag = self.tables.phi2_u[inner_idx]
            # an empty phi1 sum inverts to +inf: saturate to the top level
            mag = np.where(excl_sum > 0, mag, self.tables.top_u)
            sign_neg = (parity[:, :, None] ^ neg.astype(np.int8)).astype(bool)
            out_units = np.where(sign_neg, -mag, mag)
            out_idx_pad = q.quantize_units(2 * out_units)
        c2v_idx = np.empty_like(v2c_idx)
        c2v_idx[:, self.ce[self.ce_mask]] = out_idx_pad[:, self.ce_mask]
        return c2v_idx

    def _var_totals(self, c2v_idx):
        units = np.where(self.ve_mask[None, :, :], self.lvl_units[c2v_idx[:, self.ve]], 0)
        return units.sum(axis=2)  # (B, n)

    def _syndrome_ok(self, bits):
        gb = np.where(self.ce_mask[None, :, :], bits[:, self.edge_var[self.ce]], 0)
        par = np.bitwise_xor.reduce(gb.astype(np.int8), axis=2)
        return ~par.any(axis=1)

    def decode_batch(
        self,
        r_idx: np.ndarray,
        u_schedule: np.ndarray | None = None,
        max_iterations: int | None = None,
        stop_on: str = "syndrome",
        detect_fixed_point: bool = True,
    ):
        """Decode a (B, n) batch of channel level indices.

        ``stop_on`` is "syndrome" (full-graph: stop when the hard decision
        is a codeword) or "correct" (absorbing-set: stop only when every
        bit is correct).  Returns (converged, iterations, bits); frames
        that hit a message fixed point without converging keep
        iterations = max and their frozen decisions.
        """
        q = self.q
        r_idx = np.asarray(r_idx, dtype=np.int64)
        B, n = r_idx.shape
        if n != self.graph.n:
            raise DecoderError("channel vector length mismatch")
        p = max_iterations if max_iterations is not None else self.config.max_iterations
        if self.aux_checks:
            if u_schedule is None:
                raise DecoderError("auxiliary checks need a u schedule")
            u_schedule = np.asarray(u_schedule, dtype=np.int64)
            if u_schedule.ndim != 2 or u_schedule.shape[1] != len(self.aux_checks):
                raise DecoderError("u schedule must be (columns, kappa)")
            stable_from = u_schedule.shape[0] - 1
            while stable_from > 0 and np.array_equal(u_schedule[stable_from - 1], u_schedule[-1]):
                stable_from -= 1
        else:
            stable_from = 0

        converged = np.zeros(B, dtype=bool)
        iterations = np.full(B, p, dtype=np.int64)
        bits_out = np.zeros((B, n), dtype=np.uint8)
        active = np.arange(B)
        v2c = r_idx[:, self.edge_var]  # first iteration passes the channel value
        ra = self.lvl_units[r_idx]
        prev = None
        for it in range(1, p + 1):
            if self.aux_checks:
                col = min(it - 1, u_schedule.shape[0] - 1)
                u_idx = np.broadcast_to(u_schedule[col], (v2c.shape[0], len(self.aux_checks)))
            else:
                u_idx = None
            c2v = self._check_update(v2c, u_idx)
            tot = self._var_totals(c2v)
            bits = ((ra + tot) <= 0).astype(np.uint8)
            if stop_on == "syndrome":
                done = self._syndrome_ok(bits)
            else:
                done = ~bits.any(axis=1)
            fixed = np.zeros(v2c.shape[0], dtype=bool)
            if detect_fixed_point and prev is not None and it >= stable_from + 2:
                fixed = (v2c == prev).all(axis=1) & ~done
            stopping = done | fixed
            last = it == p
            if last:
                stopping = np.ones_like(stopping)
            if stopping.any():
                idx = active[stopping]
                converged[idx] = done[stopping]
                iterations[active[done]] = it
                bits_out[idx] = bits[stopping]
                keep = ~stopping
                active = active[keep]
                if active.size == 0:
                    break
                v2c, c2v, tot, ra = v2c[keep], c2v[keep], tot[keep], ra[keep]
                if prev is not None:
                    prev = prev[keep]
            prev = v2c
            own = self.lvl_units[c2v]
            v2c = q.quantize_units(2 * (ra[:, self.edge_var] + tot[:, self.edge_var] - own))
        return converged, iterations, bits_out


def decode(
    graph: TannerGraph,
    channel_levels,
    config: DecoderConfig,
    record_iterations: bool = False,
) -> DecodeResult:
    """Decode a single frame on the full Tanner graph (flooding schedule)."""
    channel_levels = np.asarray(channel_levels, dtype=np.int64)
    if channel_levels.shape != (graph.n,):
        raise DecoderError("channel vector length mismatch")
    dec = BatchDecoder(graph, config)
    conv, iters, bits = dec.decode_batch(channel_levels[None, :], detect_fixed_point=False)
    trace = None
    if record_iterations:
        trace = []
        for k in range(1, int(iters[0]) + 1):
            _, _, b = dec.decode_batch(channel_levels[None, :], max_iterations=k, detect_fixed_point=False)
            trace.append(b[0].copy())
    return DecodeResult(bool(conv[0]), int(iters[0]), bits[0], trace)
