"""Full-graph Monte-Carlo FER simulation (all-zero codeword, BPSK/AWGN).

Noise is drawn from a counter-based generator keyed by (seed, SNR point,
block index), and blocks are always consumed in index order, so results
are bit-for-bit reproducible regardless of the worker count used to
decode them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from .decoder import BatchDecoder, DecoderConfig, TannerGraph
from .quantizer import ChannelModel, snr_to_sigma

SUPPORT_CAP = 16


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimulationPlan:
    ebn0_db: tuple[float, ...]
    seed: int = 0
    target_errors: int = 100
    max_frames: int = 100_000_000
    block_size: int = 4096

    def __post_init__(self):
        if self.target_errors < 1 or self.max_frames < 1 or self.block_size < 1:
            raise SimulationError("plan limits must be positive")


@dataclass
class FERPoint:
    ebn0_db: float
    sigma: float
    frames: int
    errors: int
    fer: float
    ci_low: float
    ci_high: float
    support_hist: dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_counts(cls, ebn0_db, sigma, frames, errors, support_hist):
        fer = errors / frames if frames else 0.0
        lo, hi = clopper_pearson(errors, frames)
        return cls(ebn0_db, sigma, frames, errors, fer, lo, hi, dict(support_hist))


def clopper_pearson(errors: int, frames: int, confidence: float = 0.95):
    """Exact binomial confidence interval."""
    if frames == 0:
        return 0.0, 1.0
    alpha = 1.0 - confidence
    lo = 0.0 if errors == 0 else float(beta.ppf(alpha / 2, errors, frames - errors + 1))
    hi = 1.0 if errors == frames else float(beta.isf(alpha / 2, errors + 1, frames - errors))
    return lo, hi


def noise_block(sigma: float, n: int, seed: int, point: int, block: int, size: int) -> np.ndarray:
    """LLR samples for one block, from a Philox stream keyed by indices."""
    key = [np.uint64(seed), np.uint64((point << 32) + block)]
    rng = np.random.Generator(np.random.Philox(key=key))
    ch = ChannelModel(sigma)
    return ch.llr_mean + ch.llr_std * rng.standard_normal((size, n))


def simulate_point(
    graph: TannerGraph,
    config: DecoderConfig,
    ebn0_db: float,
    rate: float,
    plan: SimulationPlan,
    point_index: int = 0,
    workers: int = 1,
    progress=None,
) -> FERPoint:
    """Run blocks until the error target or frame budget is hit.

    A frame error is any nonzero hard decision at stop time (including
    convergence to a wrong codeword)."""
    sigma = snr_to_sigma(ebn0_db, rate)
    dec = BatchDecoder(graph, config)
    q = config.quantizer
    frames = errors = 0
    hist: dict[int, int] = {}

    def run_block(b: int):
        llr = noise_block(sigma, graph.n, plan.seed, point_index, b, plan.block_size)
        r_idx = q.quantize(llr)
        _, _, bits = dec.decode_batch(r_idx, stop_on="syndrome", detect_fixed_point=False)
        weights = bits.sum(axis=1)
        return weights[weights > 0]

    block = 0
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        pending = {}
        while True:
            while len(pending) < max(1, workers) and block - min(pending, default=block) < 4 * max(1, workers):
                pending[block] = pool.submit(run_block, block)
                block += 1
            first = min(pending)
            bad = pending.pop(first).result()
            frames += plan.block_size
            errors += bad.size
            for w in bad:
                key = int(w) if w <= SUPPORT_CAP else SUPPORT_CAP + 1
                hist[key] = hist.get(key, 0) + 1
            if progress is not None:
                progress(frames, errors)
            if errors >= plan.target_errors or frames >= plan.max_frames:
                for fut in pending.values():
                    fut.cancel()
                break
    return FERPoint.from_counts(ebn0_db, sigma, frames, errors, hist)


def run(
    graph: TannerGraph,
    config: DecoderConfig,
    rate: float,
    plan: SimulationPlan,
    workers: int = 1,
    progress=None,
) -> list[FERPoint]:
    return [
        simulate_point(graph, config, e, rate, plan, point_index=i, workers=workers,
                       progress=progress)
        for i, e in enumerate(plan.ebn0_db)
    ]


def points_to_csv(points: list[FERPoint], path) -> None:
    with open(path, "w") as fh:
        fh.write("ebn0_db,sigma,frames,errors,fer,ci_low,ci_high,support_hist\n")
        for p in points:
            hist = ";".join(f"{k}={v}" for k, v in sorted(p.support_hist.items()))
            fh.write(
                f"{p.ebn0_db:.6g},{p.sigma:.9g},{p.frames},{p.errors},"
                f"{p.fer:.9e},{p.ci_low:.9e},{p.ci_high:.9e},{hist}\n"
            )
