"""Fixed-point message quantizers and the quantized AWGN channel model.

A uniform quantizer Q_{q1.q2} spends one sign bit, q1 integer bits and q2
fractional bits, giving t = 2^(q1+q2+1) levels from -2^q1 up to
2^q1 - 2^-q2 with step 2^-q2.  The quasi-uniform quantizer keeps the
uniform levels of a q-bit core and adds one extra bit worth of
exponentially growing magnitude levels on each side, extending the range
without losing inner precision.

All level values are kept on the integer grid of the step size (stored as
``units``), so message arithmetic downstream can be done exactly in
integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc


class QuantizerError(ValueError):
    pass


def _mid_thresholds(levels: np.ndarray) -> np.ndarray:
    return (levels[:-1] + levels[1:]) / 2.0


@dataclass(frozen=True)
class Quantizer:
    """A finite, strictly increasing set of representable LLR values.

    ``levels`` holds the values in ascending order; ``thresholds`` the t-1
    decision boundaries, placed midway between adjacent levels.  Inputs at
    a threshold map to the lower level.  ``delta`` is the inner step size;
    every level is an exact integer multiple of it (``units``).
    """

    kind: str
    levels: np.ndarray
    delta: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=np.float64)
        if lv.ndim != 1 or lv.size < 2:
            raise QuantizerError("need at least two levels")
        if not np.all(np.diff(lv) > 0):
            raise QuantizerError("levels must be strictly increasing")
        units = np.round(lv / self.delta).astype(np.int64)
        if not np.allclose(units * self.delta, lv, rtol=0, atol=1e-12):
            raise QuantizerError("levels must sit on the delta grid")
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "units", units)
        # thresholds in level units, doubled so midpoints stay integral
        object.__setattr__(self, "thresholds", _mid_thresholds(lv))
        object.__setattr__(self, "thresholds2u", (units[:-1] + units[1:]).astype(np.int64))

    # populated in __post_init__
    units: np.ndarray = field(init=False, default=None)
    thresholds: np.ndarray = field(init=False, default=None)
    thresholds2u: np.ndarray = field(init=False, default=None)

    @property
    def t(self) -> int:
        return self.levels.size

    def quantize(self, x):
        """Map real LLR(s) to level indices; ties go to the lower level."""
        return np.searchsorted(self.thresholds, x, side="left")

    def quantize_units(self, s2):
        """Quantize exact doubled-unit sums (integers) to level indices."""
        return np.searchsorted(self.thresholds2u, s2, side="left")

    def value(self, idx):
        return self.levels[idx]

    def index_of_value(self, value: float) -> int:
        idx = int(self.quantize(value))
        if not math.isclose(self.levels[idx], value, rel_tol=0, abs_tol=1e-12):
            raise QuantizerError(f"{value} is not a quantizer level")
        return idx

    @property
    def min_positive_index(self) -> int:
        pos = np.nonzero(self.units > 0)[0]
        if pos.size == 0:
            raise QuantizerError("quantizer has no positive level")
        return int(pos[0])

    def level_probabilities(self, channel: "ChannelModel") -> np.ndarray:
        """Per-level channel probabilities Pr(s = level_k) on the AWGN
        channel under the all-zero-codeword convention.

        Uses the complementary error function with the LLR statistics
        mean 2/sigma^2 and std 2/sigma; the quantizer thresholds are the
        integration boundaries.
        """
        m = channel.llr_mean
        denom = channel.llr_std * math.sqrt(2.0)
        tail = 0.5 * erfc((self.thresholds - m) / denom)  # Pr(llr > b_k)
        p = np.empty(self.t, dtype=np.float64)
        p[0] = 1.0 - tail[0]
        p[1:-1] = tail[:-1] - tail[1:]
        p[-1] = tail[-1]
        return np.clip(p, 0.0, 1.0)

    def config_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    def __eq__(self, other):
        return (
            isinstance(other, Quantizer)
            and self.kind == other.kind
            and self.params == other.params
            and np.array_equal(self.levels, other.levels)
        )

    def __hash__(self):
        return hash((self.kind, tuple(self.units), self.delta))


def uniform_quantizer(q1: int, q2: int) -> Quantizer:
    """Uniform Q_{q1.q2} quantizer with t = 2^(q1+q2+1) levels."""
    if q1 < 0 or q2 < 0:
        raise QuantizerError("q1 and q2 must be nonnegative")
    delta = 2.0 ** (-q2)
    t = 2 ** (q1 + q2 + 1)
    lo = -(2.0 ** q1)
    levels = lo + delta * np.arange(t)
    return Quantizer(kind="uniform", levels=levels, delta=delta, params={"q1": q1, "q2": q2})


def quasi_uniform_quantizer(q1: int, q2: int, growth: float = 2.0, ext_count: int | None = None) -> Quantizer:
    """Quasi-uniform quantizer: a uniform q-bit core plus ``ext_count``
    extended magnitude levels per sign, magnitudes growing by ``growth``.

    The default ext_count doubles the level count, i.e. spends exactly one
    extra bit on range.  Extended magnitudes must land on the core grid.
    """
    inner = uniform_quantizer(q1, q2)
    if growth <= 1.0:
        raise QuantizerError("growth must exceed 1")
    if ext_count is None:
        ext_count = inner.t // 2
    if ext_count < 0:
        raise QuantizerError("ext_count must be nonnegative")
    if ext_count == 0:
        return Quantizer(
            kind="quasi-uniform",
            levels=inner.levels,
            delta=inner.delta,
            params={"q1": q1, "q2": q2, "growth": growth, "ext_count": 0},
        )
    inner_max = inner.levels[-1]
    ext = inner_max * growth ** np.arange(1, ext_count + 1)
    levels = np.concatenate([-ext[::-1], inner.levels, ext])
    return Quantizer(
        kind="quasi-uniform",
        levels=levels,
        delta=inner.delta,
        params={"q1": q1, "q2": q2, "growth": growth, "ext_count": ext_count},
    )


def quantizer_from_config(cfg: dict) -> Quantizer:
    kind = cfg.get("kind")
    if kind == "uniform":
        return uniform_quantizer(int(cfg["q1"]), int(cfg["q2"]))
    if kind == "quasi-uniform":
        return quasi_uniform_quantizer(
            int(cfg["q1"]),
            int(cfg["q2"]),
            growth=float(cfg.get("growth", 2.0)),
            ext_count=None if cfg.get("ext_count") is None else int(cfg["ext_count"]),
        )
    raise QuantizerError(f"unknown quantizer kind {kind!r}")


@dataclass(frozen=True)
class ChannelModel:
    """BPSK/AWGN channel at noise standard deviation sigma.

    Under the all-zero-codeword convention the unquantized LLRs are
    Gaussian with mean 2/sigma^2 and standard deviation 2/sigma.
    """

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise QuantizerError("sigma must be positive")

    @property
    def llr_mean(self) -> float:
        return 2.0 / self.sigma ** 2

    @property
    def llr_std(self) -> float:
        return 2.0 / self.sigma


def snr_to_sigma(ebn0_db: float, rate: float = 1.0) -> float:
    """Noise sigma for a given Eb/N0 (dB) and code rate (sigma^2 = 1/(2 R Eb/N0))."""
    if not 0.0 < rate <= 1.0:
        raise QuantizerError("rate must be in (0, 1]")
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    return 1.0 / math.sqrt(2.0 * rate * ebn0)
