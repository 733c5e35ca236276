"""End-to-end acceptance gate.

Each test prints one PASS/FAIL line (visible with ``pytest -v`` as the
test verdict, and echoed to stderr for plain runs).  The heavy (6,0)
failure-set enumerations are shared across criteria through a
session-scoped fixture; set the LDPCFLOOR_CACHE environment variable to
a writable directory to reuse them between runs (entries are keyed and
validated by configuration digest).
"""

import math
import os
import sys

import numpy as np
import pytest
import yaml
from scipy.stats import norm

from ldpcfloor import cli
from ldpcfloor.absorbing import build_decoder_graph, fixture
from ldpcfloor.bounds import (
    FailureSet,
    bound_curve,
    build_w_inc,
    build_w_max,
    compute_failure_set,
    exact_failure_set,
    fer_estimate,
    lambda_hat,
    rate_shift_db,
    _digest,
)
from ldpcfloor.codes import array_code, find_weight_w_codewords
from ldpcfloor.decoder import (
    DecoderConfig,
    TannerGraph,
    msa_check_update,
    phi,
    spa_check_update,
)
from ldpcfloor.quantizer import (
    ChannelModel,
    quasi_uniform_quantizer,
    snr_to_sigma,
    uniform_quantizer,
)
from ldpcfloor.simulate import SimulationPlan, simulate_point


def report(num: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line, file=sys.stderr)
    assert ok, line


def cached_failure_set(da, rows, config, **kwargs) -> FailureSet:
    """Compute a failure set, reusing a digest-validated cache entry if
    LDPCFLOOR_CACHE points at a directory."""
    digest = _digest(da, config, rows, config.max_iterations)
    cache = os.environ.get(cli.CACHE_ENV)
    if cache:
        path = os.path.join(cache, f"{digest}.fs")
        if os.path.exists(path):
            fs = FailureSet.load(path)
            if fs.meta.get("digest") == digest:
                return fs
    fs = compute_failure_set(da, rows, config, **kwargs)
    if cache:
        os.makedirs(cache, exist_ok=True)
        fs.save(os.path.join(cache, f"{digest}.fs"))
    return fs


# ---------------------------------------------------------------------------
# shared heavy artifacts: (6,0) fixture, MSA, 5-bit quasi-uniform, 200 iters
# ---------------------------------------------------------------------------

QUASI = quasi_uniform_quantizer(2, 1)
MSA200 = DecoderConfig("msa", QUASI, max_iterations=200)


@pytest.fixture(scope="session")
def da60():
    return build_decoder_graph(fixture("as_6_0_g8"))


@pytest.fixture(scope="session")
def fs60_row1(da60):
    rows = [build_w_max(da60.kappa, QUASI)]
    return cached_failure_set(da60, rows, MSA200, progress=False)


@pytest.fixture(scope="session")
def fs60_row3(da60):
    rows = [build_w_max(da60.kappa, QUASI), build_w_inc(da60.kappa, QUASI, h=3)]
    return cached_failure_set(da60, rows, MSA200, progress=False)


# ---------------------------------------------------------------------------
# 1. quantizer conformance
# ---------------------------------------------------------------------------

def test_criterion_01_quantizer_conformance():
    q = uniform_quantizer(3, 2)
    ok = len(q.levels) == 64
    ok &= np.allclose(q.levels, np.arange(-8.0, 8.0, 0.25), atol=0)
    ok &= q.delta == 0.25
    # every level is its own quantization, exactly
    ok &= all(q.value(q.quantize(v)) == v for v in q.levels)
    rng = np.random.default_rng(13)
    xs = rng.uniform(-12, 12, 100_000)
    idx = q.quantize(xs)
    # independent nearest-level oracle with midpoint thresholds
    # (ties at a midpoint resolve to the lower level)
    dist = np.abs(xs[:, None] - q.levels[None, :])
    oracle = np.argmin(dist, axis=1)
    ok &= bool(np.array_equal(idx, oracle))
    report(1, ok, "Q_{3.2}: 64 levels -8.00..+7.75 step 0.25, nearest-level "
                  "agreement on 1e5 random reals (exact)")


# ---------------------------------------------------------------------------
# 2. probability model
# ---------------------------------------------------------------------------

def test_criterion_02_probability_model():
    rng = np.random.default_rng(7)
    worst_sum = 0.0
    worst_lvl = 0.0
    for i in range(50):
        if i % 2 == 0:
            q = uniform_quantizer(int(rng.integers(1, 4)), int(rng.integers(0, 3)))
        else:
            q = quasi_uniform_quantizer(2, 1)
        sigma = float(rng.uniform(0.3, 3.0))
        ch = ChannelModel(sigma)
        p = q.level_probabilities(ch)
        worst_sum = max(worst_sum, abs(p.sum() - 1.0))
        # oracle: Gaussian CDF mass between decision thresholds
        edges = np.concatenate(([-np.inf], q.thresholds, [np.inf]))
        mass = norm.cdf(edges[1:], loc=ch.llr_mean, scale=ch.llr_std) - norm.cdf(
            edges[:-1], loc=ch.llr_mean, scale=ch.llr_std
        )
        worst_lvl = max(worst_lvl, float(np.max(np.abs(p - mass))))
    ok = worst_sum <= 1e-12 and worst_lvl <= 1e-10
    report(2, ok, f"50 (quantizer, sigma) pairs: |sum-1| <= {worst_sum:.1e} "
                  f"(tol 1e-12), CDF-oracle dev <= {worst_lvl:.1e} (tol 1e-10)")


# ---------------------------------------------------------------------------
# 3. exact-oracle containment on a toy sub-graph
# ---------------------------------------------------------------------------

def test_criterion_03_exact_oracle_containment():
    q = uniform_quantizer(1, 0)           # t = 4
    da = build_decoder_graph(fixture("as_3_3_g6"))  # kappa = 6
    cfg = DecoderConfig("msa", q, max_iterations=1)
    exact = exact_failure_set(da, cfg, p=1)          # all t^kappa schedules
    approx = compute_failure_set(
        da, [build_w_max(da.kappa, q)], cfg, max_iterations=1,
        orbit_reduction=False,
    )
    exact_keys = set(exact.vectors)
    approx_keys = set(approx.vectors)
    contained = exact_keys <= approx_keys
    lam_ok = True
    for e in np.linspace(1.0, 10.0, 10):
        ch = ChannelModel(snr_to_sigma(float(e), 0.5))
        lam_ok &= lambda_hat(exact, q, ch) <= lambda_hat(approx, q, ch) + 1e-15
    ok = contained and lam_ok
    report(3, ok, f"toy t=4 kappa=6 p=1: exact set ({len(exact_keys)} patterns) "
                  f"contained in W_max set ({len(approx_keys)}); "
                  f"lambda <= lambda-hat at 10 SNRs")


# ---------------------------------------------------------------------------
# 4. row-set monotonicity on the (6,0) fixture
# ---------------------------------------------------------------------------

def test_criterion_04_row_set_monotonicity(fs60_row1, fs60_row3):
    grid = np.arange(3.0, 9.01, 0.5)
    l1 = [lambda_hat(fs60_row1, QUASI, ChannelModel(snr_to_sigma(e, 0.48)))
          for e in grid]
    l3 = [lambda_hat(fs60_row3, QUASI, ChannelModel(snr_to_sigma(e, 0.48)))
          for e in grid]
    le = all(b <= a for a, b in zip(l1, l3))
    strict = any(b < a for a, b in zip(l1, l3))
    ok = le and strict
    report(4, ok, "(6,0) 5-bit quasi-uniform MSA: lambda-hat(Row Set III) <= "
                  "lambda-hat(Row Set I) at all 13 swept SNRs, strictly at "
                  f"{sum(b < a for a, b in zip(l1, l3))}")


# ---------------------------------------------------------------------------
# 5. SNR-independence of the failure-set artifact
# ---------------------------------------------------------------------------

def test_criterion_05_snr_independence(tmp_path):
    base = {
        "quantizer": {"kind": "uniform", "q1": 1, "q2": 0},
        "decoder": {"algorithm": "msa", "max_iterations": 50},
        "absorbing_set": "fixture:as_4_2_g6",
        "row_set": {"set": "III", "h": 2},
        "rate": 0.48,
        "multiplicity": 50,
    }
    blobs = []
    for sigma in (0.5, 1.0, 2.0):
        # Eb/N0 grid chosen so the channel sigma differs per run
        e = 10 * math.log10(1.0 / (2 * 0.48 * sigma**2))
        cfgd = dict(base, snr_db=[e])
        cfg = tmp_path / f"cfg{sigma}.yaml"
        cfg.write_text(yaml.safe_dump(cfgd))
        out = tmp_path / f"out{sigma}"
        assert cli.main(["bound", "--config", str(cfg), "--out", str(out)]) == 0
        blobs.append((out / "failure_set.txt").read_bytes())
    ok = blobs[0] == blobs[1] == blobs[2]
    report(5, ok, "failure_set.txt byte-identical across sigma in "
                  "{0.5, 1.0, 2.0} (exact)")


# ---------------------------------------------------------------------------
# 6. rate-shift identity
# ---------------------------------------------------------------------------

def test_criterion_06_rate_shift_identity():
    q = uniform_quantizer(1, 0)
    da = build_decoder_graph(fixture("as_3_3_g6"))
    cfg = DecoderConfig("msa", q, max_iterations=8)
    fs = compute_failure_set(da, [build_w_max(da.kappa, q)], cfg)
    shift = rate_shift_db(1.0, 0.48)       # = 10 log10(0.48), negative
    grid = np.linspace(2.0, 8.0, 13)
    direct = bound_curve(fs, q, grid, rate=0.48, multiplicity=1).lam
    shifted = bound_curve(fs, q, grid + shift, rate=1.0, multiplicity=1).lam
    dev = float(np.max(np.abs(direct - shifted)))
    ok = dev <= 1e-12
    report(6, ok, f"R=0.48 curve equals R=1 curve shifted by {shift:+.4f} dB "
                  f"(max dev {dev:.2e}, tol 1e-12)")


# ---------------------------------------------------------------------------
# 7. desk-scale bound-vs-simulation on array_code(3,5)
# ---------------------------------------------------------------------------

def test_criterion_07_bound_vs_simulation(fs60_row3):
    H = array_code(3, 5)
    n_weight6 = len(find_weight_w_codewords(H, 6))
    graph = TannerGraph(H.n, H.check_neighbors)
    rate = 0.48
    points = []
    ok = True
    for e in (6.5, 7.0):
        lam = lambda_hat(fs60_row3, QUASI, ChannelModel(snr_to_sigma(e, rate)))
        est = fer_estimate(lam, n_weight6)
        plan = SimulationPlan((e,), seed=42, target_errors=60,
                              max_frames=20_000_000, block_size=8192)
        pt = simulate_point(graph, MSA200, e, rate, plan)
        in_window = 1e-7 <= pt.fer <= 1e-4
        ratio = pt.fer / est
        ok &= in_window and pt.fer >= est and ratio <= 5.0
        points.append(f"{e} dB: FER {pt.fer:.2e} ({pt.errors}/{pt.frames}) "
                      f"vs N*lambda-hat {est:.2e}, ratio {ratio:.2f}")
    report(7, ok, f"array(3,5) MSA quasi 5-bit, N={n_weight6}; " + "; ".join(points))


# ---------------------------------------------------------------------------
# 8. full-scale substitute: published multiplicities, monotone curves,
#    shallow-end simulation on array_code(3,61)
# ---------------------------------------------------------------------------

def test_criterion_08_full_scale_substitute(fs60_row3):
    q32 = uniform_quantizer(3, 2)
    q11 = uniform_quantizer(1, 1)
    da42 = build_decoder_graph(fixture("as_4_2_g6"))
    da82 = build_decoder_graph(fixture("as_8_2_g8"))
    fs42 = compute_failure_set(
        da42, [build_w_max(da42.kappa, q32)], DecoderConfig("spa", q32)
    )
    fs82 = compute_failure_set(
        da82, [build_w_max(da82.kappa, q11)], DecoderConfig("msa", q11)
    )
    grid = np.arange(3.0, 9.01, 0.5)
    # published multiplicities paired with a matching sub-graph/decoder/rate
    cases = [
        ("N=334890  (4,2) SPA  R=1/2", fs42, q32, 0.5, 334_890),
        ("N=2195390 (6,0) MSA  R=0.9514", fs60_row3, QUASI, 0.9514, 2_195_390),
        ("N=171     (8,2) MSA  R=64/155", fs82, q11, 64 / 155, 171),
        ("N=1       (8,2) MSA  R=64/155", fs82, q11, 64 / 155, 1),
        ("N=465     (4,2) SPA  R=37/63", fs42, q32, 37 / 63, 465),
        ("N=1960    (6,0) MSA  R=37/63", fs60_row3, QUASI, 37 / 63, 1960),
    ]
    ok = True
    for name, fs, q, rate, mult in cases:
        c = bound_curve(fs, q, grid, rate=rate, multiplicity=mult)
        finite = bool(np.all(np.isfinite(c.fer)) and np.all(c.fer > 0))
        mono = bool(np.all(np.diff(c.lam) < 0))
        ok &= finite and mono

    # shallow-end simulation on the full (3,61) array code
    H = array_code(3, 61)
    rate = H.rate()
    graph = TannerGraph(H.n, H.check_neighbors)
    sim_lines = []
    for e in (5.0, 5.5):
        lam = lambda_hat(fs60_row3, QUASI, ChannelModel(snr_to_sigma(e, rate)))
        est = fer_estimate(lam, 2_195_390)
        plan = SimulationPlan((e,), seed=7, target_errors=40,
                              max_frames=100_000, block_size=1024)
        pt = simulate_point(graph, MSA200, e, rate, plan)
        ok &= pt.fer >= 1e-5 and pt.fer >= est / 2.0
        sim_lines.append(f"{e} dB: FER {pt.fer:.2e} vs estimate {est:.2e}")
    report(8, ok, "6 published-N curves finite and monotone decreasing; "
                  "array(3,61) shallow sim >= estimate/2 (" + "; ".join(sim_lines) + ")")


# ---------------------------------------------------------------------------
# 9. decoder kernel equivalence
# ---------------------------------------------------------------------------

def brute_msa(values, quantizer):
    """Float reference: sign product, min magnitude, then quantize."""
    sign = -1.0 if sum(1 for v in values if v < 0) % 2 else 1.0
    out = sign * min(abs(v) for v in values)
    return int(quantizer.quantize(out))


def brute_spa(values, quantizer, phi_zero=4.25):
    """Table-free reference building each quantization step from scratch."""

    def qval(x):
        return float(quantizer.levels[int(quantizer.quantize(x))])

    def mag_q(x):
        v = qval(x)
        min_pos = float(quantizer.levels[quantizer.min_positive_index])
        return max(v, min_pos)

    sign = -1.0 if sum(1 for v in values if v < 0) % 2 else 1.0
    s = sum(mag_q(phi(abs(v), phi_zero)) for v in values)
    inner = qval(s)
    mag = mag_q(phi(inner, phi_zero)) if inner > 0 else float(quantizer.levels[-1])
    return int(quantizer.quantize(sign * mag))


def test_criterion_09_decoder_kernel_equivalence():
    ok = True
    q = uniform_quantizer(2, 0)            # t = 16: exhaustive 3-input
    t = len(q.levels)
    for i in range(t):
        for j in range(t):
            for k in range(t):
                vals = [float(q.levels[x]) for x in (i, j, k)]
                ok &= msa_check_update([i, j, k], q) == brute_msa(vals, q)
                ok &= spa_check_update([i, j, k], q, 4.25) == brute_spa(vals, q)
    rng = np.random.default_rng(3)
    q2 = uniform_quantizer(3, 2)
    for _ in range(2000):
        idx = [int(x) for x in rng.integers(0, len(q2.levels), 6)]
        vals = [float(q2.levels[x]) for x in idx]
        ok &= msa_check_update(idx, q2) == brute_msa(vals, q2)
        ok &= spa_check_update(idx, q2, 4.25) == brute_spa(vals, q2)
    report(9, ok, "MSA exact and SPA table-exact vs brute-force references "
                  "(exhaustive 3-input t=16, 2000 random 6-input t=64)")


# ---------------------------------------------------------------------------
# 10. CLI determinism across worker counts
# ---------------------------------------------------------------------------

def test_criterion_10_cli_determinism(tmp_path):
    bound_cfg = {
        "quantizer": {"kind": "uniform", "q1": 1, "q2": 0},
        "decoder": {"algorithm": "msa", "max_iterations": 50},
        "absorbing_set": "fixture:as_4_2_g6",
        "row_set": {"set": "III", "h": 2},
        "snr_db": [3.0, 4.0, 5.0, 6.0],
        "rate": 0.48,
        "multiplicity": 50,
    }
    sim_cfg = {
        "quantizer": {"kind": "quasi-uniform", "q1": 2, "q2": 1},
        "decoder": {"algorithm": "msa", "max_iterations": 200},
        "code": {"array": {"gamma": 3, "p": 5}},
        "snr_db": [4.0],
        "rate": 0.48,
        "seed": 11,
        "sim": {"target_errors": 50, "max_frames": 100_000, "block_size": 2048},
    }
    bpath = tmp_path / "bound.yaml"
    bpath.write_text(yaml.safe_dump(bound_cfg))
    spath = tmp_path / "sim.yaml"
    spath.write_text(yaml.safe_dump(sim_cfg))
    ok = True
    bound_files, sim_files = [], []
    for threads in (1, 4, 16):
        bo = tmp_path / f"b{threads}"
        so = tmp_path / f"s{threads}"
        ok &= cli.main(["bound", "--config", str(bpath), "--out", str(bo),
                        "--threads", str(threads)]) == 0
        ok &= cli.main(["simulate", "--config", str(spath), "--out", str(so),
                        "--threads", str(threads)]) == 0
        bound_files.append((bo / "bound.csv").read_bytes()
                           + (bo / "failure_set.txt").read_bytes())
        sim_files.append((so / "sim.csv").read_bytes()
                         + (so / "sim_support.csv").read_bytes())
    ok &= bound_files[0] == bound_files[1] == bound_files[2]
    ok &= sim_files[0] == sim_files[1] == sim_files[2]
    # compare consumes the two CSVs deterministically
    co = tmp_path / "cmp"
    ok &= cli.main(["compare", "--bound", str(tmp_path / "b1/bound.csv"),
                    "--sim", str(tmp_path / "s1/sim.csv"),
                    "--out", str(co)]) in (0, 1)
    report(10, ok, "bound/simulate outputs byte-identical under 1, 4 and 16 "
                   "worker threads; compare runs on the artifacts")
