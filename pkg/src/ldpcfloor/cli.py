"""Command-line front end: bound curves, simulation, comparison, code
generation, and absorbing-set validation.

Every output file begins with a ``# digest=...`` header derived from the
configuration, and reruns with the same config and seed are byte-identical
regardless of --threads.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import yaml

from . import absorbing, bounds, codes, simulate
from .absorbing import AbsorbingSetError
from .bounds import BoundError
from .codes import CodeError
from .decoder import DecoderConfig, DecoderError
from .quantizer import QuantizerError, quantizer_from_config
from .simulate import SimulationError, SimulationPlan

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_GUARD = 4

CACHE_ENV = "LDPCFLOOR_CACHE"


class ConfigError(ValueError):
    pass


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigError(f"bad YAML in {path}: {e}")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    return cfg


def _need(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config missing required key {key!r}")
    return cfg[key]


def _quantizer(cfg):
    return quantizer_from_config(_need(cfg, "quantizer"))


def _decoder_config(cfg, q) -> DecoderConfig:
    d = _need(cfg, "decoder")
    return DecoderConfig(
        algorithm=_need(d, "algorithm"),
        quantizer=q,
        phi_zero=float(d.get("phi_zero", 4.25)),
        max_iterations=int(d.get("max_iterations", 200)),
    )


def _absorbing_set(cfg) -> absorbing.AbsorbingSetGraph:
    src = _need(cfg, "absorbing_set")
    if isinstance(src, str) and src.startswith("fixture:"):
        return absorbing.loads(absorbing.fixture_text(src.split(":", 1)[1]))
    try:
        return absorbing.load(src)
    except FileNotFoundError:
        raise ConfigError(f"absorbing-set file not found: {src}")


def _rows(cfg, kappa, q) -> list[bounds.RowMatrix]:
    rs = _need(cfg, "row_set")
    name = str(_need(rs, "set")).upper()
    if name == "I":
        return [bounds.build_w_max(kappa, q)]
    if name == "II":
        return [bounds.build_w_inc(kappa, q, h=int(_need(rs, "h")))]
    if name == "III":
        return [bounds.build_w_max(kappa, q), bounds.build_w_inc(kappa, q, h=int(_need(rs, "h")))]
    raise ConfigError(f"row_set.set must be I, II or III, got {name!r}")


def _code(cfg) -> codes.ParityCheckMatrix:
    c = _need(cfg, "code")
    if "array" in c:
        return codes.array_code(int(_need(c["array"], "gamma")), int(_need(c["array"], "p")))
    if "alist" in c:
        try:
            return codes.load_alist(c["alist"])
        except FileNotFoundError:
            raise ConfigError(f"alist file not found: {c['alist']}")
    raise ConfigError("code must give 'array' parameters or an 'alist' path")


def _config_digest(cfg: dict, seed: int) -> str:
    blob = json.dumps({"config": cfg, "seed": seed}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _out_dir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_bound(args) -> int:
    cfg = _load_config(args.config)
    q = _quantizer(cfg)
    dconf = _decoder_config(cfg, q)
    asg = _absorbing_set(cfg)
    da = absorbing.build_decoder_graph(asg, policy=cfg.get("aux_policy", "all-checks"))
    rows = _rows(cfg, da.kappa, q)
    snr = [float(x) for x in _need(cfg, "snr_db")]
    rate = float(_need(cfg, "rate"))
    mult = int(cfg.get("multiplicity", 1))
    digest = bounds._digest(da, dconf, rows, dconf.max_iterations)

    cache_dir = os.environ.get(CACHE_ENV)
    fs = None
    cache_path = None
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        cache_path = os.path.join(cache_dir, f"{digest}.fs")
        if os.path.exists(cache_path):
            cached = bounds.FailureSet.load(cache_path)
            if cached.meta.get("digest") == digest:
                fs = cached
            else:
                print("warning: cache digest mismatch, recomputing", file=sys.stderr)
    if fs is None:
        fs = bounds.compute_failure_set(
            da, rows, dconf, workers=args.threads, progress=args.progress
        )
        if cache_path:
            fs.save(cache_path)

    out = _out_dir(args)
    fs_path = os.path.join(out, "failure_set.txt")
    fs.save(fs_path)
    curve = bounds.bound_curve(fs, q, snr, rate, mult)
    csv_path = os.path.join(out, "bound.csv")
    with open(csv_path, "w") as fh:
        fh.write(f"# digest={_config_digest(cfg, args.seed)} failure_set={digest}\n")
        fh.write("ebn0_db,lambda_hat,fer_estimate\n")
        for e, l, f in zip(curve.ebn0_db, curve.lam, curve.fer):
            fh.write(f"{e:.6g},{l:.12e},{f:.12e}\n")
    for e, l, f in zip(curve.ebn0_db, curve.lam, curve.fer):
        print(f"{e:.3f} dB  lambda_hat {l:.6e}  estimate {f:.6e}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    q = _quantizer(cfg)
    dconf = _decoder_config(cfg, q)
    H = _code(cfg)
    snr = tuple(float(x) for x in _need(cfg, "snr_db"))
    rate = float(cfg.get("rate", H.rate()))
    sim = cfg.get("sim", {})
    plan = SimulationPlan(
        ebn0_db=snr,
        seed=args.seed if args.seed is not None else int(cfg.get("seed", 0)),
        target_errors=int(sim.get("target_errors", 100)),
        max_frames=int(sim.get("max_frames", 100_000_000)),
        block_size=int(sim.get("block_size", 4096)),
    )
    points = simulate.run(H.to_graph(), dconf, rate, plan, workers=args.threads)
    out = _out_dir(args)
    csv_path = os.path.join(out, "sim.csv")
    with open(csv_path, "w") as fh:
        fh.write(f"# digest={_config_digest(cfg, plan.seed)}\n")
        fh.write("ebn0_db,frames,frame_errors,fer,ci_low,ci_high\n")
        for p in points:
            fh.write(
                f"{p.ebn0_db:.6g},{p.frames},{p.errors},{p.fer:.9e},"
                f"{p.ci_low:.9e},{p.ci_high:.9e}\n"
            )
    hist_path = os.path.join(csv_path.replace("sim.csv", "sim_support.csv"))
    with open(hist_path, "w") as fh:
        fh.write(f"# digest={_config_digest(cfg, plan.seed)}\n")
        fh.write("ebn0_db,support_weight,count\n")
        for p in points:
            for k, v in sorted(p.support_hist.items()):
                fh.write(f"{p.ebn0_db:.6g},{k},{v}\n")
    for p in points:
        print(f"{p.ebn0_db:.3f} dB  frames {p.frames}  errors {p.errors}  fer {p.fer:.6e}")
    return EXIT_OK


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    if header is None:
        raise CodeError(f"empty CSV {path}")
    return header, rows


def cmd_compare(args) -> int:
    bh, brows = _read_csv(args.bound)
    sh, srows = _read_csv(args.sim)
    best = {float(r[0]): float(r[2]) for r in brows}  # ebn0 -> estimate
    sim = {float(r[0]): float(r[3]) for r in srows}  # ebn0 -> fer
    common = sorted(set(best) & set(sim))
    if not common:
        print("error: bound and simulation grids are disjoint", file=sys.stderr)
        return EXIT_CONFIG
    out = _out_dir(args)
    path = os.path.join(out, "compare.csv")
    floor = args.floor_threshold
    worst = None
    with open(path, "w") as fh:
        fh.write("ebn0_db,fer_sim,fer_estimate,ratio,in_floor_window\n")
        for e in common:
            ratio = sim[e] / best[e] if best[e] > 0 else float("inf")
            infloor = sim[e] < floor
            if infloor and (worst is None or ratio > worst):
                worst = ratio
            fh.write(f"{e:.6g},{sim[e]:.9e},{best[e]:.9e},{ratio:.6g},{int(infloor)}\n")
    if worst is None:
        print("no points below the floor-entry threshold")
    else:
        verdict = "PASS" if worst >= 1.0 else "FAIL"
        print(f"max FER/(N*lambda_hat) ratio in floor window: {worst:.4g} "
              f"(lower-bound direction {verdict})")
    return EXIT_OK


def cmd_codegen(args) -> int:
    cfg = _load_config(args.config)
    H = _code(cfg)
    out = _out_dir(args)
    path = os.path.join(out, "code.alist")
    codes.store_alist(H, path)
    print(f"wrote {path}: n={H.n} m={H.m} rank={H.rank()} rate={H.rate():.6g}")
    return EXIT_OK


def cmd_validate_as(args) -> int:
    graph = absorbing.load(args.file)
    c = absorbing.validate(graph)
    print(f"a={c.a} b={c.b} gamma={c.gamma} girth={c.girth}")
    print(f"absorbing_set={c.is_absorbing_set} elementary={c.is_elementary_trapping_set} "
          f"leafless={c.is_leafless_elementary_trapping_set}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ldpcfloor",
        description="Error-floor lower bounds and FER simulation for quantized LDPC decoders",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--progress", action="store_true")

    p = sub.add_parser("bound", help="compute a failure set and bound curve")
    common(p)
    p = sub.add_parser("simulate", help="Monte-Carlo FER simulation")
    common(p)
    p = sub.add_parser("compare", help="merge bound and simulation CSVs")
    p.add_argument("--bound", required=True)
    p.add_argument("--sim", required=True)
    p.add_argument("--floor-threshold", type=float, default=1e-3,
                   help="FER below this counts as the error-floor window")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=".")
    p = sub.add_parser("codegen", help="emit an alist parity-check matrix")
    common(p)
    p = sub.add_parser("validate-as", help="classify an absorbing-set file")
    p.add_argument("file")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    handlers = {
        "bound": cmd_bound,
        "simulate": cmd_simulate,
        "compare": cmd_compare,
        "codegen": cmd_codegen,
        "validate-as": cmd_validate_as,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, SimulationError, QuantizerError, DecoderError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (AbsorbingSetError, CodeError) as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except BoundError as e:
        print(f"guard violation: {e}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
