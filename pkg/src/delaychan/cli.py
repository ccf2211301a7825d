"""Command-line entry point.

Subcommands: ``simulate`` (one config), ``sweep`` (grid file),
``capacity`` (channel spec list), ``selftest`` (fast invariant suite).
Exit codes: 0 success, 2 invalid configuration, 3 a selftest or
acceptance threshold failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .channel import ConfigError
from .harness import ExperimentConfig, run_monte_carlo, validate_config


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")


def _write_out(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_simulate(args) -> int:
    data = _load_json(args.config)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.jobs is not None:
        data["jobs"] = args.jobs
    if args.timings:
        data["timings"] = True
    config = ExperimentConfig.from_dict(data)
    problems = validate_config(config)
    if problems:
        sys.stderr.write("invalid configuration:\n")
        for p in problems:
            sys.stderr.write(f"  - {p}\n")
        return 2
    summary, records = run_monte_carlo(config)
    if args.format == "csv":
        _write_out(harness.records_to_csv(records), args.out)
        sys.stdout.write(summary.to_json() + "\n")
    else:
        _write_out(harness.results_to_json(summary, records), args.out)
    return 0


def _cmd_sweep(args) -> int:
    data = _load_json(args.config)
    base = data.get("base", {})
    grid = data.get("grid", {})
    if args.seed is not None:
        base["seed"] = args.seed
    if args.jobs is not None:
        base["jobs"] = args.jobs
    cells = harness.sweep(base, grid)
    text = json.dumps({"schema": harness.SCHEMA_VERSION, "cells": cells},
                      sort_keys=True, indent=2) + "\n"
    _write_out(text, args.out)
    return 0


def _cmd_capacity(args) -> int:
    data = _load_json(args.config)
    specs = data["channels"] if isinstance(data, dict) else data
    report = harness.capacity_report(specs, tol=args.tol)
    _write_out(json.dumps(report, sort_keys=True, indent=2) + "\n", args.out)
    return 0


def _selftest_checks():
    """Fast invariant checks; yields (name, passed, detail)."""
    from fractions import Fraction
    from itertools import product

    from .adversaries import batch_release_delay, delay_aware_noise, signature_vector
    from .capacity import blahut_arimoto
    from .channel import apply_delay
    from .codec import CodecParams, block_decode, block_encode, build_outer_code
    from .stochastic import departure_probability_bounds, sample_delay, DelayModel

    rng = np.random.default_rng(20240917)

    def delivery_oracle():
        for n in range(1, 5):
            for z in product((0, 1), repeat=n):
                for _ in range(6):
                    d = rng.integers(0, n + 2, size=n)
                    expect = [sum(z[j] for j in range(n) if j + d[j] == i)
                              for i in range(n)]
                    if not np.array_equal(apply_delay(np.array(z), d), expect):
                        return False, f"mismatch at n={n}, z={z}, d={d.tolist()}"
        return True, "exhaustive n <= 4"

    def sandwich():
        for M in range(1, 17):
            for l1 in range(M + 1):
                for l2 in range(M + 1):
                    departure_probability_bounds(M, l1, l2)  # asserts internally
        return True, "M <= 16 exhaustive"

    def bsc_capacity():
        p = 0.25
        cap = blahut_arimoto(np.array([[1 - p, p], [p, 1 - p]])).capacity_bits
        want = 1 + p * np.log2(p) + (1 - p) * np.log2(1 - p)
        ok = abs(cap - want) < 2e-6
        return ok, f"|{cap:.8f} - {want:.8f}|"

    def delay_adversary():
        M, T = 32, 2
        for _ in range(64):
            x = rng.integers(0, 2, size=M * T).astype(np.uint8)
            d, state = batch_release_delay(x, Fraction(1, 4), M, T)
            if d.max() > M:
                return False, "delay exceeded M"
            if max(r0 + r1 for r0, r1 in zip(state.rel0, state.rel1)) > 3 * M // 4:
                return False, "release exceeded 3M/4"
            mu = signature_vector(state)
            spacing = M // state.params.c
            offs = np.abs(mu[:-1] - np.round(mu[:-1] / spacing) * spacing)
            if offs.max() > 0.5:
                return False, "signature off the spacing grid"
        return True, "64 random messages at M=32"

    def noise_adversary():
        M, T = 100, 2
        eps = Fraction(1, 5)
        model = DelayModel(M)
        for t in range(50):
            x = rng.integers(0, 2, size=M * T).astype(np.uint8)
            d = sample_delay(model, M * T, rng)
            xi, state = delay_aware_noise(x, d, eps, M)
            if not state.budget_exceeded and xi.sum() > state.params.budget:
                return False, "budget exceeded without flag"
            z = np.bitwise_xor(x, xi)
            if not state.budget_exceeded and z[state.same_interval].any():
                return False, "same-interval departure not zeroed"
        return True, "50 random trials at M=100"

    def codec_roundtrip():
        params = CodecParams.derive(1024, 2, 12, 0)
        code = build_outer_code(2, 12, seed=5)
        for m_int in range(4):
            m = np.array([(m_int >> i) & 1 for i in range(2)], dtype=np.uint8)
            x = block_encode(m, params, code)
            y = x.astype(np.int64)  # zero delay, zero noise: counts mirror bits
            if not np.array_equal(block_decode(y, params, code), m):
                return False, f"roundtrip failed for message {m_int}"
        return True, "noiseless zero-delay roundtrip"

    def reproducibility():
        cfg = ExperimentConfig(channel="NA|DP", epsilon="1/128", M=1024, k=2,
                               n_blocks=12, trials=3, seed=7)
        a = harness.records_to_csv(run_monte_carlo(cfg)[1])
        b = harness.records_to_csv(run_monte_carlo(cfg)[1])
        return a == b, "identical CSV bytes"

    yield "delivery map oracle", *delivery_oracle()
    yield "departure probability sandwich", *sandwich()
    yield "binary symmetric channel capacity", *bsc_capacity()
    yield "delay adversary structure", *delay_adversary()
    yield "noise adversary structure", *noise_adversary()
    yield "codec roundtrip", *codec_roundtrip()
    yield "reproducibility", *reproducibility()


def _cmd_selftest(args) -> int:
    failures = 0
    for name, passed, detail in _selftest_checks():
        status = "PASS" if passed else "FAIL"
        print(f"{status}  {name}  ({detail})")
        failures += not passed
    return 3 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delaychan",
        description="Simulate delay/noise channels and compute capacities.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one Monte-Carlo experiment")
    sim.add_argument("--config", required=True, help="experiment config JSON")
    sim.add_argument("--out", help="output path (default stdout)")
    sim.add_argument("--seed", type=int, help="override the config seed")
    sim.add_argument("--jobs", type=int, help="parallel worker count")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--timings", action="store_true",
                     help="record wall times (breaks byte reproducibility)")
    sim.set_defaults(func=_cmd_simulate)

    swp = sub.add_parser("sweep", help="run a config grid")
    swp.add_argument("--config", required=True, help="JSON with base and grid")
    swp.add_argument("--out", help="output path (default stdout)")
    swp.add_argument("--seed", type=int)
    swp.add_argument("--jobs", type=int)
    swp.set_defaults(func=_cmd_sweep)

    cap = sub.add_parser("capacity", help="capacity report for channel specs")
    cap.add_argument("--config", required=True,
                     help="JSON list of {M, epsilon, c, mu} specs")
    cap.add_argument("--out", help="output path (default stdout)")
    cap.add_argument("--tol", type=float, default=1e-6)
    cap.set_defaults(func=_cmd_capacity)

    st = sub.add_parser("selftest", help="run the fast invariant suite")
    st.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"invalid configuration: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
