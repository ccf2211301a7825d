"""Experiment runner: Monte-Carlo decoding-error estimation across the
channel taxonomy, parameter sweeps, and capacity reports.

Every run is reproducible byte for byte from (config, seed): messages and
channel randomness come from per-trial substreams, records are merged in
trial order regardless of the parallelism degree, and wall-clock timings
are written only on request since they would break reproducibility.
"""

from __future__ import annotations

import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Tuple

import numpy as np

from . import codec as codec_mod
from .adversaries import (BatchReleaseDelaySource, BernoulliNoiseSource,
                          BurstNoiseSource, DelayAwareNoiseSource,
                          GeometricDelaySource, RandomBudgetNoiseSource,
                          delay_adversary_params, noise_adversary_params)
from .capacity import SvnChannelSpec, channel_capacity
from .channel import (ChannelKind, CompositionOrder, ConfigError,
                      FixedDelaySource, parse_channel, transmit)
from .rng import (DELAY_STREAM, MESSAGE_STREAM, NOISE_STREAM, stream_id,
                  substream)
from .stats import wilson_interval
from .stochastic import DelayConvention, DelayModel, NoiseModel, as_fraction

SCHEMA_VERSION = 1

CSV_HEADER = "trial,seed,ok,w_agree,budget_exceeded,n_heavy,n_corrupt,n_deviant,ms"


@dataclass
class ExperimentConfig:
    """One Monte-Carlo experiment: a channel, a codec, and a trial budget."""

    channel: str = "NA|DP"
    epsilon: str = "1/128"
    M: int = 1_048_576
    k: int = 4
    n_blocks: int = 48
    trials: int = 100
    seed: int = 0
    adversary: str = "random"          # random | burst | delay_aware
    burst_per_block: Optional[int] = None
    delay_kind: str = "geometric"      # geometric | zero (probabilistic stage)
    convention: str = "from_one"
    tau: str = "5/24"
    code_seed: int = 1
    c_heavy: float = 4.0
    deviation_exponent: float = 0.52
    jobs: int = 1
    timings: bool = False
    schema: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def validate_config(config: ExperimentConfig) -> List[str]:
    """Every violated constraint, as one message each; empty means valid."""
    problems = []
    try:
        kind = parse_channel(config.channel)
    except ConfigError as exc:
        return [str(exc)]
    if config.trials < 1:
        problems.append("trials must be >= 1")
    if config.jobs < 1:
        problems.append("jobs must be >= 1")
    if config.schema != SCHEMA_VERSION:
        problems.append(f"unsupported schema version {config.schema}")
    try:
        eps = as_fraction(config.epsilon)
    except (ValueError, TypeError) as exc:
        problems.append(f"epsilon: {exc}")
        return problems
    try:
        DelayConvention(config.convention)
    except ValueError:
        problems.append(f"unknown delay convention {config.convention!r}")
    params = None
    try:
        params = codec_mod.CodecParams.derive(config.M, config.k, config.n_blocks,
                                              eps, config.deviation_exponent)
    except ValueError as exc:
        problems.append(f"codec: {exc}")
    try:
        codec_mod.as_fraction(config.tau)
    except ValueError as exc:
        problems.append(f"tau: {exc}")
    if kind.noise_adversarial:
        if config.adversary not in ("random", "burst", "delay_aware"):
            problems.append(f"unknown adversary {config.adversary!r}")
        if config.adversary == "delay_aware":
            if kind.order is not CompositionOrder.DELAY_THEN_NOISE:
                problems.append("delay_aware noise requires a delay-first channel")
            elif params is not None:
                try:
                    noise_adversary_params(eps, config.M, params.T)
                except ConfigError as exc:
                    problems.append(f"delay_aware noise: {exc}")
    if kind.delay_adversarial and params is not None:
        try:
            delay_adversary_params(eps, config.M, params.T)
        except ConfigError as exc:
            problems.append(f"delay adversary: {exc}")
    if config.delay_kind not in ("geometric", "zero"):
        problems.append(f"unknown delay_kind {config.delay_kind!r}")
    return problems


@dataclass
class TrialRecord:
    trial: int
    seed: int
    ok: bool
    w_agree: float
    budget_exceeded: bool
    n_heavy: int
    n_corrupt: int
    n_deviant: int
    ms: int

    def csv_row(self) -> str:
        return (f"{self.trial},{self.seed},{int(self.ok)},{self.w_agree:.6f},"
                f"{int(self.budget_exceeded)},{self.n_heavy},{self.n_corrupt},"
                f"{self.n_deviant},{self.ms}")


@dataclass
class ResultsSummary:
    config: dict
    derived: dict
    n_trials: int
    n_errors: int
    pr_dec: float
    wilson_low: float
    wilson_high: float
    w_agree_mean: float
    budget_exceeded_rate: float
    heavy_rate: float
    corrupted_rate: float
    deviant_rate: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


class _Bundle:
    """Per-process immutable experiment state rebuilt from the config."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        eps = as_fraction(config.epsilon)
        self.kind: ChannelKind = parse_channel(config.channel)
        self.params = codec_mod.CodecParams.derive(
            config.M, config.k, config.n_blocks, eps, config.deviation_exponent)
        self.code = codec_mod.build_outer_code(
            config.k, config.n_blocks, as_fraction(config.tau), config.code_seed)
        self.convention = DelayConvention(config.convention)

        if self.kind.noise_adversarial:
            if config.adversary == "delay_aware":
                self.noise_source = DelayAwareNoiseSource(eps, config.M)
            elif config.adversary == "burst":
                self.noise_source = BurstNoiseSource(
                    eps, range(config.n_blocks), self.params.half_len,
                    config.burst_per_block)
            else:
                self.noise_source = RandomBudgetNoiseSource(eps)
        else:
            self.noise_source = BernoulliNoiseSource(NoiseModel(eps))

        if self.kind.delay_adversarial:
            self.delay_source = BatchReleaseDelaySource(eps, config.M, self.params.T)
        elif config.delay_kind == "zero":
            self.delay_source = FixedDelaySource(0)
        else:
            self.delay_source = GeometricDelaySource(
                DelayModel(config.M, self.convention))

    def run_trial(self, trial: int) -> TrialRecord:
        cfg = self.config
        t0 = time.perf_counter()
        rng_msg = substream(cfg.seed, trial, MESSAGE_STREAM)
        rng_delay = substream(cfg.seed, trial, DELAY_STREAM)
        rng_noise = substream(cfg.seed, trial, NOISE_STREAM)

        message = rng_msg.integers(0, 2, size=cfg.k).astype(np.uint8)
        x = codec_mod.block_encode(message, self.params, self.code)
        result = transmit(x, self.noise_source, self.delay_source,
                          self.kind.order, (rng_noise, rng_delay))

        decoded = codec_mod.block_decode(result.received, self.params, self.code)
        ok = bool((decoded == message).all())
        w = codec_mod.demodulate(result.received, self.params)
        word = codec_mod.encode_message(self.code, message)
        w_agree = float(np.mean(w == word))

        diag = codec_mod.classify_blocks(x, result.flips, result.delays,
                                         self.params, cfg.c_heavy, self.convention)
        budget_exceeded = bool(getattr(result.noise_state, "budget_exceeded", False))
        if self.kind.noise_adversarial and not budget_exceeded:
            flips = int(result.flips.sum())
            assert flips <= self.params.flip_budget, \
                f"adversary exceeded its budget: {flips} > {self.params.flip_budget}"
            assert diag.n_corrupted * 8 <= cfg.n_blocks, \
                "corrupted blocks exceed one eighth of all blocks"

        ms = int((time.perf_counter() - t0) * 1000) if cfg.timings else 0
        return TrialRecord(trial=trial, seed=stream_id(cfg.seed, trial),
                           ok=ok, w_agree=w_agree, budget_exceeded=budget_exceeded,
                           n_heavy=diag.n_heavy, n_corrupt=diag.n_corrupted,
                           n_deviant=diag.n_deviant, ms=ms)

    def derived_constants(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "half_len": self.params.half_len,
            "tail_len": self.params.tail_len,
            "threshold_scale": self.params.threshold_scale,
            "slots": self.params.slots,
            "T": self.params.T,
            "flip_budget": self.params.flip_budget,
            "corruption_threshold": self.params.corruption_threshold,
            "code_dmin": self.code.dmin,
            "code_correctable": self.code.correctable,
            "convention": self.convention.value,
            "timings_recorded": self.config.timings,
        }


def _worker(args) -> List[tuple]:
    config_dict, trial_indices = args
    bundle = _Bundle(ExperimentConfig.from_dict(config_dict))
    return [asdict(bundle.run_trial(t)) for t in trial_indices]


def run_monte_carlo(config: ExperimentConfig) -> Tuple[ResultsSummary, List[TrialRecord]]:
    """Run every trial, merge records in trial order, and summarize."""
    problems = validate_config(config)
    if problems:
        raise ConfigError("; ".join(problems))
    trials = list(range(config.trials))
    if config.jobs > 1 and config.trials > 1:
        jobs = min(config.jobs, config.trials)
        chunks = [trials[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_worker, [(config.to_dict(), c) for c in chunks]))
        records = [TrialRecord(**r) for part in parts for r in part]
        records.sort(key=lambda r: r.trial)
        bundle = _Bundle(config)
    else:
        bundle = _Bundle(config)
        records = [bundle.run_trial(t) for t in trials]

    n = len(records)
    n_errors = sum(1 for r in records if not r.ok)
    n_blocks_total = n * config.n_blocks
    wil = wilson_interval(n_errors, n)
    summary = ResultsSummary(
        config=config.to_dict(),
        derived=bundle.derived_constants(),
        n_trials=n,
        n_errors=n_errors,
        pr_dec=n_errors / n,
        wilson_low=wil.low,
        wilson_high=wil.high,
        w_agree_mean=sum(r.w_agree for r in records) / n,
        budget_exceeded_rate=sum(r.budget_exceeded for r in records) / n,
        heavy_rate=sum(r.n_heavy for r in records) / n_blocks_total,
        corrupted_rate=sum(r.n_corrupt for r in records) / n_blocks_total,
        deviant_rate=sum(r.n_deviant for r in records) / n_blocks_total,
    )
    return summary, records


def records_to_csv(records: List[TrialRecord]) -> str:
    lines = [CSV_HEADER] + [r.csv_row() for r in records]
    return "\n".join(lines) + "\n"


def results_to_json(summary: ResultsSummary, records: List[TrialRecord]) -> str:
    payload = {"summary": asdict(summary), "records": [asdict(r) for r in records]}
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def sweep(base: dict, grid: dict) -> List[dict]:
    """Cross-product sweep; each cell yields a summary or an isolated error.

    Cells are visited in deterministic order: grid keys sorted, values in
    the order given.
    """
    keys = sorted(grid)
    cells = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        overrides = dict(zip(keys, combo))
        cfg_dict = {**base, **overrides}
        cell = {"overrides": overrides}
        try:
            summary, _ = run_monte_carlo(ExperimentConfig.from_dict(cfg_dict))
            cell["summary"] = asdict(summary)
        except Exception as exc:   # isolate per-cell failures
            cell["error"] = f"{type(exc).__name__}: {exc}"
        cells.append(cell)
    return cells


def capacity_report(spec_dicts: List[dict], tol: float = 1e-6,
                    max_iter: int = 10_000) -> dict:
    """Capacity rows for a list of channel specs plus the boundedness
    exhibit: successive capacity differences across M for rows sharing
    (epsilon, c)."""
    rows = []
    for d in spec_dicts:
        row = dict(d)
        try:
            spec = SvnChannelSpec(M=int(d["M"]), epsilon=as_fraction(d["epsilon"]),
                                  c=int(d["c"]), mu=int(d["mu"]))
            rep = channel_capacity(spec, tol=tol, max_iter=max_iter)
            row.update(epsilon=str(spec.epsilon), capacity_bits=rep.capacity_bits,
                       gap=rep.gap, iterations=rep.iterations,
                       converged=rep.converged)
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)

    groups = {}
    for row in rows:
        if "error" in row:
            continue
        groups.setdefault((row["epsilon"], row["c"]), []).append(row)
    exhibit = []
    for (eps, c), members in sorted(groups.items()):
        members.sort(key=lambda r: r["M"])
        diffs = [dict(M_low=a["M"], M_high=b["M"],
                      difference_bits=b["capacity_bits"] - a["capacity_bits"])
                 for a, b in zip(members, members[1:])]
        exhibit.append({"epsilon": eps, "c": c, "successive_differences": diffs})
    return {"schema": SCHEMA_VERSION, "channels": rows, "exhibit": exhibit}
