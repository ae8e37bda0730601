"""Value-estimation experiments: instances, the three estimators, sweeps, and belief statistics.

Every estimator is scored against the exact public-belief-state value with
one metric, the largest per-player absolute deviation. CSV output is a
deterministic function of the seed; wall-clock columns are filled only
when timing is requested.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .enumeration import (
    DEFAULT_MEMBER_CAP,
    PublicBeliefState,
    enumerate_pbs,
    member_values,
    pbs_entropy,
    pbs_variance,
)
from .game import Deal, GameConfig, apply_action, new_game
from .gibbs import UNIFORM, ChainConfig, GibbsSampler
from .observation import PublicState, infostate_of, public_state_of
from .policy import BiasedRandomSpec, Policy, PolicySpec, make_policy, policy_spec_from_json

TRUE = "true"
IMPORTANCE = "importance"
GIBBS = "gibbs"
METHODS = (TRUE, IMPORTANCE, GIBBS)

SWEEP_HEADER = ["instance_id", "method", "samples", "thinning", "transitions", "error_mean", "error_sem", "wall_ms"]

# (players, suits, ranks, hand size) and tricks played for the three size regimes;
# labels are the history counts when hands are dealt as ordered sequences
SIZE_REGIMES = {
    "192": (GameConfig(3, 2, 4, 2), 1),
    "12960": (GameConfig(3, 3, 4, 3), 2),
    "544320": (GameConfig(3, 3, 4, 3), 1),
}


def ordered_history_count(config: GameConfig, num_deals: int) -> int:
    """History count when each hand is dealt card by card (order distinguishes deals)."""
    return num_deals * math.factorial(config.hand_size) ** config.num_players


@dataclass(frozen=True)
class Instance:
    config: GameConfig
    policy_spec: PolicySpec
    tricks_played: int
    seed: int
    public: PublicState

    @property
    def instance_id(self) -> str:
        c = self.config
        return f"p{c.num_players}s{c.num_suits}r{c.num_ranks}h{c.hand_size}t{self.tricks_played}seed{self.seed}"

    def to_json(self, include_public: bool = True) -> dict:
        obj = {
            "config": self.config.to_json(),
            "policy": self.policy_spec.to_json(),
            "tricks_played": self.tricks_played,
            "seed": self.seed,
        }
        if include_public:
            obj["public"] = self.public.to_json()
        return obj


def generate_instance(
    config: GameConfig,
    policy_spec: PolicySpec,
    tricks_played: int,
    seed: int,
    policy: Optional[Policy] = None,
) -> Instance:
    """Deal from ``seed`` and self-play the bidding plus ``tricks_played`` tricks."""
    if not 0 <= tricks_played <= config.hand_size:
        raise ConfigurationError("tricks_played must lie between 0 and the hand size")
    policy = make_policy(policy_spec, config) if policy is None else policy
    state = new_game(config, seed)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    for _ in range(config.num_players * (1 + tricks_played)):
        state = apply_action(state, policy.distribution(infostate_of(state)).sample(rng))
    return Instance(config, policy_spec, tricks_played, seed, public_state_of(state))


def instance_from_json(obj: dict, policy: Optional[Policy] = None) -> Instance:
    """Rebuild an instance; an explicit ``public`` entry overrides self-play."""
    try:
        config = GameConfig.from_json(obj["config"])
        spec = policy_spec_from_json(obj.get("policy"))
        tricks = int(obj.get("tricks_played", 0))
        seed = int(obj.get("seed", 0))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"malformed instance {obj!r}") from exc
    if "public" in obj:
        return Instance(config, spec, tricks, seed, PublicState.from_json(obj["public"]))
    return generate_instance(config, spec, tricks, seed, policy)


@dataclass
class ExactReference:
    """Enumerated belief state of an instance with per-member values and the exact value."""

    instance: Instance
    policy: Policy
    pbs: PublicBeliefState
    values: np.ndarray
    value: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.value = self.pbs.probabilities @ self.values if len(self.pbs) else np.zeros(self.values.shape[1])

    def value_of(self, deal: Deal) -> np.ndarray:
        return self.values[self.pbs.index_of(deal)]

    def error(self, estimate: np.ndarray) -> float:
        return float(np.max(np.abs(np.asarray(estimate) - self.value)))


def exact_reference(instance: Instance, policy: Policy, cap: int = DEFAULT_MEMBER_CAP) -> ExactReference:
    pbs = enumerate_pbs(instance.public, policy, cap)
    return ExactReference(instance, policy, pbs, member_values(pbs, policy))


@dataclass(frozen=True)
class EstimateRecord:
    method: str
    samples_used: int
    thinning: int
    estimate: np.ndarray
    error: float
    transitions: int = 0
    wall_ms: int = 0


def _elapsed_ms(start: float) -> int:
    return int(round((time.perf_counter() - start) * 1000))


def estimate_true(ref: ExactReference, k: int, rng: np.random.Generator, exhaustive: bool = False) -> EstimateRecord:
    """Mean value of ``k`` i.i.d. draws from the exact joint range.

    ``exhaustive=True`` replaces sampling by the exact weighted sum.
    """
    start = time.perf_counter()
    if exhaustive:
        estimate = ref.pbs.probabilities @ ref.values
        k = len(ref.pbs)
    else:
        idx = rng.choice(len(ref.pbs), size=k, p=ref.pbs.probabilities)
        estimate = ref.values[idx].mean(axis=0)
    return EstimateRecord(TRUE, k, 0, estimate, ref.error(estimate), 0, _elapsed_ms(start))


def estimate_importance(
    ref: ExactReference, k: int, rng: np.random.Generator, systematic: bool = False
) -> EstimateRecord:
    """Self-normalized importance sampling with a uniform proposal over H_S.

    ``systematic=True`` visits every history once instead of sampling.
    """
    start = time.perf_counter()
    n = len(ref.pbs)
    idx = np.arange(n) if systematic else rng.integers(n, size=k)
    log_w = ref.pbs.log_reach[idx]
    w = np.exp(log_w - log_w.max())
    estimate = (w @ ref.values[idx]) / w.sum()
    return EstimateRecord(IMPORTANCE, len(idx), 0, estimate, ref.error(estimate), 0, _elapsed_ms(start))


def estimate_gibbs(
    ref: ExactReference,
    k: int,
    thinning: int,
    rng: np.random.Generator,
    init_mode: str = UNIFORM,
    sampler: Optional[GibbsSampler] = None,
) -> EstimateRecord:
    """Mean value over ``k`` chain samples taken every ``thinning`` transitions."""
    start = time.perf_counter()
    sampler = GibbsSampler(ref.instance.public, ref.policy) if sampler is None else sampler
    before = sampler.transitions
    cfg = ChainConfig(thinning_interval=thinning, num_samples=k, init_mode=init_mode)
    histories = sampler.run(cfg, rng)
    estimate = np.mean([ref.value_of(h.deal) for h in histories], axis=0)
    transitions = sampler.transitions - before
    return EstimateRecord(GIBBS, k, thinning, estimate, ref.error(estimate), transitions, _elapsed_ms(start))


def _cell_rng(seed: int, method: str, samples: int, thinning: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), METHODS.index(method), int(samples), int(thinning), int(replicate)])
    )


def run_cell(ref: ExactReference, method: str, samples: int, thinning: int, replicates: int, seed: int) -> list[EstimateRecord]:
    """All replicates of one (method, samples, thinning) cell."""
    records = []
    sampler = GibbsSampler(ref.instance.public, ref.policy) if method == GIBBS else None
    for r in range(replicates):
        rng = _cell_rng(seed, method, samples, thinning, r)
        if method == TRUE:
            records.append(estimate_true(ref, samples, rng))
        elif method == IMPORTANCE:
            records.append(estimate_importance(ref, samples, rng))
        elif method == GIBBS:
            records.append(estimate_gibbs(ref, samples, thinning, rng, sampler=sampler))
        else:
            raise ConfigurationError(f"unknown estimation method {method!r}")
    return records


def _run_cell_args(args):
    return run_cell(*args)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def summarize(records: Sequence[EstimateRecord]) -> tuple[float, Optional[float]]:
    errors = np.array([r.error for r in records])
    sem = float(errors.std(ddof=1) / math.sqrt(len(errors))) if len(errors) > 1 else None
    return float(errors.mean()), sem


def sweep(
    ref: ExactReference,
    methods: Sequence[str] = METHODS,
    sample_grid: Sequence[int] = (10, 25, 50, 100, 200, 400),
    thinning_grid: Sequence[int] = (20,),
    replicates: int = 100,
    seed: int = 0,
    jobs: int = 1,
    timing: bool = False,
) -> str:
    """Mean error and its standard error per cell, as CSV text with :data:`SWEEP_HEADER`."""
    if replicates < 1 or any(k < 1 for k in sample_grid) or any(t < 1 for t in thinning_grid):
        raise ConfigurationError("replicates, samples, and thinning must be positive")
    cells = []
    for method in methods:
        if method not in METHODS:
            raise ConfigurationError(f"unknown estimation method {method!r}")
        for samples in sample_grid:
            for thinning in (thinning_grid if method == GIBBS else (0,)):
                cells.append((method, samples, thinning))
    args = [(ref, m, k, t, replicates, seed) for m, k, t in cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_args, args))
    else:
        results = [run_cell(*a) for a in args]

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for (method, samples, thinning), records in zip(cells, results):
        mean, sem = summarize(records)
        wall = int(round(np.mean([r.wall_ms for r in records]))) if timing else 0
        writer.writerow([
            ref.instance.instance_id,
            method,
            samples,
            thinning,
            records[0].transitions,
            _fmt(mean),
            "" if sem is None else _fmt(sem),
            wall,
        ])
    return out.getvalue()


STATS_HEADER = [
    "size",
    "players",
    "suits",
    "ranks",
    "hand_size",
    "tricks_played",
    "bias",
    "instances",
    "mean_histories",
    "mean_ordered_histories",
    "entropy_mean",
    "entropy_sem",
    "ordered_entropy_mean",
    "variance_mean",
    "variance_sem",
]


@dataclass(frozen=True)
class BeliefStats:
    histories: int
    entropy: float
    variance: Optional[float]


def instance_seed(seed: int, regime: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(regime), int(index)]).generate_state(1)[0])


def belief_stats(instance: Instance, policy: Policy, with_variance: bool = True, player: int = 0) -> BeliefStats:
    pbs = enumerate_pbs(instance.public, policy)
    variance = pbs_variance(pbs, policy, player) if with_variance else None
    return BeliefStats(len(pbs), pbs_entropy(pbs), variance)


def _stats_cell(args) -> list[BeliefStats]:
    config, tricks, bias, regime, replicates, seed, with_variance = args
    out = []
    for i in range(replicates):
        s = instance_seed(seed, regime, i)
        spec = BiasedRandomSpec(bias=bias, seed=s)
        policy = make_policy(spec, config)
        inst = generate_instance(config, spec, tricks, s, policy)
        out.append(belief_stats(inst, policy, with_variance))
    return out


def _mean_sem(values: Sequence[float]) -> tuple[float, Optional[float]]:
    arr = np.asarray(values, dtype=float)
    sem = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else None
    return float(arr.mean()), sem


def stats_rows(
    regimes: dict[str, tuple[GameConfig, int]] = SIZE_REGIMES,
    biases: Sequence[float] = (0.5, 0.7, 0.9),
    replicates: int = 100,
    seed: int = 0,
    with_variance: bool = True,
    jobs: int = 1,
) -> list[dict]:
    """Per (size regime, bias) cell: mean and SEM of entropy and player-0 value variance.

    Instance ``i`` of a regime uses the same deal seed for every bias.
    """
    cells = []
    for regime, (label, (config, tricks)) in enumerate(regimes.items()):
        for bias in biases:
            cells.append((label, (config, tricks, bias, regime, replicates, seed, with_variance)))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_stats_cell, [a for _, a in cells]))
    else:
        results = [_stats_cell(a) for _, a in cells]
    rows = []
    for (label, (config, tricks, bias, *_)), stats in zip(cells, results):
        entropy_mean, entropy_sem = _mean_sem([s.entropy for s in stats])
        mean_hist = float(np.mean([s.histories for s in stats]))
        row = {
            "size": label,
            "players": config.num_players,
            "suits": config.num_suits,
            "ranks": config.num_ranks,
            "hand_size": config.hand_size,
            "tricks_played": tricks,
            "bias": bias,
            "instances": len(stats),
            "mean_histories": mean_hist,
            "mean_ordered_histories": mean_hist * math.factorial(config.hand_size) ** config.num_players,
            "entropy_mean": entropy_mean,
            "entropy_sem": entropy_sem,
            # hand orderings are uniform and independent of play: adds N * log2(h!) bits
            "ordered_entropy_mean": entropy_mean + config.num_players * math.log2(math.factorial(config.hand_size)),
            "variance_mean": None,
            "variance_sem": None,
            "entropies": [s.entropy for s in stats],
            "histories": [s.histories for s in stats],
        }
        if with_variance:
            row["variance_mean"], row["variance_sem"] = _mean_sem([s.variance for s in stats])
        rows.append(row)
    return rows


def stats_table(
    regimes: dict[str, tuple[GameConfig, int]] = SIZE_REGIMES,
    biases: Sequence[float] = (0.5, 0.7, 0.9),
    replicates: int = 100,
    seed: int = 0,
    with_variance: bool = True,
    jobs: int = 1,
) -> str:
    """Entropy/variance table of generated belief states as CSV text with :data:`STATS_HEADER`."""
    rows = stats_rows(regimes, biases, replicates, seed, with_variance, jobs)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(STATS_HEADER)
    for row in rows:
        writer.writerow(["" if row[h] is None else (_fmt(row[h]) if isinstance(row[h], float) else row[h]) for h in STATS_HEADER])
    return out.getvalue()
