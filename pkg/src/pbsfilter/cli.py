"""Command-line entry point.

Data goes to stdout (or ``-o``); diagnostics go to stderr. Exit codes:
0 success, 1 domain error (empty belief state where a history is needed,
enumeration cap), 2 usage error (bad flags, malformed JSON or instance).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from contextlib import contextmanager
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .construction import construct_history
from .enumeration import DEFAULT_MEMBER_CAP, enumerate_pbs, member_values, pbs_entropy
from .errors import (
    ConfigurationError,
    EmptyBeliefError,
    EnumerationCapError,
    IllegalActionError,
    InconsistentPublicStateError,
)
from .estimation import (
    METHODS,
    SIZE_REGIMES,
    ExactReference,
    generate_instance,
    instance_from_json,
    ordered_history_count,
    stats_table,
    sweep,
)
from .game import GameConfig, history_to_json
from .gibbs import CONSTRUCT, UNIFORM, ChainConfig, GibbsSampler
from .policy import BiasedRandomSpec, TabularQSpec, UniformSpec, load_q_policy, make_policy


class UsageError(Exception):
    pass


def _read_json(source: str) -> dict:
    if source.lstrip().startswith("{"):
        text = source
    elif source == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(source) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {source}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise UsageError("expected a JSON object")
    return obj


@contextmanager
def _output(path: Optional[str]):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _load(args):
    obj = _read_json(args.instance)
    config = GameConfig.from_json(obj["config"]) if "config" in obj else None
    policy = None
    if getattr(args, "q_table", None):
        policy = load_q_policy(args.q_table, config)
    inst = instance_from_json(obj, policy)
    if policy is None:
        policy = make_policy(inst.policy_spec, inst.config)
    return inst, policy


def _cmd_gen_instance(args) -> None:
    config = GameConfig(args.players, args.suits, args.ranks, args.hand_size, args.bonus)
    if args.policy == "uniform":
        spec = UniformSpec()
    elif args.policy == "biased":
        spec = BiasedRandomSpec(args.bias, args.policy_seed)
    else:
        spec = TabularQSpec(episodes=args.episodes, seed=args.policy_seed)
    inst = generate_instance(config, spec, args.tricks_played, args.seed)
    with _output(args.output) as out:
        json.dump(inst.to_json(include_public=args.with_public), out, sort_keys=True)
        out.write("\n")


def _cmd_enumerate(args) -> None:
    inst, policy = _load(args)
    pbs = enumerate_pbs(inst.public, policy, args.cap)
    values = member_values(pbs, policy)
    ref = ExactReference(inst, policy, pbs, values)
    with _output(args.output) as out:
        if args.table:
            writer = csv.writer(out, lineterminator="\n")
            players = inst.config.num_players
            writer.writerow(["deal_encoding", "unnormalized_reach", "probability"] + [f"value_p{i}" for i in range(players)])
            for h, lr, p, v in zip(pbs.histories, pbs.log_reach, pbs.probabilities, values):
                writer.writerow([h.deal.encode(inst.config), f"{math.exp(lr):.12g}", f"{p:.12g}"] + [f"{x:.12g}" for x in v])
            return
        # an empty belief state has no value or spread
        variance = value = None
        if len(pbs):
            value = ref.value.tolist()
            variance = [float(pbs.probabilities @ (values[:, i] - ref.value[i]) ** 2) for i in range(values.shape[1])]
        summary = {
            "histories": len(pbs),
            "ordered_histories": ordered_history_count(inst.config, len(pbs)),
            "entropy_bits": pbs_entropy(pbs),
            "variance": variance,
            "value": value,
        }
        json.dump(summary, out, sort_keys=True)
        out.write("\n")


def _cmd_construct(args) -> None:
    inst, policy = _load(args)
    history = construct_history(inst.public, policy, np.random.default_rng(args.seed))
    with _output(args.output) as out:
        if history is None:
            out.write("EMPTY\n")
        else:
            json.dump(history_to_json(history), out, sort_keys=True)
            out.write("\n")


def _cmd_sample(args) -> None:
    inst, policy = _load(args)
    cfg = ChainConfig(
        thinning_interval=args.thinning,
        num_samples=args.samples,
        init_mode=args.init,
        rng_seed=args.seed,
        discard_prefix=args.discard,
    )
    histories = GibbsSampler(inst.public, policy).run(cfg)
    with _output(args.output) as out:
        for h in histories:
            json.dump(history_to_json(h), out, sort_keys=True)
            out.write("\n")


def _cmd_estimate(args) -> None:
    inst, policy = _load(args)
    pbs = enumerate_pbs(inst.public, policy, args.cap)
    if not len(pbs):
        raise EmptyBeliefError("no history is consistent with this public state")
    ref = ExactReference(inst, policy, pbs, member_values(pbs, policy))
    text = sweep(
        ref,
        methods=args.methods,
        sample_grid=args.samples,
        thinning_grid=args.thinning,
        replicates=args.replicates,
        seed=args.seed,
        jobs=args.jobs,
        timing=args.timing,
    )
    with _output(args.output) as out:
        out.write(text)


def _cmd_stats(args) -> None:
    regimes = {k: SIZE_REGIMES[k] for k in args.sizes}
    text = stats_table(
        regimes,
        biases=args.biases,
        replicates=args.replicates,
        seed=args.seed,
        with_variance=not args.no_variance,
        jobs=args.jobs,
    )
    with _output(args.output) as out:
        out.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pbsfilter", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pbsfilter {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, instance=True):
        if instance:
            p.add_argument("instance", help="instance JSON file, '-' for stdin, or inline JSON")
            p.add_argument("--q-table", help="trained Q-table file for tabular_q policies")
        p.add_argument("-o", "--output", help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gen-instance", help="self-play a random public state")
    common(p, instance=False)
    p.add_argument("--players", type=int, default=3)
    p.add_argument("--suits", type=int, default=3)
    p.add_argument("--ranks", type=int, default=4)
    p.add_argument("--hand-size", type=int, default=3)
    p.add_argument("--bonus", type=int, default=10)
    p.add_argument("--tricks-played", type=int, default=2)
    p.add_argument("--policy", choices=["uniform", "biased", "q"], default="biased")
    p.add_argument("--bias", type=float, default=0.7)
    p.add_argument("--policy-seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=TabularQSpec.episodes)
    p.add_argument("--with-public", action="store_true", help="embed the generated public state")
    p.set_defaults(func=_cmd_gen_instance)

    p = sub.add_parser("enumerate", help="exact belief state summary or member table")
    common(p)
    p.add_argument("--cap", type=int, default=DEFAULT_MEMBER_CAP)
    p.add_argument("--table", action="store_true", help="print the member table as CSV")
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("construct", help="one consistent history via max flow, or EMPTY")
    common(p)
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("sample", help="histories from the Gibbs chain as JSON lines")
    common(p)
    p.add_argument("--thinning", type=int, default=20)
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--discard", type=int, default=0, help="transitions discarded before the first sample")
    p.add_argument("--init", choices=[CONSTRUCT, UNIFORM], default=CONSTRUCT)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("estimate", help="value-estimation error sweep as CSV")
    common(p)
    p.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    p.add_argument("--samples", type=int, nargs="+", default=[10, 25, 50, 100, 200, 400])
    p.add_argument("--thinning", type=int, nargs="+", default=[20])
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--cap", type=int, default=DEFAULT_MEMBER_CAP)
    p.add_argument("--timing", action="store_true", help="fill wall_ms (output is then not reproducible)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("stats", help="entropy/variance table of generated belief states as CSV")
    common(p, instance=False)
    p.add_argument("--sizes", nargs="+", choices=list(SIZE_REGIMES), default=list(SIZE_REGIMES))
    p.add_argument("--biases", type=float, nargs="+", default=[0.5, 0.7, 0.9])
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-variance", action="store_true")
    p.set_defaults(func=_cmd_stats)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (UsageError, ConfigurationError, InconsistentPublicStateError, IllegalActionError, KeyError) as exc:
        print(f"pbsfilter: {exc}", file=sys.stderr)
        return 2
    except (EmptyBeliefError, EnumerationCapError) as exc:
        print(f"pbsfilter: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
