"""Command-line interface.

Subcommands: route (one question), eval (task file -> metrics), train
(task file -> params + metric series), reward-check (recompute rewards for
logged trajectories), serve (HTTP service).  Flags override config-file
values, which override defaults.  Exit code 2 flags config or input-file
problems.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_run_config
from .engine import Episode, PolicyBackend, run_episode
from .evaluation import (
    TaskFileError,
    evaluate,
    load_tasks,
    report,
    write_episode_log,
)
from .policies import HttpPolicy, ScriptedPolicy
from .pool import token_count
from .protocol import (
    BlockKind,
    ParseFailure,
    extract_answer,
    parse_route_directive,
    parse_trajectory,
    validate_format,
    DirectiveError,
)
from .rewards import (
    CostWindow,
    compose_breakdown,
    cost_reward,
    exact_match,
    format_reward,
)
from .trainer import LearnedRoutingPolicy, PolicyParams, train

# Info texts the engine injects for failed routes carry no billable tokens;
# the offline audit recognizes them by prefix.
_ZERO_COST_INFO_PREFIXES = ("Routing error", "No assistance available")


class CliError(Exception):
    pass


def _load_config(args: argparse.Namespace, overrides: dict) -> RunConfig:
    if not args.config:
        raise CliError("--config is required")
    return load_run_config(args.config, overrides)


def _policy_factory(run: RunConfig):
    """Build a per-task policy constructor from the config's policy section."""
    section = run.policy
    kind = section.get("kind")
    if kind == "scripted":
        script = section.get("script")
        script_path = section.get("script_path")
        if script_path:
            with open(os.path.join(run.base_dir, script_path), encoding="utf-8") as f:
                script = json.load(f)
        if script is None:
            script = []
        if isinstance(script, dict):
            by_id = script
            default = by_id.get("default", [])

            def factory(task):
                task_id = getattr(task, "id", None)
                return ScriptedPolicy(by_id.get(task_id, default))

            return factory
        if not isinstance(script, list):
            raise CliError("scripted policy: script must be a list or mapping")
        return lambda task: ScriptedPolicy(script)
    if kind == "params":
        path = section.get("path")
        if not path:
            raise CliError("params policy: 'path' is required")
        with open(os.path.join(run.base_dir, path), encoding="utf-8") as f:
            params = PolicyParams.from_json(f.read())

        def factory(task):
            rng = np.random.default_rng(run.seed)
            return LearnedRoutingPolicy(
                params,
                task.question,
                run.pool,
                rng,
                run.engine.lexicon,
                max_steps=run.engine.max_routing_steps,
            )

        return factory
    if kind == "http":
        model = section.get("model")
        if not model:
            raise CliError("http policy: 'model' is required")
        kwargs = {
            key: section[key]
            for key in ("url_env", "api_key_env", "temperature", "timeout_ms")
            if key in section
        }
        return lambda task: HttpPolicy(model, **kwargs)
    raise CliError(f"unknown policy kind {kind!r}")


class _QuestionOnly:
    def __init__(self, question: str, golds):
        self.question = question
        self.golds = golds
        self.id = None


def cmd_route(args: argparse.Namespace) -> int:
    run = _load_config(
        args,
        {
            "reward.alpha": args.alpha,
            "engine.max_routing_steps": args.max_routing_steps,
            "seed": args.seed,
        },
    )
    factory = _policy_factory(run)
    task = _QuestionOnly(args.question, args.gold or None)
    window = CostWindow(run.reward.window_capacity)
    for cost in run.eval_warmup_costs:
        cost_reward(window, cost, run.reward)
    episode = run_episode(
        task.question,
        task.golds,
        factory(task),
        run.pool,
        window,
        run.engine,
        run.reward,
    )
    record = episode.to_record()
    if record["rewards"] is None:
        del record["rewards"]
    print(json.dumps(record, sort_keys=True))
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    run = _load_config(
        args, {"reward.alpha": args.alpha, "seed": args.seed}
    )
    tasks = load_tasks(args.tasks)
    factory = _policy_factory(run)
    summary, episodes = evaluate(
        tasks,
        factory,
        run.pool,
        run.engine,
        run.reward,
        warmup_costs=run.eval_warmup_costs,
    )
    print(report(summary, fmt=args.format))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(json.dumps(summary.to_record(), sort_keys=True) + "\n")
    if args.episodes_log:
        write_episode_log(args.episodes_log, episodes)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    run = _load_config(
        args,
        {
            "reward.alpha": args.alpha,
            "trainer.steps": args.steps,
            "trainer.batch_size": args.batch_size,
            "trainer.learning_rate": args.learning_rate,
            "trainer.beta": args.beta,
            "trainer.seed": args.seed,
        },
    )
    tasks = load_tasks(args.tasks)
    result = train(tasks, run.pool, run.trainer, run.reward, run.engine)
    if args.metrics_out:
        with open(args.metrics_out, "w", encoding="utf-8") as handle:
            for record in result.step_records():
                handle.write(json.dumps(record, sort_keys=True) + "\n")
    if args.params_out:
        with open(args.params_out, "w", encoding="utf-8") as handle:
            handle.write(result.params.to_json() + "\n")
    final_reward = result.mean_reward[-1] if result.mean_reward else float("nan")
    print(
        json.dumps(
            {
                "steps": len(result.mean_reward),
                "final_mean_reward": final_reward,
            },
            sort_keys=True,
        )
    )
    return 0


def _reconstruct_cost(trajectory, run: RunConfig) -> float:
    """Re-price a logged trajectory from its route/info pairs."""
    cost = 0.0
    pending = None
    for block in trajectory.blocks:
        if block.kind is BlockKind.ROUTE:
            try:
                model_id, _ = parse_route_directive(block.text, run.pool)
                pending = run.pool.get(model_id)
            except DirectiveError:
                pending = None
        elif block.kind is BlockKind.INFO:
            interior = block.text.strip()
            if pending is not None and not interior.startswith(
                _ZERO_COST_INFO_PREFIXES
            ):
                cost += pending.cost_per_token * token_count(interior)
            pending = None
    return cost


def cmd_reward_check(args: argparse.Namespace) -> int:
    run = _load_config(args, {"reward.alpha": args.alpha})
    window = CostWindow(run.reward.window_capacity)
    for cost in run.eval_warmup_costs:
        cost_reward(window, cost, run.reward)
    lexicon = run.engine.lexicon
    try:
        with open(args.file, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise CliError(f"cannot read {args.file}: {exc}")
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
            raw = row["raw"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CliError(f"{args.file}:{line_no}: bad trajectory row: {exc}")
        golds = row.get("golden_answers")
        verdict = validate_format(raw, lexicon, run.pool)
        outcome = 0.0
        cost_raw = 0.0
        try:
            trajectory = parse_trajectory(raw, lexicon)
            answer = extract_answer(trajectory)
            if answer is not None and golds:
                outcome = float(exact_match(answer, golds))
            cost_raw = _reconstruct_cost(trajectory, run)
        except ParseFailure:
            pass
        cost_norm = cost_reward(window, cost_raw, run.reward)
        breakdown = compose_breakdown(
            format_reward(verdict), outcome, cost_raw, cost_norm, run.reward.alpha
        )
        record = {
            "id": row.get("id", line_no),
            "ok": verdict.ok,
            "violations": [v.to_record() for v in verdict.violations],
        }
        record.update(breakdown.to_record())
        print(json.dumps(record, sort_keys=True))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .serve import serve_forever

    run = _load_config(args, {"seed": args.seed})
    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise CliError(f"--bind must be host:port, got {args.bind!r}")
    serve_forever(run, host, int(port), max_inflight=args.max_inflight)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multiroute",
        description="Multi-round LLM routing: run, evaluate, train, audit, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="run config JSON file")
        p.add_argument("--alpha", type=float, default=None,
                       help="override reward.alpha")

    p_route = sub.add_parser("route", help="answer one question")
    add_common(p_route)
    p_route.add_argument("--question", required=True)
    p_route.add_argument("--gold", action="append", default=None,
                         help="golden answer (repeatable); enables rewards")
    p_route.add_argument("--seed", type=int, default=None)
    p_route.add_argument("--max-routing-steps", type=int, default=None)
    p_route.set_defaults(func=cmd_route)

    p_eval = sub.add_parser("eval", help="evaluate a policy on a task file")
    add_common(p_eval)
    p_eval.add_argument("--tasks", required=True, help="JSONL task file")
    p_eval.add_argument("--out", default=None, help="write metrics JSON here")
    p_eval.add_argument("--episodes-log", default=None,
                        help="write per-episode JSONL here")
    p_eval.add_argument("--format", choices=("table", "machine"), default="table")
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_train = sub.add_parser("train", help="train the routing policy")
    add_common(p_train)
    p_train.add_argument("--tasks", required=True, help="JSONL task file")
    p_train.add_argument("--metrics-out", default=None,
                         help="write per-step metrics JSONL here")
    p_train.add_argument("--params-out", default=None,
                         help="write trained params JSON here")
    p_train.add_argument("--steps", type=int, default=None)
    p_train.add_argument("--batch-size", type=int, default=None)
    p_train.add_argument("--learning-rate", type=float, default=None)
    p_train.add_argument("--beta", type=float, default=None)
    p_train.add_argument("--seed", type=int, default=None)
    p_train.set_defaults(func=cmd_train)

    p_check = sub.add_parser(
        "reward-check", help="recompute rewards for logged trajectories"
    )
    add_common(p_check)
    p_check.add_argument("--file", required=True,
                         help="JSONL of {raw, golden_answers?} rows")
    p_check.set_defaults(func=cmd_reward_check)

    p_serve = sub.add_parser("serve", help="serve routing over HTTP")
    add_common(p_serve)
    p_serve.add_argument("--bind", default="127.0.0.1:8777")
    p_serve.add_argument("--max-inflight", type=int, default=8)
    p_serve.add_argument("--seed", type=int, default=None)
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TaskFileError, CliError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def script_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    script_main()
