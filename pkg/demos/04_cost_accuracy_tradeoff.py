"""Train the same routing policy at two cost weights and compare.

The pool pairs an expensive strong model against a nearly-free weak one.
With alpha = 0 the reward is pure accuracy, so the trained policy leans on
the strong model and pays for it.  With alpha = 0.9 the cost term dominates
and the policy learns to route cheaply (or not at all), trading accuracy
away.  The printed table shows both ends of that dial.

Runs in well under a minute; pass --steps/--batch to change the budget.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from multiroute import (
    EngineConfig,
    LearnedRoutingPolicy,
    ModelDescriptor,
    PolicyParams,
    RewardConfig,
    RoutingPool,
    SimulatedBackend,
    SimulatedProfile,
    TrainConfig,
    evaluate,
    make_synthetic_tasks,
    train,
)
from multiroute.trainer import knowledge_bases_for

# Anchor costs pre-fill the sliding window so "cheap" and "expensive" keep a
# stable meaning while the policy explores: 0 = no calls, 2 = one weak-model
# call, 96 = the strong model's typical bill.
WARMUP_COSTS = [0.0] * 700 + [2.0] * 700 + [96.0] * 600


def build_pool(tasks) -> RoutingPool:
    kbs = knowledge_bases_for(tasks)
    return RoutingPool(
        [
            ModelDescriptor(
                "strong-72b", "Strong-72B", 72, 2.0,
                "a large model with broad knowledge; expensive per token",
                SimulatedBackend(SimulatedProfile(
                    knowledge_base=kbs.get("strong-72b", {}),
                    accuracy=0.9, verbosity=48, seed=11,
                )),
            ),
            ModelDescriptor(
                "weak-7b", "Weak-7B", 7, 0.05,
                "a small budget model; often wrong but nearly free",
                SimulatedBackend(SimulatedProfile(
                    knowledge_base=kbs.get("weak-7b", {}),
                    accuracy=0.6, verbosity=40, seed=23,
                )),
            ),
        ]
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=40)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--tasks", type=int, default=40)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    tasks = make_synthetic_tasks(args.tasks, "strong-72b", "weak-7b", seed=7)
    pool = build_pool(tasks)
    engine_config = EngineConfig()

    print(f"{'alpha':>6} {'EM':>7} {'avg cost':>10} {'avg calls':>10} "
          f"{'train time':>11}")
    for alpha in (0.0, 0.9):
        reward_config = RewardConfig(alpha=alpha, window_capacity=8000)
        config = TrainConfig(
            learning_rate=0.3, batch_size=args.batch, steps=args.steps,
            beta=0.0, seed=args.seed, feature_dim=64,
        )
        started = time.perf_counter()
        report = train(
            tasks, pool, config, reward_config, engine_config,
            warmup_costs=WARMUP_COSTS,
        )
        train_seconds = time.perf_counter() - started

        rng = np.random.default_rng(args.seed + 1000)

        def factory(task, params: PolicyParams = report.params):
            return LearnedRoutingPolicy(
                params, task.question, pool, rng, engine_config.lexicon
            )

        summary, _ = evaluate(
            tasks, factory, pool, engine_config, reward_config,
            warmup_costs=WARMUP_COSTS,
        )
        print(
            f"{alpha:>6.1f} {summary.em_mean:>7.3f} "
            f"{summary.avg_cost_raw:>10.2f} {summary.avg_api_calls:>10.2f} "
            f"{train_seconds:>10.1f}s"
        )

    print("\nHigher alpha -> cheaper episodes, lower exact match.")


if __name__ == "__main__":
    main()
