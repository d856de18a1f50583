"""Walkthrough of the reward stack.

Three layers shape an episode's reward, in strict priority order:

  1. format  — any protocol violation nullifies the episode (total = -1)
  2. outcome — exact match against the gold answers after normalization
  3. cost    — the episode's dollar spend, square-root damped and ranked
               against a sliding window of recent episode costs

The cost layer is what makes training cost-aware: identical spend is worth
more when the recent population was expensive, less when it was cheap.
"""

from __future__ import annotations

import numpy as np

from multiroute import (
    CostWindow,
    RewardConfig,
    cost_reward,
    exact_match,
    f1_score,
    normalize_answer,
    total_reward,
)


def outcome_layer() -> None:
    print("=== outcome layer: normalize, then compare ===")
    for text in ("The King's Stamp", "  CUSCO, Peru. ", "a lamina dura"):
        print(f"  {text!r:<24} -> {normalize_answer(text)!r}")
    golds = ["Cusco", "Cuzco", "Cusco, Peru", "Cuzco, Peru"]
    for prediction in ("cusco", "The city of Cusco, Peru", "Lima"):
        em = exact_match(prediction, golds)
        f1 = f1_score(prediction, golds)
        print(f"  prediction {prediction!r:<28} EM={em}  F1={f1:.3f}")


def cost_layer() -> None:
    print("\n=== cost layer: the sliding window adapts the scale ===")
    config = RewardConfig()
    window = CostWindow(capacity=256)

    print("first episode ever (no distribution yet) ->", end=" ")
    print(f"{cost_reward(window, 42.0, config):.3f}  (neutral)")

    rng = np.random.default_rng(7)
    for raw in rng.uniform(5.0, 120.0, size=400):
        cost_reward(window, float(raw), config)
    print("after 400 mixed-cost episodes:")
    for raw in (0.0, 5.0, 40.0, 120.0, 500.0):
        score = cost_reward(window.copy(), raw, config)
        print(f"  raw cost {raw:7.1f} -> cost reward {score:.3f}")

    print("same raw cost, cheaper recent population -> lower reward:")
    cheap = CostWindow(capacity=256)
    for raw in rng.uniform(0.5, 8.0, size=400):
        cost_reward(cheap, float(raw), config)
    for window_name, w in (("expensive history", window), ("cheap history", cheap)):
        print(f"  raw 40.0 against {window_name:<18} -> "
              f"{cost_reward(w.copy(), 40.0, config):.3f}")


def blending() -> None:
    print("\n=== blending: total = (1 - alpha) * outcome + alpha * cost ===")
    for alpha in (0.0, 0.5, 0.9):
        total = total_reward(0, outcome=1.0, cost_norm=0.8, alpha=alpha)
        print(f"  correct cheap episode, alpha={alpha}: total={total:.3f}")
    print("format failure nullifies everything, regardless of alpha:")
    total = total_reward(-1, outcome=1.0, cost_norm=1.0, alpha=0.5)
    print(f"  correct answer in a malformed trajectory -> total={total}")


def main() -> None:
    outcome_layer()
    cost_layer()
    blending()


if __name__ == "__main__":
    main()
