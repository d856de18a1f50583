"""Reward component tests: normalization, outcome scores, cost window, totals."""

from __future__ import annotations

import math
import random
import threading

import numpy as np
import pytest

from multiroute.protocol import DEFAULT_LEXICON, validate_format
from multiroute.rewards import (
    CostWindow,
    RewardConfig,
    compose_breakdown,
    cost_reward,
    episode_cost_raw,
    exact_match,
    f1_score,
    format_reward,
    normalize_answer,
    total_reward,
)

# ---------------------------------------------------------------------------
# answer normalization
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "raw, want",
    [
        ("The Lamina Dura", "lamina dura"),
        ("Cusco, Peru.", "cusco peru"),
        ("  An   Answer  ", "answer"),
        ("it's", "its"),
        ("a an the", ""),
        ("theater themes", "theater themes"),  # articles only as whole words
        ("Ek Haseena Thi Ek Deewana Tha", "ek haseena thi ek deewana tha"),
        ("a.b", "b"),  # article removed before punctuation stripping
        ("", ""),
    ],
)
def test_normalize_answer(raw, want):
    assert normalize_answer(raw) == want


# ---------------------------------------------------------------------------
# exact match / F1
# ---------------------------------------------------------------------------


def test_exact_match_invariances():
    golds = ["Cusco", "Cuzco", "Cusco, Peru", "Cuzco, Peru"]
    assert exact_match("cuzco", golds) == 1
    assert exact_match("The Cusco!", golds) == 1
    assert exact_match("Lima", golds) == 0
    assert exact_match("the lamina dura", ["lamina dura"]) == 1


def test_exact_match_requires_golds():
    with pytest.raises(ValueError):
        exact_match("x", [])
    with pytest.raises(ValueError):
        f1_score("x", [])


@pytest.mark.parametrize(
    "pred, golds, want",
    [
        ("x y", ["y z"], 0.5),
        ("y", ["y"], 1.0),
        ("y y", ["y"], 2 / 3),  # multiset overlap: repeated token not free
        ("", ["y"], 0.0),
        ("y", [""], 0.0),
        ("", [""], 1.0),
        ("the a an", [""], 1.0),  # normalizes to empty on both sides
        ("x y z", ["x q", "z y x"], 1.0),  # max over golds
    ],
)
def test_f1_examples(pred, golds, want):
    assert f1_score(pred, golds) == pytest.approx(want)


def test_f1_upper_bounds_em():
    rng = random.Random(3)
    vocab = ["red", "blue", "stone", "river", "the", "a", "x1", "x2"]
    for _ in range(300):
        pred = " ".join(rng.choices(vocab, k=rng.randrange(4)))
        golds = [
            " ".join(rng.choices(vocab, k=rng.randrange(4))) for _ in range(2)
        ]
        em = exact_match(pred, golds)
        f1 = f1_score(pred, golds)
        assert 0.0 <= f1 <= 1.0
        assert em <= f1 + 1e-12
        if em == 1:
            assert f1 == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# format reward
# ---------------------------------------------------------------------------


def test_format_reward_gate(case_pool):
    good = validate_format(
        "<think>t</think><answer>x</answer>", DEFAULT_LEXICON, case_pool
    )
    bad = validate_format("<answer>x</answer>", DEFAULT_LEXICON, case_pool)
    assert format_reward(good) == 0
    assert format_reward(bad) == -1


# ---------------------------------------------------------------------------
# cost window + cost reward
# ---------------------------------------------------------------------------


def _oracle_percentile(values, q):
    """Closest-rank linear interpolation, written independently of numpy."""
    ordered = sorted(values)
    if len(ordered) == 1:
        return ordered[0]
    rank = q / 100.0 * (len(ordered) - 1)
    lo = math.floor(rank)
    hi = math.ceil(rank)
    frac = rank - lo
    return ordered[lo] * (1.0 - frac) + ordered[hi] * frac


def test_window_percentile_example():
    window = CostWindow(capacity=10)
    for value in (0.0, 5.0):
        window.push_and_percentiles(value, 5.0, 95.0)
    p5, p95 = window.push_and_percentiles(10.0, 5.0, 95.0)
    assert p5 == pytest.approx(0.5)
    assert p95 == pytest.approx(9.5)


def test_window_percentiles_match_manual_interpolation():
    rng = np.random.default_rng(5)
    window = CostWindow(capacity=64)
    kept = []
    for value in rng.uniform(0, 50, size=300):
        p5, p95 = window.push_and_percentiles(float(value), 5.0, 95.0)
        kept.append(float(value))
        kept = kept[-64:]
        assert p5 == pytest.approx(_oracle_percentile(kept, 5.0), abs=1e-9)
        assert p95 == pytest.approx(_oracle_percentile(kept, 95.0), abs=1e-9)


def test_window_eviction_order():
    window = CostWindow(capacity=3)
    for value in (1.0, 2.0, 3.0, 4.0):
        window.push_and_percentiles(value, 5.0, 95.0)
    assert window.values() == [2.0, 3.0, 4.0]
    assert len(window) == 3
    assert window.pushes == 4


def test_window_copy_is_independent():
    window = CostWindow(capacity=4)
    window.push_and_percentiles(1.0, 5.0, 95.0)
    clone = window.copy()
    clone.push_and_percentiles(9.0, 5.0, 95.0)
    assert window.values() == [1.0]
    assert clone.values() == [1.0, 9.0]


def test_cost_reward_inverted_scale():
    config = RewardConfig()
    window = CostWindow(config.window_capacity)
    # seed transformed costs 0 and 10 (raw 0 and 100)
    cost_reward(window, 0.0, config)
    cost_reward(window, 100.0, config)
    # raw 25 -> transformed 5 -> buffer [0, 5, 10]: p5=0.5, p95=9.5
    mid = cost_reward(window, 25.0, config)
    assert mid == pytest.approx(1.0 - (5.0 - 0.5) / 9.0)
    cheap = cost_reward(window, 0.0, config)
    assert cheap == pytest.approx(1.0)
    costly = cost_reward(window, 400.0, config)
    assert costly == pytest.approx(0.0)


def test_cost_reward_first_push_is_neutral():
    config = RewardConfig()
    window = CostWindow(config.window_capacity)
    assert cost_reward(window, 49.0, config) == pytest.approx(0.5)
    assert window.values() == [7.0]


def test_cost_reward_degenerate_spread_is_neutral():
    config = RewardConfig()
    window = CostWindow(config.window_capacity)
    for _ in range(5):
        assert cost_reward(window, 4.0, config) == pytest.approx(0.5)


def test_cost_reward_rejects_negative_cost():
    config = RewardConfig()
    window = CostWindow(config.window_capacity)
    with pytest.raises(ValueError):
        cost_reward(window, -1.0, config)


def test_cost_reward_query_never_raises_with_higher_cost():
    """Anti-monotonicity: a pricier episode never scores above a cheaper one."""
    rng = np.random.default_rng(17)
    config = RewardConfig()
    for _ in range(200):
        base = CostWindow(capacity=32)
        for value in rng.uniform(0, 30, size=rng.integers(1, 32)):
            base.push_and_percentiles(float(value), 5.0, 95.0)
        raw_a, raw_b = sorted(rng.uniform(0, 900, size=2))
        reward_a = cost_reward(base.copy(), float(raw_a), config)
        reward_b = cost_reward(base.copy(), float(raw_b), config)
        assert reward_b <= reward_a + 1e-12


def test_window_thread_smoke():
    config = RewardConfig(window_capacity=256)
    window = CostWindow(config.window_capacity)
    results = []
    lock = threading.Lock()

    def worker(seed):
        rng = random.Random(seed)
        local = []
        for _ in range(200):
            local.append(cost_reward(window, rng.uniform(0, 100), config))
        with lock:
            results.extend(local)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert window.pushes == 1600
    assert len(window) == 256
    assert all(0.0 <= r <= 1.0 for r in results)


# ---------------------------------------------------------------------------
# totals and breakdowns
# ---------------------------------------------------------------------------


def test_total_reward_hierarchy():
    assert total_reward(-1, 1.0, 1.0, 0.5) == -1.0
    assert total_reward(0, 1.0, 0.0, 0.0) == pytest.approx(1.0)
    assert total_reward(0, 0.0, 1.0, 0.0) == pytest.approx(0.0)
    assert total_reward(0, 1.0, 0.5, 0.4) == pytest.approx(0.6 * 1.0 + 0.4 * 0.5)
    assert total_reward(0, 0.25, 0.75, 1.0) == pytest.approx(0.75)


def test_total_reward_validates_ranges():
    with pytest.raises(ValueError):
        total_reward(0, 1.5, 0.0, 0.0)
    with pytest.raises(ValueError):
        total_reward(0, 0.0, -0.1, 0.0)
    with pytest.raises(ValueError):
        total_reward(0, 0.0, 0.0, 1.1)
    with pytest.raises(ValueError):
        total_reward(1, 0.0, 0.0, 0.0)  # format reward is -1 or 0 only


def test_breakdown_zeroes_components_on_format_failure():
    breakdown = compose_breakdown(-1, 1.0, 42.0, 0.9, 0.5)
    record = breakdown.to_record()
    assert record["total"] == -1.0
    assert record["outcome"] == 0.0
    assert record["cost_norm"] == 0.0
    assert record["cost_raw"] == 42.0
    assert record["format"] == -1


def test_breakdown_passes_through_on_success():
    breakdown = compose_breakdown(0, 1.0, 9.0, 0.25, 0.2)
    record = breakdown.to_record()
    assert record["total"] == pytest.approx(0.8 * 1.0 + 0.2 * 0.25)
    assert record["outcome"] == 1.0
    assert record["cost_norm"] == 0.25
    assert record["alpha"] == 0.2


def test_reward_config_validation():
    with pytest.raises(ValueError):
        RewardConfig(alpha=-0.1)
    with pytest.raises(ValueError):
        RewardConfig(alpha=1.2)
    with pytest.raises(ValueError):
        RewardConfig(window_capacity=0)
    with pytest.raises(ValueError):
        RewardConfig(epsilon=-1e-9)
    with pytest.raises(ValueError):
        RewardConfig(percentile_lo=95.0, percentile_hi=5.0)


def test_episode_cost_raw_sums_calls():
    class _Call:
        def __init__(self, cost):
            self.cost = cost

    assert episode_cost_raw([_Call(2.0), _Call(3.5)]) == pytest.approx(5.5)
    assert episode_cost_raw([]) == 0.0
