"""Hierarchical episode rewards: format gate, exact match, and cost shaping.

Total reward is (1 - alpha) * outcome + alpha * cost_norm, nullified to -1
whenever the format gate fails.  Cost shaping normalizes the square root of
raw episode cost against a sliding window of recent episodes via the 5th and
95th percentiles, inverted so cheap episodes score high.
"""

from __future__ import annotations

import math
import re
import string
import threading
from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

from .protocol import FormatVerdict

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


@dataclass(frozen=True)
class RewardConfig:
    alpha: float = 0.0
    window_capacity: int = 1000
    epsilon: float = 1e-6
    percentile_lo: float = 5.0
    percentile_hi: float = 95.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if self.window_capacity < 1:
            raise ValueError("window_capacity must be positive")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if not 0.0 <= self.percentile_lo < self.percentile_hi <= 100.0:
            raise ValueError("percentiles must satisfy 0 <= lo < hi <= 100")


class CostWindow:
    """Bounded ring buffer of transformed episode costs.

    Push and percentile read happen under one lock so concurrent scoring
    never interleaves between the two.
    """

    def __init__(self, capacity: int = 1000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._buffer: deque[float] = deque(maxlen=capacity)
        self._lock = threading.Lock()
        self._pushes = 0

    def push_and_percentiles(
        self, value: float, lo: float, hi: float
    ) -> tuple[float, float]:
        """Append ``value``, then return the (lo, hi) percentiles of the buffer.

        Percentiles use linear interpolation between closest ranks
        (rank = q/100 * (n - 1)) over the buffer contents after the push.
        """
        with self._lock:
            self._buffer.append(value)
            self._pushes += 1
            data = np.fromiter(self._buffer, dtype=float)
            return (
                float(np.percentile(data, lo)),
                float(np.percentile(data, hi)),
            )

    def values(self) -> list[float]:
        with self._lock:
            return list(self._buffer)

    def copy(self) -> "CostWindow":
        clone = CostWindow(self.capacity)
        with self._lock:
            clone._buffer.extend(self._buffer)
            clone._pushes = self._pushes
        return clone

    @property
    def pushes(self) -> int:
        return self._pushes

    def __len__(self) -> int:
        return len(self._buffer)


def format_reward(verdict: FormatVerdict) -> int:
    """-1 when any structural rule is violated, else 0."""
    return 0 if verdict.ok else -1


def normalize_answer(text: str) -> str:
    """Lowercase, drop articles, strip punctuation, collapse whitespace."""
    text = text.lower()
    text = _ARTICLE_RE.sub(" ", text)
    text = text.translate(_PUNCT_TABLE)
    return " ".join(text.split())


def exact_match(prediction: str, golds: list[str]) -> int:
    """1 if the normalized prediction equals any normalized gold, else 0."""
    if not golds:
        raise ValueError("golds must be nonempty")
    norm = normalize_answer(prediction)
    return int(any(norm == normalize_answer(g) for g in golds))


def f1_score(prediction: str, golds: list[str]) -> float:
    """Max token-level F1 over golds, on normalized whitespace tokens.

    Both token lists empty counts as 1.0; exactly one empty counts as 0.0.
    Overlap is multiset intersection, so repeated tokens count multiply.
    """
    if not golds:
        raise ValueError("golds must be nonempty")
    pred_tokens = normalize_answer(prediction).split()
    best = 0.0
    for gold in golds:
        gold_tokens = normalize_answer(gold).split()
        if not pred_tokens and not gold_tokens:
            best = max(best, 1.0)
            continue
        if not pred_tokens or not gold_tokens:
            continue
        overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
        if overlap == 0:
            continue
        precision = overlap / len(pred_tokens)
        recall = overlap / len(gold_tokens)
        best = max(best, 2 * precision * recall / (precision + recall))
    return best


def episode_cost_raw(calls) -> float:
    """Sum of per-call costs for one episode."""
    return float(sum(call.cost for call in calls))


def cost_reward(window: CostWindow, raw_cost: float, config: RewardConfig) -> float:
    """Score raw episode cost in [0, 1]; cheaper-than-recent scores higher.

    The square root of ``raw_cost`` is pushed into the window first, then
    normalized against the window's percentile range.  A degenerate range
    (below ``config.epsilon``) yields the neutral score 0.5.
    """
    if raw_cost < 0:
        raise ValueError("raw_cost must be nonnegative")
    transformed = math.sqrt(raw_cost)
    lo, hi = window.push_and_percentiles(
        transformed, config.percentile_lo, config.percentile_hi
    )
    spread = hi - lo
    if spread < config.epsilon:
        return 0.5
    normalized = (transformed - lo) / spread
    return 1.0 - min(max(normalized, 0.0), 1.0)


def total_reward(
    format_r: int, outcome: float, cost_norm: float, alpha: float
) -> float:
    """Hierarchical combination: format failure nullifies the other terms."""
    if format_r not in (-1, 0):
        raise ValueError("format_r must be -1 or 0")
    if not 0.0 <= outcome <= 1.0:
        raise ValueError("outcome must be in [0, 1]")
    if not 0.0 <= cost_norm <= 1.0:
        raise ValueError("cost_norm must be in [0, 1]")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    if format_r == -1:
        return -1.0
    return (1.0 - alpha) * outcome + alpha * cost_norm


@dataclass
class RewardBreakdown:
    """Per-episode reward components as actually applied.

    When the format gate fails, ``outcome`` and ``cost_norm`` are zeroed here
    to reflect nullification; ``cost_raw`` keeps the measured spend.
    """

    format: int
    outcome: float
    cost_raw: float
    cost_norm: float
    alpha: float
    total: float

    def to_record(self) -> dict:
        return {
            "format": self.format,
            "outcome": self.outcome,
            "cost_raw": self.cost_raw,
            "cost_norm": self.cost_norm,
            "alpha": self.alpha,
            "total": self.total,
        }


def compose_breakdown(
    format_r: int, outcome: float, cost_raw: float, cost_norm: float, alpha: float
) -> RewardBreakdown:
    total = total_reward(format_r, outcome, cost_norm, alpha)
    if format_r == -1:
        outcome = 0.0
        cost_norm = 0.0
    return RewardBreakdown(
        format=format_r,
        outcome=outcome,
        cost_raw=cost_raw,
        cost_norm=cost_norm,
        alpha=alpha,
        total=total,
    )
