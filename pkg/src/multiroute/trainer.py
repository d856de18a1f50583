"""Desk-scale policy-gradient trainer for the routing decision head.

The policy is a linear softmax over hashed bag-of-words question features
plus a round-index one-hot.  Actions are "route to model i" for each pool
model, plus a final "answer now" action that aggregates the info gathered so
far.  Training maximizes

    J = E[ log pi(a|s) * (R - b) ] - beta * E[ KL(pi(.|s) || pi_ref(.|s)) ]

by plain REINFORCE with an exponential-moving-average baseline b and a
frozen copy of the initial policy as the KL reference.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .engine import (
    EngineConfig,
    Episode,
    PolicyBackend,
    UNHELPFUL_INFO_PREFIXES,
    run_episode,
)
from .pool import RoutingPool
from .protocol import TagLexicon
from .rewards import CostWindow, RewardConfig, cost_reward

ANSWER_ACTION = "answer"
ABSTAIN_TEXT = "unknown"


@dataclass
class PolicyParams:
    """Weights of the linear softmax decision head.

    ``actions`` lists pool model ids in pool order followed by the answer
    action; ``weights`` has one column per action.
    """

    feature_dim: int
    actions: tuple[str, ...]
    weights: np.ndarray
    temperature: float = 1.0

    @classmethod
    def initial(
        cls, feature_dim: int, pool: RoutingPool, temperature: float = 1.0
    ) -> "PolicyParams":
        actions = tuple(d.id for d in pool) + (ANSWER_ACTION,)
        weights = np.zeros((feature_dim, len(actions)), dtype=float)
        return cls(feature_dim, actions, weights, temperature)

    def copy(self) -> "PolicyParams":
        return PolicyParams(
            self.feature_dim, self.actions, self.weights.copy(), self.temperature
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "feature_dim": self.feature_dim,
                "actions": list(self.actions),
                "temperature": self.temperature,
                "weights": self.weights.tolist(),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "PolicyParams":
        data = json.loads(text)
        weights = np.asarray(data["weights"], dtype=float)
        return cls(
            feature_dim=int(data["feature_dim"]),
            actions=tuple(data["actions"]),
            weights=weights,
            temperature=float(data["temperature"]),
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.2
    batch_size: int = 64
    steps: int = 225
    beta: float = 0.01
    baseline_momentum: float = 0.9
    seed: int = 0
    feature_dim: int = 64
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if not 0.0 <= self.baseline_momentum < 1.0:
            raise ValueError("baseline_momentum must be in [0, 1)")
        if self.feature_dim < 8:
            raise ValueError("feature_dim must be at least 8")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


def featurize(
    question: str, step_index: int, feature_dim: int, max_steps: int = 4
) -> np.ndarray:
    """Hashed bag-of-words over the question plus a round one-hot.

    The last ``max_steps + 1`` slots encode the current round (clamped), the
    rest accumulate crc32-hashed lowercase token counts.
    """
    step_slots = max_steps + 1
    word_dim = feature_dim - step_slots
    if word_dim < 1:
        raise ValueError("feature_dim too small for the step one-hot")
    features = np.zeros(feature_dim, dtype=float)
    for token in question.lower().split():
        features[zlib.crc32(token.encode()) % word_dim] += 1.0
    features[word_dim + min(step_index, max_steps)] = 1.0
    return features


def action_distribution(params: PolicyParams, features: np.ndarray) -> np.ndarray:
    logits = features @ params.weights / params.temperature
    logits = logits - logits.max()
    exp = np.exp(logits)
    return exp / exp.sum()


def sample_action(
    params: PolicyParams, features: np.ndarray, rng: np.random.Generator
) -> tuple[int, np.ndarray]:
    """Sample an action index; returns (index, full probability vector)."""
    probs = action_distribution(params, features)
    index = int(rng.choice(len(probs), p=probs / probs.sum()))
    return index, probs


@dataclass
class DecisionStep:
    features: np.ndarray
    action: int


@dataclass
class EpisodeSample:
    """What the gradient step needs from one rollout."""

    reward: float
    steps: list[DecisionStep]


class LearnedRoutingPolicy(PolicyBackend):
    """Engine adapter around PolicyParams.

    Each generate call absorbs any new info blocks from the context delta,
    then either emits a route directive for the sampled model or answers by
    joining the distinct helpful replies seen so far (first lines only).
    """

    def __init__(
        self,
        params: PolicyParams,
        question: str,
        pool: RoutingPool,
        rng: np.random.Generator,
        lexicon: TagLexicon,
        max_steps: int = 4,
    ):
        self.params = params
        self.question = question
        self.pool = pool
        self.rng = rng
        self.lexicon = lexicon
        self.max_steps = max_steps
        self.decisions: list[DecisionStep] = []
        self._round = 0
        self._prev_context_len: Optional[int] = None
        self._facts: list[str] = []

    def generate(
        self, context: str, stop_markers: list[str], max_tokens: int
    ) -> str:
        if self._prev_context_len is not None:
            self._absorb_info(context[self._prev_context_len :])
        self._prev_context_len = len(context)

        lex = self.lexicon
        answer_only = lex.route_close not in stop_markers
        if answer_only:
            return self._emit_answer()

        features = featurize(
            self.question, self._round, self.params.feature_dim, self.max_steps
        )
        index, _ = sample_action(self.params, features, self.rng)
        self.decisions.append(DecisionStep(features=features, action=index))
        self._round += 1
        if self.params.actions[index] == ANSWER_ACTION:
            return self._emit_answer()
        model = self.pool.get(self.params.actions[index])
        return (
            f"{lex.think_open}I still need information for this question; "
            f"{model.display_name} looks suitable.{lex.think_close}\n"
            f"{lex.route_open}{model.display_name}: {self.question}{lex.route_close}"
        )

    def _emit_answer(self) -> str:
        lex = self.lexicon
        answer = " ".join(self._facts) if self._facts else ABSTAIN_TEXT
        return (
            f"{lex.think_open}I have enough to answer now.{lex.think_close}\n"
            f"{lex.answer_open}{answer}{lex.answer_close}"
        )

    def _absorb_info(self, delta: str) -> None:
        # Every helpful reply's first line is kept, duplicates included: the
        # answer is a faithful join of what was gathered, so redundant calls
        # degrade it and exact match itself penalizes over-routing.
        lex = self.lexicon
        pairs = [(lex.info_open, lex.info_close)] + list(lex.info_aliases)
        for opener, closer in pairs:
            cursor = 0
            while True:
                start = delta.find(opener, cursor)
                if start == -1:
                    break
                end = delta.find(closer, start + len(opener))
                if end == -1:
                    break
                interior = delta[start + len(opener) : end].strip()
                cursor = end + len(closer)
                if not interior or interior.startswith(UNHELPFUL_INFO_PREFIXES):
                    continue
                fact = interior.splitlines()[0].strip()
                if fact:
                    self._facts.append(fact)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def surrogate_objective(
    weights: np.ndarray,
    batch: Sequence[EpisodeSample],
    baseline: float,
    reference: PolicyParams,
    config: TrainConfig,
) -> float:
    """Batch-mean REINFORCE surrogate with the KL penalty, as a pure
    function of ``weights`` so it can be checked by finite differences."""
    temperature = config.temperature
    total = 0.0
    for sample in batch:
        advantage = sample.reward - baseline
        episode_term = 0.0
        for step in sample.steps:
            logits = step.features @ weights / temperature
            log_probs = _log_softmax(logits)
            episode_term += advantage * log_probs[step.action]
            if config.beta > 0.0:
                ref_logits = (
                    step.features @ reference.weights / reference.temperature
                )
                ref_log_probs = _log_softmax(ref_logits)
                probs = np.exp(log_probs)
                kl = float(np.sum(probs * (log_probs - ref_log_probs)))
                episode_term -= config.beta * kl
        total += episode_term
    return total / len(batch)


def surrogate_gradient(
    weights: np.ndarray,
    batch: Sequence[EpisodeSample],
    baseline: float,
    reference: PolicyParams,
    config: TrainConfig,
) -> np.ndarray:
    """Analytic gradient of `surrogate_objective` with respect to weights.

    Per decision step with features f, sampled action a, probabilities p and
    reference probabilities q (temperature tau):

        d log pi(a) / dW = outer(f, onehot(a) - p) / tau
        d KL(p || q) / dW = outer(f, p * (log(p / q) - KL)) / tau
    """
    temperature = config.temperature
    grad = np.zeros_like(weights)
    for sample in batch:
        advantage = sample.reward - baseline
        for step in sample.steps:
            logits = step.features @ weights / temperature
            log_probs = _log_softmax(logits)
            probs = np.exp(log_probs)
            direction = -probs.copy()
            direction[step.action] += 1.0
            grad += advantage * np.outer(step.features, direction) / temperature
            if config.beta > 0.0:
                ref_logits = (
                    step.features @ reference.weights / reference.temperature
                )
                ref_log_probs = _log_softmax(ref_logits)
                log_ratio = log_probs - ref_log_probs
                kl = float(np.sum(probs * log_ratio))
                kl_dir = probs * (log_ratio - kl)
                grad -= config.beta * np.outer(step.features, kl_dir) / temperature
    return grad / len(batch)


def policy_gradient_step(
    params: PolicyParams,
    batch: Sequence[EpisodeSample],
    reference: PolicyParams,
    config: TrainConfig,
    baseline: float,
) -> tuple[PolicyParams, float]:
    """One ascent step on the surrogate; returns (new params, new baseline).

    Advantages use the incoming baseline; the baseline then absorbs the
    batch's mean reward by exponential moving average.
    """
    grad = surrogate_gradient(params.weights, batch, baseline, reference, config)
    updated = params.copy()
    updated.weights = params.weights + config.learning_rate * grad
    mean_reward = float(np.mean([sample.reward for sample in batch]))
    momentum = config.baseline_momentum
    new_baseline = momentum * baseline + (1.0 - momentum) * mean_reward
    return updated, new_baseline


@dataclass
class TrainReport:
    mean_reward: list[float] = field(default_factory=list)
    mean_cost: list[float] = field(default_factory=list)
    entropy: list[float] = field(default_factory=list)
    route_fractions: list[dict[str, float]] = field(default_factory=list)
    params: Optional[PolicyParams] = None

    def step_records(self) -> list[dict]:
        return [
            {
                "step": i,
                "mean_reward": self.mean_reward[i],
                "mean_cost": self.mean_cost[i],
                "entropy": self.entropy[i],
                "route_fractions": self.route_fractions[i],
            }
            for i in range(len(self.mean_reward))
        ]


def rollout(
    params: PolicyParams,
    question: str,
    golds: list[str],
    pool: RoutingPool,
    window: CostWindow,
    engine_config: EngineConfig,
    reward_config: RewardConfig,
    rng: np.random.Generator,
) -> tuple[Episode, EpisodeSample]:
    """Run one training episode and package it for the gradient step."""
    policy = LearnedRoutingPolicy(
        params,
        question,
        pool,
        rng,
        engine_config.lexicon,
        max_steps=engine_config.max_routing_steps,
    )
    episode = run_episode(
        question, golds, policy, pool, window, engine_config, reward_config
    )
    sample = EpisodeSample(reward=episode.rewards.total, steps=policy.decisions)
    return episode, sample


def train(
    tasks: Sequence,
    pool: RoutingPool,
    config: TrainConfig = TrainConfig(),
    reward_config: RewardConfig = RewardConfig(),
    engine_config: EngineConfig = EngineConfig(),
    warmup_costs: Sequence[float] = (),
) -> TrainReport:
    """Train the routing head on tasks with .question and .golds attributes.

    Tasks are cycled deterministically; all stochasticity flows from
    ``config.seed``, so identical inputs reproduce the report bit for bit.
    ``warmup_costs`` pre-populates the cost window, anchoring normalization
    before the first batch the same way eval warmup does.
    """
    if not tasks:
        raise ValueError("tasks must be nonempty")
    rng = np.random.default_rng(config.seed)
    params = PolicyParams.initial(config.feature_dim, pool, config.temperature)
    reference = params.copy()
    window = CostWindow(reward_config.window_capacity)
    for cost in warmup_costs:
        cost_reward(window, cost, reward_config)
    baseline = 0.0
    report = TrainReport()

    for step in range(config.steps):
        batch: list[EpisodeSample] = []
        costs: list[float] = []
        entropies: list[float] = []
        call_counts: dict[str, int] = {d.id: 0 for d in pool}
        total_calls = 0
        for i in range(config.batch_size):
            task = tasks[(step * config.batch_size + i) % len(tasks)]
            episode, sample = rollout(
                params,
                task.question,
                task.golds,
                pool,
                window,
                engine_config,
                reward_config,
                rng,
            )
            batch.append(sample)
            costs.append(episode.rewards.cost_raw)
            for decision in sample.steps:
                probs = action_distribution(params, decision.features)
                entropies.append(float(-np.sum(probs * np.log(probs + 1e-12))))
            for call in episode.calls:
                if call.model_id in call_counts:
                    call_counts[call.model_id] += 1
                total_calls += 1

        report.mean_reward.append(float(np.mean([s.reward for s in batch])))
        report.mean_cost.append(float(np.mean(costs)))
        report.entropy.append(float(np.mean(entropies)) if entropies else 0.0)
        report.route_fractions.append(
            {
                model_id: (count / total_calls if total_calls else 0.0)
                for model_id, count in call_counts.items()
            }
        )
        params, baseline = policy_gradient_step(
            params, batch, reference, config, baseline
        )

    report.params = params
    return report


@dataclass
class SyntheticTask:
    """Training task over invented object attributes.

    ``facts`` maps model id to the answer fragment that model's knowledge
    base holds for this question; ``kind`` is "single" or "two".
    """

    question: str
    golds: list[str]
    facts: dict[str, str]
    kind: str


_COLORS = (
    "crimson", "teal", "amber", "violet", "olive", "indigo", "coral",
    "maroon", "silver", "turquoise",
)
_SHAPES = (
    "hexagon", "spiral", "cube", "wedge", "prism", "torus", "crescent",
    "lattice", "cylinder", "rhombus",
)
_ADJECTIVES = (
    "polished", "ancient", "humming", "dusty", "gilded", "woven", "frosted",
    "carved", "painted", "braided",
)
_NOUNS = (
    "beacon", "compass", "lantern", "tablet", "orrery", "chalice", "loom",
    "sundial", "astrolabe", "bellows",
)


def make_synthetic_tasks(
    n_tasks: int,
    strong_id: str,
    weak_id: str,
    seed: int = 0,
    two_fact_ratio: float = 0.0,
) -> list[SyntheticTask]:
    """Build attribute-lookup tasks answerable from simulated model KBs.

    Single-fact tasks ask for a color both models hold.  Two-fact tasks ask
    for color and shape, split across the two models, so answering them well
    requires one call to each.
    """
    rng = np.random.default_rng(seed)
    tasks: list[SyntheticTask] = []
    seen_objects: set[str] = set()
    while len(tasks) < n_tasks:
        obj = (
            f"{_ADJECTIVES[rng.integers(len(_ADJECTIVES))]} "
            f"{_NOUNS[rng.integers(len(_NOUNS))]} "
            f"{int(rng.integers(100)):02d}"
        )
        if obj in seen_objects:
            continue
        seen_objects.add(obj)
        color = _COLORS[rng.integers(len(_COLORS))]
        if rng.random() < two_fact_ratio:
            shape = _SHAPES[rng.integers(len(_SHAPES))]
            tasks.append(
                SyntheticTask(
                    question=f"what are the color and shape of the {obj}?",
                    golds=[f"{color} {shape}", f"{shape} {color}"],
                    facts={strong_id: color, weak_id: shape},
                    kind="two",
                )
            )
        else:
            tasks.append(
                SyntheticTask(
                    question=f"what is the color of the {obj}?",
                    golds=[color],
                    facts={strong_id: color, weak_id: color},
                    kind="single",
                )
            )
    return tasks


def knowledge_bases_for(tasks: Sequence[SyntheticTask]) -> dict[str, dict]:
    """Per-model KBs (normalized question -> answer) for the task set."""
    from .rewards import normalize_answer

    kbs: dict[str, dict] = {}
    for task in tasks:
        key = normalize_answer(task.question)
        for model_id, answer in task.facts.items():
            kbs.setdefault(model_id, {})[key] = answer
    return kbs
