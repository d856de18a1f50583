"""Multi-round episode engine.

Drives a policy through interleaved think / route / info / answer turns:
generation stops at route or answer close tags, routed sub-queries are
dispatched to pool models, and their replies are injected as info blocks the
policy never emits itself (they are excluded from the training loss via
``mask_spans``).  The finished trajectory is validated and scored.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Optional

from .pool import (
    BackendError,
    BackendTimeout,
    CallRecord,
    RoutingPool,
    dispatch,
    token_count,
    truncate_tokens,
)
from .protocol import (
    DEFAULT_LEXICON,
    DirectiveError,
    FormatVerdict,
    TagLexicon,
    Trajectory,
    extract_answer,
    loss_mask,
    parse_route_directive,
    parse_trajectory,
    validate_format,
    ParseFailure,
)
from .rewards import (
    CostWindow,
    RewardBreakdown,
    RewardConfig,
    compose_breakdown,
    cost_reward,
    episode_cost_raw,
    exact_match,
    format_reward,
)

# Info text injected when a dispatched call fails at the backend.
NO_ASSISTANCE_TEXT = "No assistance available for this step."

# Info prefixes that carry no usable answer; policies may use these to tell
# helpful replies apart from canned failure notices.
UNHELPFUL_INFO_PREFIXES = (
    "Routing error",
    "No assistance available",
    "I am unable to assist",
)

PROMPT_TEMPLATE = (
    "Answer the given question. Every time you receive new information, you "
    "must first conduct reasoning inside {think_open} and {think_close}.\n"
    "After reasoning, if you find you lack some knowledge, you can call a "
    "specialized LLM by writing a query inside "
    "{route_open} Candidate LLM: Query {route_close}.\n"
    'Before each LLM call, you must explicitly reason inside {think_open} and '
    '{think_close} about "why external information is needed" and "which LLM '
    'from the list is most suitable for answering your query," based on the '
    "brief model descriptions provided below.\n"
    "When you call an LLM, the response will be returned between {info_open} "
    "and {info_close}.\n"
    "You are encouraged to explore and utilize different LLMs multiple times "
    "to better understand their respective strengths and weaknesses, as well "
    "as gather more comprehensive information.\n"
    "Description of LLM Candidates: {candidates_intro}\n"
    "If you find that no further external knowledge is needed, you can "
    "directly provide your final answer inside {answer_open} and "
    "{answer_close}, without additional explanation or illustration.\n"
    "Question: {question}\n"
)


class EmptyPoolError(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    max_routing_steps: int = 4
    max_response_tokens: int = 1024
    max_sequence_tokens: int = 4096
    max_api_response_tokens: int = 600
    timeout_ms: float = 30000.0
    lexicon: TagLexicon = DEFAULT_LEXICON

    def __post_init__(self) -> None:
        for name in (
            "max_routing_steps",
            "max_response_tokens",
            "max_sequence_tokens",
            "max_api_response_tokens",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.max_api_response_tokens > self.max_sequence_tokens:
            raise ValueError(
                "max_api_response_tokens cannot exceed max_sequence_tokens"
            )


class PolicyBackend(abc.ABC):
    """Text generator driven by the engine.

    ``generate`` must return text that ends at (and includes) the first
    emitted stop marker, or runs to at most ``max_tokens`` when no marker is
    produced.
    """

    @abc.abstractmethod
    def generate(
        self, context: str, stop_markers: list[str], max_tokens: int
    ) -> str:
        raise NotImplementedError


@dataclass
class Episode:
    question: str
    golds: Optional[list[str]]
    raw_trajectory: str
    trajectory: Optional[Trajectory]
    verdict: Optional[FormatVerdict]
    calls: list[CallRecord]
    final_answer: Optional[str]
    rewards: Optional[RewardBreakdown]
    mask_spans: list[tuple[int, int]] = field(default_factory=list)
    route_count: int = 0

    def to_record(self) -> dict:
        return {
            "question": self.question,
            "golds": self.golds,
            "raw_trajectory": self.raw_trajectory,
            "final_answer": self.final_answer,
            "route_count": self.route_count,
            "mask_spans": [list(span) for span in self.mask_spans],
            "calls": [call.to_record() for call in self.calls],
            "rewards": self.rewards.to_record() if self.rewards else None,
            "format_violations": (
                [v.to_record() for v in self.verdict.violations]
                if self.verdict
                else []
            ),
        }


def build_prompt(
    question: str, pool: RoutingPool, lexicon: TagLexicon = DEFAULT_LEXICON
) -> str:
    """Render the routing prompt with candidate descriptions in pool order."""
    if len(pool) == 0:
        raise EmptyPoolError("cannot build a routing prompt over an empty pool")
    candidates = "\n".join(
        f"{d.display_name}: {d.descriptor_text}" for d in pool
    )
    return PROMPT_TEMPLATE.format(
        think_open=lexicon.think_open,
        think_close=lexicon.think_close,
        route_open=lexicon.route_open,
        route_close=lexicon.route_close,
        info_open=lexicon.info_open,
        info_close=lexicon.info_close,
        answer_open=lexicon.answer_open,
        answer_close=lexicon.answer_close,
        candidates_intro="\n" + candidates,
        question=question,
    )


def _directive_error_notice(error: DirectiveError) -> str:
    return (
        f"Routing error ({error.kind.value}): {error}. "
        "No assistance available for this step."
    )


def _handle_route(
    interior: str,
    pool: RoutingPool,
    config: EngineConfig,
) -> tuple[CallRecord, str]:
    """Resolve and dispatch one route interior; never raises.

    Failures produce a zero-cost CallRecord with ``error`` set plus a canned
    info text, so every route consumes budget and appears in the audit trail.
    """
    try:
        model_id, sub_query = parse_route_directive(interior, pool)
    except DirectiveError as exc:
        notice = _directive_error_notice(exc)
        record = CallRecord(
            model_id=exc.name.strip() or "(unrouted)",
            sub_query=interior.strip(),
            response_text=notice,
            output_tokens=0,
            cost=0.0,
            latency_ms=0.0,
            error=str(exc),
        )
        return record, notice
    try:
        record = dispatch(
            pool,
            model_id,
            sub_query,
            max_api_response_tokens=config.max_api_response_tokens,
            timeout_ms=config.timeout_ms,
        )
        return record, record.response_text
    except (BackendTimeout, BackendError) as exc:
        record = CallRecord(
            model_id=model_id,
            sub_query=sub_query,
            response_text=NO_ASSISTANCE_TEXT,
            output_tokens=0,
            cost=0.0,
            latency_ms=0.0,
            error=str(exc),
        )
        return record, NO_ASSISTANCE_TEXT


def _fit_info_to_budget(
    info_text: str, prompt: str, trajectory_text: str, config: EngineConfig, lexicon: TagLexicon
) -> str:
    """Trim info content so the full context stays under the sequence cap."""
    while True:
        block = f"\n{lexicon.info_open}{info_text}{lexicon.info_close}\n"
        overflow = (
            token_count(prompt + trajectory_text + block)
            - config.max_sequence_tokens
        )
        if overflow <= 0:
            return block
        words = info_text.split()
        if not words:
            return block
        info_text = " ".join(words[: max(0, len(words) - overflow)])


def run_episode(
    question: str,
    golds: Optional[list[str]],
    policy: PolicyBackend,
    pool: RoutingPool,
    window: CostWindow,
    config: EngineConfig = EngineConfig(),
    reward_config: RewardConfig = RewardConfig(),
) -> Episode:
    """Run one question through the policy until it answers or stalls.

    Episodes with ``golds`` get a full reward breakdown (and push their cost
    into ``window``); unscored episodes (``golds is None``) do not touch the
    window and carry ``rewards=None``.
    """
    lexicon = config.lexicon
    prompt = build_prompt(question, pool, lexicon)
    trajectory_text = ""
    calls: list[CallRecord] = []

    while True:
        budget_left = len(calls) < config.max_routing_steps
        stops = (
            [lexicon.route_close, lexicon.answer_close]
            if budget_left
            else [lexicon.answer_close]
        )
        continuation = policy.generate(
            prompt + trajectory_text, stops, config.max_response_tokens
        )
        trajectory_text += continuation
        trimmed = continuation.rstrip()
        if not (budget_left and trimmed.endswith(lexicon.route_close)):
            break
        open_at = trimmed.rfind(lexicon.route_open)
        if open_at == -1:
            break
        interior = trimmed[open_at + len(lexicon.route_open) : -len(lexicon.route_close)]
        record, info_text = _handle_route(interior, pool, config)
        calls.append(record)
        trajectory_text += _fit_info_to_budget(
            info_text, prompt, trajectory_text, config, lexicon
        )

    verdict = validate_format(trajectory_text, lexicon, pool)
    try:
        trajectory = parse_trajectory(trajectory_text, lexicon)
    except ParseFailure:
        trajectory = None
    final_answer = extract_answer(trajectory) if trajectory else None
    cost_raw = episode_cost_raw(calls)

    rewards: Optional[RewardBreakdown] = None
    if golds is not None:
        outcome = (
            float(exact_match(final_answer, golds))
            if final_answer is not None
            else 0.0
        )
        cost_norm = cost_reward(window, cost_raw, reward_config)
        rewards = compose_breakdown(
            format_reward(verdict), outcome, cost_raw, cost_norm, reward_config.alpha
        )

    return Episode(
        question=question,
        golds=golds,
        raw_trajectory=trajectory_text,
        trajectory=trajectory,
        verdict=verdict,
        calls=calls,
        final_answer=final_answer,
        rewards=rewards,
        mask_spans=loss_mask(trajectory) if trajectory else [],
        route_count=len(calls),
    )
