"""Candidate model pool: descriptors, backends, and call dispatch.

The pool is an ordered registry of model descriptors.  Names resolve
case-insensitively against both ids and display names.  Dispatch wraps a
sub-query in the fixed assistant prompt, invokes the descriptor's backend,
truncates the reply to the per-call token cap, and prices it.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from typing import Optional

import requests

from .rewards import normalize_answer

# Fixed reply a simulated model gives when it cannot answer.
UNABLE_RESPONSE = (
    "I am unable to assist with this question. "
    "Please consult other LLMs for further assistance."
)

# Last line of the assistant prompt; simulated backends recover the
# sub-query by taking everything after the final occurrence.
SUB_QUERY_MARKER = "Here is the sub-question for you to assist with:"

ASSIST_PROMPT = (
    "You are a helpful assistant supporting another model that answers a "
    "multi-hop question by delegating sub-questions.\n"
    "If you know the answer to the sub-question below, reply with the answer "
    "or with context that helps locate it. Keep the reply concise and do not "
    "pad it with unrelated explanation.\n"
    "If you cannot answer, state that you are unable to assist so other LLMs "
    "can be consulted instead.\n"
    f"{SUB_QUERY_MARKER} {{sub_query}}"
)

_FILLER_WORDS = (
    "supporting context follows covering adjacent details "
    "records sources and related notes for completeness"
).split()


class DuplicateIdError(ValueError):
    pass


class UnknownModelError(KeyError):
    pass


class BackendTimeout(RuntimeError):
    pass


class BackendError(RuntimeError):
    def __init__(self, status: int, detail: str = ""):
        self.status = status
        super().__init__(f"backend returned status {status}: {detail}")


def canonical(name: str) -> str:
    return name.strip().lower()


def unit_draw(seed: int, label: str, text: str) -> float:
    """Deterministic stateless draw in [0, 1) keyed by (seed, label, text)."""
    digest = hashlib.sha256(f"{seed}|{label}|{text}".encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def token_count(text: str) -> int:
    """Whitespace token count, the accounting unit for response budgets."""
    return len(text.split())


def truncate_tokens(text: str, limit: int) -> str:
    words = text.split()
    if len(words) <= limit:
        return text
    return " ".join(words[:limit])


@dataclass(frozen=True)
class SimulatedProfile:
    """Behavior knobs for a simulated model.

    knowledge_base maps normalized question keys to answer strings; accuracy
    is the probability of answering when the key is present; verbosity is the
    approximate reply length in whitespace tokens.
    """

    knowledge_base: dict = field(default_factory=dict)
    accuracy: float = 1.0
    verbosity: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must be in [0, 1]")
        if self.verbosity < 1:
            raise ValueError("verbosity must be >= 1")


class SimulatedBackend:
    """Deterministic in-process stand-in for a remote model.

    All randomness is a pure function of (profile.seed, sub_query), so
    repeated identical calls return byte-identical replies with no shared
    state between calls.
    """

    def __init__(self, profile: SimulatedProfile):
        self.profile = profile

    def complete(
        self, prompt: str, max_tokens: int, timeout_ms: float = 30000.0
    ) -> tuple[str, Optional[int], Optional[float]]:
        sub_query = self._extract_sub_query(prompt)
        key = normalize_answer(sub_query)
        profile = self.profile
        answer = profile.knowledge_base.get(key)
        if answer is None or unit_draw(profile.seed, "accuracy", sub_query) >= (
            profile.accuracy
        ):
            return self._pad_to_verbosity(UNABLE_RESPONSE), None, 0.0
        answer_line = " ".join(str(answer).split())
        return self._pad_to_verbosity(answer_line), None, 0.0

    def _pad_to_verbosity(self, content: str) -> str:
        """Fixed reply length: exactly ``verbosity`` tokens unless the content
        itself is longer, so a model's per-call cost does not leak whether it
        answered."""
        padding = self.profile.verbosity - token_count(content)
        if padding <= 0:
            return content
        filler = [_FILLER_WORDS[i % len(_FILLER_WORDS)] for i in range(padding)]
        return content + "\n" + " ".join(filler)

    @staticmethod
    def _extract_sub_query(prompt: str) -> str:
        marker_at = prompt.rfind(SUB_QUERY_MARKER)
        if marker_at == -1:
            return prompt.strip()
        return prompt[marker_at + len(SUB_QUERY_MARKER) :].strip()


def _chat_completion(
    url: str,
    api_key: str,
    model: str,
    prompt: str,
    max_tokens: int,
    temperature: float,
    timeout_ms: float,
    stop: Optional[list[str]] = None,
) -> tuple[str, Optional[int], Optional[str]]:
    """POST one chat completion; returns (text, completion_tokens, finish_reason).

    Retries once on timeout, connection failure, or 5xx, then raises
    BackendTimeout / BackendError.
    """
    payload = {
        "model": model,
        "messages": [{"role": "user", "content": prompt}],
        "max_tokens": max_tokens,
        "temperature": temperature,
    }
    if stop:
        payload["stop"] = stop
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    last_exc: Exception | None = None
    last_status: Optional[int] = None
    for _ in range(2):
        try:
            response = requests.post(
                url, json=payload, headers=headers, timeout=timeout_ms / 1000.0
            )
        except requests.Timeout as exc:
            last_exc = exc
            continue
        except requests.ConnectionError as exc:
            last_exc = exc
            continue
        if response.status_code >= 500:
            last_status = response.status_code
            continue
        if response.status_code != 200:
            raise BackendError(response.status_code, response.text[:200])
        body = response.json()
        choice = body["choices"][0]
        if "message" in choice:
            text = choice["message"].get("content") or ""
        else:
            text = choice.get("text") or ""
        usage = body.get("usage") or {}
        tokens = usage.get("completion_tokens")
        return text, tokens, choice.get("finish_reason")

    if last_status is not None:
        raise BackendError(last_status, "retried once")
    raise BackendTimeout(str(last_exc))


class HttpBackend:
    """Chat-completions backend for a remote model endpoint.

    The endpoint URL and API key are read from environment variables at call
    time so credentials never live in config files.
    """

    def __init__(
        self,
        model: str,
        url_env: str = "MULTIROUTE_API_URL",
        api_key_env: str = "MULTIROUTE_API_KEY",
        temperature: float = 0.0,
    ):
        self.model = model
        self.url_env = url_env
        self.api_key_env = api_key_env
        self.temperature = temperature

    def complete(
        self, prompt: str, max_tokens: int, timeout_ms: float = 30000.0
    ) -> tuple[str, Optional[int], Optional[float]]:
        url = os.environ.get(self.url_env)
        if not url:
            raise BackendError(0, f"environment variable {self.url_env} is not set")
        api_key = os.environ.get(self.api_key_env, "")
        started = time.perf_counter()
        text, tokens, _ = _chat_completion(
            url,
            api_key,
            self.model,
            prompt,
            max_tokens,
            self.temperature,
            timeout_ms,
        )
        latency_ms = (time.perf_counter() - started) * 1000.0
        return text, tokens, latency_ms


@dataclass
class ModelDescriptor:
    """One routable model: identity, pricing, capability blurb, backend."""

    id: str
    display_name: str
    param_count_b: float
    cost_per_token: float
    descriptor_text: str
    backend: object

    def __post_init__(self) -> None:
        if not self.id.strip():
            raise ValueError("model id must be nonempty")
        if not self.display_name.strip():
            raise ValueError("display_name must be nonempty")
        if self.param_count_b <= 0:
            raise ValueError("param_count_b must be positive")
        if self.cost_per_token < 0:
            raise ValueError("cost_per_token must be nonnegative")
        if not self.descriptor_text.strip():
            raise ValueError("descriptor_text must be nonempty")


class RoutingPool:
    """Ordered registry of model descriptors.

    Registration is single-writer; resolution is read-only and safe to share
    across threads.  Ids and display names share one canonical namespace so
    a directive can use either form.
    """

    def __init__(self, descriptors=()):
        self._order: list[ModelDescriptor] = []
        self._index: dict[str, ModelDescriptor] = {}
        for descriptor in descriptors:
            self.register(descriptor)

    def register(self, descriptor: ModelDescriptor) -> "RoutingPool":
        keys = {canonical(descriptor.id), canonical(descriptor.display_name)}
        clash = keys & self._index.keys()
        if clash:
            raise DuplicateIdError(
                f"model name(s) already registered: {sorted(clash)}"
            )
        self._order.append(descriptor)
        for key in keys:
            self._index[key] = descriptor
        return self

    def resolve(self, name: str) -> Optional[ModelDescriptor]:
        return self._index.get(canonical(name))

    def get(self, model_id: str) -> ModelDescriptor:
        descriptor = self.resolve(model_id)
        if descriptor is None:
            raise UnknownModelError(model_id)
        return descriptor

    @property
    def descriptors(self) -> tuple[ModelDescriptor, ...]:
        return tuple(self._order)

    def __len__(self) -> int:
        return len(self._order)

    def __iter__(self):
        return iter(self._order)


@dataclass
class CallRecord:
    """Outcome of one routed call.

    ``error`` is None for completed calls; failed calls carry zero tokens and
    zero cost so an episode's spend audit only counts delivered responses.
    """

    model_id: str
    sub_query: str
    response_text: str
    output_tokens: int
    cost: float
    latency_ms: float
    error: Optional[str] = None

    def to_record(self) -> dict:
        return {
            "model_id": self.model_id,
            "sub_query": self.sub_query,
            "response_text": self.response_text,
            "output_tokens": self.output_tokens,
            "cost": self.cost,
            "latency_ms": self.latency_ms,
            "error": self.error,
        }


def render_assist_prompt(sub_query: str) -> str:
    return ASSIST_PROMPT.format(sub_query=sub_query)


def dispatch(
    pool: RoutingPool,
    model_id: str,
    sub_query: str,
    max_api_response_tokens: int = 600,
    timeout_ms: float = 30000.0,
) -> CallRecord:
    """Send one sub-query to a pool model and price the reply.

    The reply is truncated to ``max_api_response_tokens`` whitespace tokens.
    ``output_tokens`` is the backend-reported usage when available and the
    reply was not truncated, else the post-truncation whitespace count.

    Raises:
        UnknownModelError: ``model_id`` does not resolve.
        ValueError: empty sub_query.
        BackendTimeout / BackendError: propagated from the backend.
    """
    descriptor = pool.get(model_id)
    if not sub_query.strip():
        raise ValueError("sub_query must be nonempty")
    prompt = render_assist_prompt(sub_query)
    text, reported_tokens, reported_latency = descriptor.backend.complete(
        prompt, max_tokens=max_api_response_tokens, timeout_ms=timeout_ms
    )
    measured = token_count(text)
    if measured > max_api_response_tokens:
        text = truncate_tokens(text, max_api_response_tokens)
        tokens = max_api_response_tokens
    elif reported_tokens is not None:
        tokens = reported_tokens
    else:
        tokens = measured
    return CallRecord(
        model_id=descriptor.id,
        sub_query=sub_query,
        response_text=text,
        output_tokens=tokens,
        cost=descriptor.cost_per_token * tokens,
        latency_ms=reported_latency if reported_latency is not None else 0.0,
    )


def load_knowledge_base(path: str) -> dict:
    """Load a JSONL knowledge base of {"key": ..., "answer": ...} rows.

    Keys are normalized the same way answers are compared, so lookups match
    questions regardless of case, articles, or punctuation.
    """
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                key = row["key"]
                answer = row["answer"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: bad knowledge row: {exc}")
            entries[normalize_answer(str(key))] = str(answer)
    return entries
