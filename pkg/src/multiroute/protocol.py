"""Tagged trajectory protocol: parsing, route directives, and format validation.

A trajectory is a flat sequence of tagged blocks (think / route / info /
answer) with arbitrary untagged text allowed between blocks.  Parsing is a
single left-to-right scan: the earliest tag lexeme wins, block interiors are
taken non-greedily up to the matching close lexeme, and nesting is rejected.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .pool import RoutingPool


class BlockKind(Enum):
    THINK = "think"
    ROUTE = "route"
    INFO = "info"
    ANSWER = "answer"


@dataclass(frozen=True)
class TagLexicon:
    """Configurable tag lexemes for the four block kinds.

    ``info_aliases`` lists extra (open, close) pairs accepted for info blocks
    at parse time; emission always uses the primary pair.  All lexemes must be
    nonempty, pairwise distinct, and no lexeme may be a substring of another,
    so any text position matches at most one lexeme.
    """

    think_open: str = "<think>"
    think_close: str = "</think>"
    route_open: str = "<search>"
    route_close: str = "</search>"
    info_open: str = "<information>"
    info_close: str = "</information>"
    answer_open: str = "<answer>"
    answer_close: str = "</answer>"
    info_aliases: tuple[tuple[str, str], ...] = (("<info>", "</info>"),)

    def __post_init__(self) -> None:
        lexemes = list(self.primary_pairs_flat()) + [
            lex for pair in self.info_aliases for lex in pair
        ]
        if any(not lex for lex in lexemes):
            raise ValueError("tag lexemes must be nonempty")
        if len(set(lexemes)) != len(lexemes):
            raise ValueError("tag lexemes must be pairwise distinct")
        for a in lexemes:
            for b in lexemes:
                if a != b and a in b:
                    raise ValueError(
                        f"lexeme {a!r} is a substring of {b!r}; "
                        "scanning would be ambiguous"
                    )

    def primary_pairs_flat(self) -> tuple[str, ...]:
        return (
            self.think_open,
            self.think_close,
            self.route_open,
            self.route_close,
            self.info_open,
            self.info_close,
            self.answer_open,
            self.answer_close,
        )

    def open_close_pairs(self) -> tuple[tuple[str, str, BlockKind], ...]:
        """All accepted (open, close, kind) triples, aliases included."""
        pairs = [
            (self.think_open, self.think_close, BlockKind.THINK),
            (self.route_open, self.route_close, BlockKind.ROUTE),
            (self.info_open, self.info_close, BlockKind.INFO),
            (self.answer_open, self.answer_close, BlockKind.ANSWER),
        ]
        pairs.extend((o, c, BlockKind.INFO) for o, c in self.info_aliases)
        return tuple(pairs)


DEFAULT_LEXICON = TagLexicon()


class ParseFailure(ValueError):
    """Raised when a trajectory cannot be parsed into balanced blocks."""

    def __init__(self, offset: int, expected: str, found: str):
        self.offset = offset
        self.expected = expected
        self.found = found
        super().__init__(
            f"at offset {offset}: expected {expected!r}, found {found!r}"
        )


class DirectiveErrorKind(Enum):
    NO_COLON = "no_colon"
    EMPTY_NAME = "empty_name"
    EMPTY_QUERY = "empty_query"
    UNKNOWN_MODEL = "unknown_model"


class DirectiveError(ValueError):
    """Raised when a route block's interior is not a usable directive."""

    def __init__(self, kind: DirectiveErrorKind, detail: str, name: str = ""):
        self.kind = kind
        self.name = name
        super().__init__(detail)


@dataclass
class Block:
    """One tagged block.  ``span`` covers the tags; ``text`` is the interior.

    Offsets are code-point indices into the raw string.  For route blocks,
    ``model_name`` / ``sub_query`` hold the trimmed halves around the first
    colon of the interior (empty when there is no colon); resolution against
    a pool is a separate step (`parse_route_directive`).
    """

    kind: BlockKind
    text: str
    span: tuple[int, int]
    model_name: str = ""
    sub_query: str = ""


@dataclass
class Trajectory:
    raw: str
    blocks: list[Block]
    inter_block_text: list[str] = field(default_factory=list)

    def reconstruct(self) -> str:
        """Reassemble the raw text from blocks and surrounding text."""
        parts = [self.inter_block_text[0]]
        for block, trailing in zip(self.blocks, self.inter_block_text[1:]):
            start, end = block.span
            parts.append(self.raw[start:end])
            parts.append(trailing)
        return "".join(parts)


class FormatRule(Enum):
    TAG_BALANCE = "tag_balance"
    STARTS_THINK_ENDS_ANSWER = "starts_think_ends_answer"
    THINK_ANSWER_COUNT = "think_answer_count"
    ROUTE_INFO_PAIRING = "route_info_pairing"
    ROUTE_DIRECTIVE = "route_directive"


@dataclass
class Violation:
    rule: FormatRule
    message: str
    offset: int | None = None

    def to_record(self) -> dict:
        return {"rule": self.rule.value, "message": self.message, "offset": self.offset}


@dataclass
class FormatVerdict:
    ok: bool
    violations: list[Violation]

    @property
    def violated_rules(self) -> set[FormatRule]:
        return {v.rule for v in self.violations}


@functools.lru_cache(maxsize=64)
def _scanner(lexicon: TagLexicon):
    """Build (regex, open-table, close-set) for one lexicon, cached."""
    opens = {o: (c, kind) for o, c, kind in lexicon.open_close_pairs()}
    closes = {c for _, c, _ in lexicon.open_close_pairs()}
    alternation = "|".join(
        re.escape(lex) for lex in sorted(set(opens) | closes, key=len, reverse=True)
    )
    return re.compile(alternation), opens, closes


def parse_trajectory(raw: str, lexicon: TagLexicon = DEFAULT_LEXICON) -> Trajectory:
    """Parse ``raw`` into a flat block sequence.

    Raises:
        ParseFailure: on a close lexeme with no open block, any tag lexeme
            other than the matching close inside a block (nesting), or end of
            input before an open block is closed.
    """
    pattern, opens, _ = _scanner(lexicon)
    blocks: list[Block] = []
    inter: list[str] = []
    pos = 0
    last_end = 0
    while True:
        match = pattern.search(raw, pos)
        if match is None:
            break
        lexeme = match.group()
        if lexeme not in opens:
            raise ParseFailure(match.start(), "an opening tag", lexeme)
        close_lex, kind = opens[lexeme]
        interior_start = match.end()
        inner = pattern.search(raw, interior_start)
        if inner is None:
            raise ParseFailure(len(raw), close_lex, "end of input")
        if inner.group() != close_lex:
            raise ParseFailure(inner.start(), close_lex, inner.group())
        text = raw[interior_start : inner.start()]
        end = inner.end()
        block = Block(kind, text, (match.start(), end))
        if kind is BlockKind.ROUTE and ":" in text:
            name, _, query = text.partition(":")
            block.model_name = name.strip()
            block.sub_query = query.strip()
        inter.append(raw[last_end : match.start()])
        blocks.append(block)
        last_end = end
        pos = end
    inter.append(raw[last_end:])
    return Trajectory(raw=raw, blocks=blocks, inter_block_text=inter)


def parse_route_directive(text: str, pool: "RoutingPool") -> tuple[str, str]:
    """Split a route interior into (model_id, sub_query).

    The interior is split at the first colon; both halves are trimmed; the
    name is resolved case-insensitively against pool ids and display names.

    Raises:
        DirectiveError: NO_COLON, EMPTY_NAME, EMPTY_QUERY, or UNKNOWN_MODEL.
    """
    if ":" not in text:
        raise DirectiveError(
            DirectiveErrorKind.NO_COLON, "route directive has no colon separator"
        )
    name, _, query = text.partition(":")
    name = name.strip()
    query = query.strip()
    if not name:
        raise DirectiveError(
            DirectiveErrorKind.EMPTY_NAME, "route directive has an empty model name"
        )
    if not query:
        raise DirectiveError(
            DirectiveErrorKind.EMPTY_QUERY, "route directive has an empty query"
        )
    descriptor = pool.resolve(name)
    if descriptor is None:
        raise DirectiveError(
            DirectiveErrorKind.UNKNOWN_MODEL,
            f"route directive names unknown model {name!r}",
            name=name,
        )
    return descriptor.id, query


def validate_format(
    raw: str, lexicon: TagLexicon, pool: "RoutingPool"
) -> FormatVerdict:
    """Check the five structural rules; returns all violations found.

    A parse failure short-circuits to a single TAG_BALANCE violation since
    the remaining rules are defined over the block sequence.
    """
    try:
        trajectory = parse_trajectory(raw, lexicon)
    except ParseFailure as exc:
        return FormatVerdict(
            ok=False,
            violations=[Violation(FormatRule.TAG_BALANCE, str(exc), exc.offset)],
        )

    violations: list[Violation] = []
    blocks = trajectory.blocks

    if not blocks:
        violations.append(
            Violation(FormatRule.STARTS_THINK_ENDS_ANSWER, "no blocks present", 0)
        )
    else:
        if blocks[0].kind is not BlockKind.THINK:
            violations.append(
                Violation(
                    FormatRule.STARTS_THINK_ENDS_ANSWER,
                    f"first block is {blocks[0].kind.value}, not think",
                    blocks[0].span[0],
                )
            )
        if blocks[-1].kind is not BlockKind.ANSWER:
            violations.append(
                Violation(
                    FormatRule.STARTS_THINK_ENDS_ANSWER,
                    f"last block is {blocks[-1].kind.value}, not answer",
                    blocks[-1].span[0],
                )
            )

    think_count = sum(1 for b in blocks if b.kind is BlockKind.THINK)
    answer_count = sum(1 for b in blocks if b.kind is BlockKind.ANSWER)
    if think_count < 1 or answer_count != 1:
        violations.append(
            Violation(
                FormatRule.THINK_ANSWER_COUNT,
                f"need >=1 think and exactly 1 answer, "
                f"got {think_count} think / {answer_count} answer",
            )
        )

    # Every route must be answered by an info block before any other route
    # or answer block appears; think blocks may intervene.  Info blocks with
    # no pending route are orphans.
    pending_route: Block | None = None
    for block in blocks:
        if block.kind is BlockKind.ROUTE:
            if pending_route is not None:
                violations.append(
                    Violation(
                        FormatRule.ROUTE_INFO_PAIRING,
                        "route issued while a previous route awaits its info block",
                        block.span[0],
                    )
                )
            pending_route = block
        elif block.kind is BlockKind.INFO:
            if pending_route is None:
                violations.append(
                    Violation(
                        FormatRule.ROUTE_INFO_PAIRING,
                        "info block with no preceding route",
                        block.span[0],
                    )
                )
            pending_route = None
        elif block.kind is BlockKind.ANSWER and pending_route is not None:
            violations.append(
                Violation(
                    FormatRule.ROUTE_INFO_PAIRING,
                    "answer issued while a route awaits its info block",
                    block.span[0],
                )
            )
            pending_route = None
    if pending_route is not None:
        violations.append(
            Violation(
                FormatRule.ROUTE_INFO_PAIRING,
                "trajectory ends while a route awaits its info block",
                pending_route.span[0],
            )
        )

    for block in blocks:
        if block.kind is not BlockKind.ROUTE:
            continue
        try:
            parse_route_directive(block.text, pool)
        except DirectiveError as exc:
            violations.append(
                Violation(FormatRule.ROUTE_DIRECTIVE, str(exc), block.span[0])
            )

    return FormatVerdict(ok=not violations, violations=violations)


def loss_mask(trajectory: Trajectory) -> list[tuple[int, int]]:
    """Spans of info blocks (tags included), i.e. text the policy did not emit."""
    return [b.span for b in trajectory.blocks if b.kind is BlockKind.INFO]


def extract_answer(trajectory: Trajectory) -> str | None:
    """Trimmed interior of the last answer block, or None if there is none."""
    for block in reversed(trajectory.blocks):
        if block.kind is BlockKind.ANSWER:
            return block.text.strip()
    return None
