"""Hand-labeled trajectory corpus for format validation.

Each entry carries the exact set of format rules it violates (empty set for
well-formed trajectories).  Labels were derived by hand from the rule
definitions, independently of the validator implementation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from multiroute.protocol import FormatRule

R = FormatRule


@dataclass(frozen=True)
class LabeledTrajectory:
    name: str
    raw: str
    violated: frozenset
    golds: tuple = field(default_factory=tuple)


def _t(name, raw, *rules, golds=()):
    return LabeledTrajectory(name, raw, frozenset(rules), tuple(golds))


CORPUS = [
    # ------------------------------------------------------------- valid (6)
    _t(
        "valid_minimal",
        "<think>The answer is direct.</think><answer>42</answer>",
    ),
    _t(
        "valid_film_release_single_route",
        "<think>The question compares the release dates of two films. I do "
        "not know either date, so I should consult a knowledgeable model."
        "</think>\n"
        "<search>LLaMA-3.1-70B-Instruct: Which film was released more "
        "recently, Sacred Silence or Ek Haseena Thi Ek Deewana Tha?</search>\n"
        "<information>Sacred Silence is a 2016 Italian drama, while Ek "
        "Haseena Thi Ek Deewana Tha is a 2017 Indian romantic thriller, so "
        "the 2017 film is the newer release.</information>\n"
        "<think>The second film came out a year later.</think>\n"
        "<answer>Ek Haseena Thi Ek Deewana Tha</answer>",
        golds=["Ek Haseena Thi Ek Deewana Tha"],
    ),
    _t(
        "valid_place_of_death_escalation",
        "<think>I need the father of Topa Inca Yupanqui first, then his "
        "place of death. A small model may know this.</think>\n"
        "<search>LLaMA-3.1-8B-Instruct: Who was the father of Topa Inca "
        "Yupanqui?</search>\n"
        "<information>I am unable to assist with this question. Please "
        "consult other LLMs for further assistance.</information>\n"
        "<think>The small model could not help; I will escalate to a larger "
        "one and ask directly.</think>\n"
        "<search>LLaMA-3.1-70B-Instruct: Where was the place of death of "
        "Topa Inca Yupanqui's father?</search>\n"
        "<information>Topa Inca Yupanqui's father was Pachacuti, who died in "
        "Cusco, the Inca capital.</information>\n"
        "<answer>Cusco</answer>",
        golds=["Cusco", "Cuzco", "Cusco, Peru", "Cuzco, Peru"],
    ),
    _t(
        "valid_dental_term_single_route",
        "<think>This is a specialised dental radiography term; a compact "
        "model with medical coverage should suffice.</think>\n"
        "<search>LLaMA-3.1-8B-Instruct: The radiographic term used to "
        "describe the dense bone of the socket and septal crest is?</search>\n"
        "<information>On radiographs the dense cortical bone lining the "
        "tooth socket and the septal crest is called the lamina dura."
        "</information>\n"
        "<answer>lamina dura</answer>",
        golds=["lamina dura", "alveolar process", "the lamina dura"],
    ),
    _t(
        "valid_multi_think_with_scratch_text",
        "<think>First pass.</think>\nscratch note between blocks\n"
        "<think>Second pass.</think><answer>done</answer>",
    ),
    _t(
        "valid_colons_in_sub_query_info_alias",
        "<think>The timetable question has a colon in it; only the first "
        "colon separates the model name.</think>"
        "<search>Qwen2.5-7B-Instruct: When does the 12:30 train arrive?"
        "</search><info>At 12:30 sharp.</info><answer>12:30</answer>",
    ),
    # ------------------------------------------------------ tag balance (4)
    _t(
        "balance_unclosed_think",
        "<think>I wonder<answer>x</answer>",
        R.TAG_BALANCE,
    ),
    _t(
        "balance_nested_route_inside_think",
        "<think>outer<search>LLaMA-3.1-8B-Instruct: q</search></think>"
        "<answer>x</answer>",
        R.TAG_BALANCE,
    ),
    _t(
        "balance_close_before_open",
        "</think><think>x</think><answer>y</answer>",
        R.TAG_BALANCE,
    ),
    _t(
        "balance_eof_inside_answer",
        "<think>premise</think><answer>forever pending",
        R.TAG_BALANCE,
    ),
    # ------------------------------------------- start/ends discipline (3)
    _t(
        "starts_route_first",
        "<search>Qwen2.5-7B-Instruct: capital of France?</search>"
        "<information>Paris.</information><think>ok</think>"
        "<answer>Paris</answer>",
        R.STARTS_THINK_ENDS_ANSWER,
    ),
    _t(
        "starts_ends_with_think",
        "<think>first</think><answer>mid</answer><think>post</think>",
        R.STARTS_THINK_ENDS_ANSWER,
    ),
    _t(
        "starts_bare_answer",
        "<answer>42</answer>",
        R.STARTS_THINK_ENDS_ANSWER,
        R.THINK_ANSWER_COUNT,
    ),
    # ----------------------------------------------------- block counts (3)
    _t(
        "count_double_answer",
        "<think>t</think><answer>a</answer><answer>b</answer>",
        R.THINK_ANSWER_COUNT,
    ),
    _t(
        "count_no_answer",
        "<think>only thoughts</think>",
        R.STARTS_THINK_ENDS_ANSWER,
        R.THINK_ANSWER_COUNT,
    ),
    _t(
        "count_three_answers",
        "<think>t</think><answer>a</answer> or <answer>b</answer>"
        "<answer>c</answer>",
        R.THINK_ANSWER_COUNT,
    ),
    # -------------------------------------------------- route/info pairs (4)
    _t(
        "pairing_route_without_info",
        "<think>need data</think><search>LLaMA-3.1-70B-Instruct: some "
        "question</search><answer>guess</answer>",
        R.ROUTE_INFO_PAIRING,
    ),
    _t(
        "pairing_orphan_info",
        "<think>t</think><information>unrequested</information>"
        "<answer>x</answer>",
        R.ROUTE_INFO_PAIRING,
    ),
    _t(
        "pairing_double_route_single_info",
        "<think>t</think><search>Qwen2.5-7B-Instruct: q1</search>"
        "<search>Mistral-7B-Instruct: q2</search>"
        "<information>resp</information><answer>x</answer>",
        R.ROUTE_INFO_PAIRING,
    ),
    _t(
        "pairing_trailing_pending_route",
        "<think>t</think><search>Gemma-2-27B-Instruct: anything?</search>",
        R.ROUTE_INFO_PAIRING,
        R.STARTS_THINK_ENDS_ANSWER,
        R.THINK_ANSWER_COUNT,
    ),
    # --------------------------------------------------- route directive (4)
    _t(
        "directive_unknown_model",
        "<think>t</think><search>GPT-9000: who?</search>"
        "<information>resp</information><answer>x</answer>",
        R.ROUTE_DIRECTIVE,
    ),
    _t(
        "directive_empty_name",
        "<think>t</think><search>: what is this?</search>"
        "<information>r</information><answer>x</answer>",
        R.ROUTE_DIRECTIVE,
    ),
    _t(
        "directive_empty_query",
        "<think>t</think><search>Qwen2.5-7B-Instruct:   </search>"
        "<information>r</information><answer>x</answer>",
        R.ROUTE_DIRECTIVE,
    ),
    _t(
        "directive_missing_colon",
        "<think>t</think><search>just tell me the answer</search>"
        "<information>r</information><answer>x</answer>",
        R.ROUTE_DIRECTIVE,
    ),
    # ------------------------------------------------------------ combos (2)
    _t(
        "combo_post_answer_route_unknown_model",
        "<think>t</think><answer>early</answer>"
        "<search>Nonexistent-Model: q</search><information>r</information>",
        R.STARTS_THINK_ENDS_ANSWER,
        R.ROUTE_DIRECTIVE,
    ),
    _t(
        "combo_orphan_info_double_answer",
        "<think>t</think><information>free data</information>"
        "<answer>a</answer><answer>b</answer>",
        R.ROUTE_INFO_PAIRING,
        R.THINK_ANSWER_COUNT,
    ),
]

VALID_CORPUS = [entry for entry in CORPUS if not entry.violated]
INVALID_CORPUS = [entry for entry in CORPUS if entry.violated]
