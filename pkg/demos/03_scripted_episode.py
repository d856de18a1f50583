"""One multi-round episode, step by step.

A scripted policy plays the classic escalation pattern: try a small cheap
model first, notice it cannot help, escalate to a large one, then answer.
The engine dispatches each <search> directive to the named model, injects
the reply as an <information> block, and finally validates and scores the
finished trajectory.

Backends here are deterministic simulations, so the printout is identical
on every run — useful for eyeballing exactly what the engine does.
"""

from __future__ import annotations

import json

from multiroute import (
    CostWindow,
    ModelDescriptor,
    RoutingPool,
    ScriptedPolicy,
    SimulatedBackend,
    SimulatedProfile,
    build_prompt,
    normalize_answer,
    run_episode,
)

QUESTION = "Where was the place of death of Topa Inca Yupanqui's father?"
GOLDS = ["Cusco", "Cuzco", "Cusco, Peru", "Cuzco, Peru"]


def build_pool() -> RoutingPool:
    """Two simulated models: a small one that can't help on this question
    and a large one whose knowledge base contains the answer."""
    large_kb = {normalize_answer(QUESTION): "Cusco"}
    return RoutingPool(
        [
            ModelDescriptor(
                "llama-3.1-8b-instruct",
                "LLaMA-3.1-8B-Instruct",
                8,
                0.2,
                "a small fast model for easy lookups",
                SimulatedBackend(SimulatedProfile(verbosity=24, seed=102)),
            ),
            ModelDescriptor(
                "llama-3.1-70b-instruct",
                "LLaMA-3.1-70B-Instruct",
                70,
                0.9,
                "a large general model, strong at factual recall",
                SimulatedBackend(
                    SimulatedProfile(
                        knowledge_base=large_kb, verbosity=48, seed=103
                    )
                ),
            ),
        ]
    )


SCRIPT = [
    "<think>Start cheap: maybe the small model knows this one.</think>\n"
    f"<search>LLaMA-3.1-8B-Instruct: {QUESTION}</search>",
    "<think>The small model could not help.  Escalate to the large one."
    "</think>\n"
    f"<search>LLaMA-3.1-70B-Instruct: {QUESTION}</search>",
    "<think>The large model names the city directly.</think>\n"
    "<answer>Cusco</answer>",
]


def main() -> None:
    pool = build_pool()

    print("=== the prompt the policy sees ===")
    print(build_prompt(QUESTION, pool))

    episode = run_episode(
        QUESTION, GOLDS, ScriptedPolicy(list(SCRIPT)), pool, CostWindow(1000)
    )

    print("\n=== finished trajectory ===")
    print(episode.raw_trajectory)

    print("\n=== routed calls ===")
    for call in episode.calls:
        print(
            f"  {call.model_id:<24} tokens={call.output_tokens:<3} "
            f"cost=${call.cost:.2f}"
        )

    print("\n=== scoring ===")
    print(f"  format ok        : {episode.verdict.ok}")
    print(f"  final answer     : {episode.final_answer!r}")
    print(f"  exact match      : {episode.rewards.outcome}")
    print(f"  raw episode cost : ${episode.rewards.cost_raw:.2f}")
    print(f"  total reward     : {episode.rewards.total}")

    print("\n=== the episode as a JSON record (for audit files) ===")
    record = episode.to_record()
    record["raw_trajectory"] = record["raw_trajectory"][:60] + "..."
    print(json.dumps(record, indent=2)[:600], "...")


if __name__ == "__main__":
    main()
