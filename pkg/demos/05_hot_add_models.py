"""Growing the candidate pool while the system is running.

Candidate models are plain descriptor rows, and the routing prompt is
re-rendered from the pool on every episode.  That means a new model becomes
routable the moment it is registered: the next prompt advertises it, and a
directive naming it resolves immediately.  Nothing about the existing
descriptors changes, and no retraining step is required for the mechanics
(a learned policy will of course only *prefer* the newcomer after seeing
reward for it).
"""

from __future__ import annotations

from multiroute import (
    CostWindow,
    ModelDescriptor,
    RoutingPool,
    ScriptedPolicy,
    SimulatedBackend,
    SimulatedProfile,
    build_prompt,
    dispatch,
    normalize_answer,
    run_episode,
)

QUESTION = "Which archive holds the survey ledgers?"


def descriptor_lines(prompt: str) -> list[str]:
    lines = prompt.splitlines()
    start = lines.index("Description of LLM Candidates: ") + 1
    collected = []
    for line in lines[start:]:
        if not line or line.startswith("If you find"):
            break
        collected.append(line)
    return collected


def main() -> None:
    pool = RoutingPool(
        [
            ModelDescriptor(
                "qwen2.5-7b-instruct", "Qwen2.5-7B-Instruct", 7, 0.3,
                "a capable small generalist",
                SimulatedBackend(SimulatedProfile(verbosity=24, seed=101)),
            ),
            ModelDescriptor(
                "mistral-7b-instruct", "Mistral-7B-Instruct", 7, 0.2,
                "a compact model with fast responses",
                SimulatedBackend(SimulatedProfile(verbosity=20, seed=104)),
            ),
        ]
    )

    print("=== candidate list before ===")
    for line in descriptor_lines(build_prompt(QUESTION, pool)):
        print(" ", line)

    print("\nregistering two new models on the live pool...")
    pool.register(
        ModelDescriptor(
            "palmyra-creative-122b", "Palmyra-Creative-122B", 122, 1.8,
            "a very large model tuned for creative and open-ended writing",
            SimulatedBackend(SimulatedProfile(
                knowledge_base={
                    normalize_answer(QUESTION): "the northern archive"
                },
                verbosity=32, seed=77,
            )),
        )
    )
    pool.register(
        ModelDescriptor(
            "llama3-chatqa-1.5-8b", "Llama3-ChatQA-1.5-8B", 8, 0.25,
            "a compact model specialized in conversational question answering",
            SimulatedBackend(SimulatedProfile(verbosity=20, seed=78)),
        )
    )

    print("\n=== candidate list after (same objects, two appended) ===")
    for line in descriptor_lines(build_prompt(QUESTION, pool)):
        print(" ", line)

    print("\n=== the newcomer is immediately dispatchable ===")
    record = dispatch(pool, "Palmyra-Creative-122B", QUESTION)
    print(f"  reply from {record.model_id}: "
          f"{record.response_text.split(chr(10))[0]!r}")

    print("\n=== ...and routable inside a normal episode ===")
    script = [
        "<think>The new creative model advertises broad coverage.</think>\n"
        f"<search>Palmyra-Creative-122B: {QUESTION}</search>",
        "<think>That is a direct answer.</think>\n"
        "<answer>the northern archive</answer>",
    ]
    episode = run_episode(
        QUESTION, ["the northern archive"], ScriptedPolicy(script),
        pool, CostWindow(100),
    )
    print(f"  routed to : {episode.calls[0].model_id}")
    print(f"  answer    : {episode.final_answer!r}")
    print(f"  exact match: {episode.rewards.outcome}")


if __name__ == "__main__":
    main()
