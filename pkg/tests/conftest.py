"""Shared test fixtures: a six-model candidate pool with simulated backends."""

from __future__ import annotations

import pytest

from multiroute.pool import (
    ModelDescriptor,
    RoutingPool,
    SimulatedBackend,
    SimulatedProfile,
)

# Questions the simulated 70B model can answer (keys are normalized on use).
KB_70B = {
    "Which film was released more recently, Sacred Silence or Ek Haseena Thi Ek Deewana Tha?":
        "Ek Haseena Thi Ek Deewana Tha",
    "Where was the place of death of Topa Inca Yupanqui's father?": "Cusco",
    "Which film has the director who was born first, Women He'S Undressed or The King'S Stamp?":
        "The King's Stamp",
}

KB_8B = {
    "The radiographic term used to describe the dense bone of the socket and septal crest is?":
        "lamina dura",
}


def build_case_pool() -> RoutingPool:
    """Six simulated candidates mirroring a realistic mixed-size deployment."""
    from multiroute.rewards import normalize_answer

    def sim(kb, verbosity, seed):
        normalized = {normalize_answer(k): v for k, v in kb.items()}
        return SimulatedBackend(
            SimulatedProfile(
                knowledge_base=normalized, accuracy=1.0, verbosity=verbosity, seed=seed
            )
        )

    return RoutingPool(
        [
            ModelDescriptor(
                "qwen2.5-7b-instruct", "Qwen2.5-7B-Instruct", 7, 0.3,
                "A compact instruction-tuned model, strong at everyday "
                "question answering and code.",
                sim({}, 24, 101),
            ),
            ModelDescriptor(
                "llama-3.1-8b-instruct", "LLaMA-3.1-8B-Instruct", 8, 0.2,
                "A small dialogue model with solid general knowledge for "
                "its size.",
                sim(KB_8B, 24, 102),
            ),
            ModelDescriptor(
                "llama-3.1-70b-instruct", "LLaMA-3.1-70B-Instruct", 70, 0.9,
                "A large dialogue model with broad world knowledge and "
                "strong multi-step reasoning.",
                sim(KB_70B, 48, 103),
            ),
            ModelDescriptor(
                "mistral-7b-instruct", "Mistral-7B-Instruct", 7, 0.2,
                "A fast small model suited to concise factual replies.",
                sim({}, 20, 104),
            ),
            ModelDescriptor(
                "mixtral-8x22b-instruct", "Mixtral-8x22B-Instruct", 141, 1.2,
                "A sparse mixture-of-experts model with strong reasoning "
                "and multilingual coverage.",
                sim({}, 48, 105),
            ),
            ModelDescriptor(
                "gemma-2-27b-instruct", "Gemma-2-27B-Instruct", 27, 0.65,
                "A mid-size model balancing capability and cost.",
                sim({}, 32, 106),
            ),
        ]
    )


@pytest.fixture
def case_pool() -> RoutingPool:
    return build_case_pool()
