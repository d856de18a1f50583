"""Multi-round LLM routing and aggregation with cost-aware policy training."""

from .engine import (
    EngineConfig,
    Episode,
    PolicyBackend,
    build_prompt,
    run_episode,
)
from .evaluation import (
    MetricsSummary,
    TaskRecord,
    evaluate,
    load_tasks,
    report,
)
from .policies import HttpPolicy, ScriptedPolicy
from .pool import (
    CallRecord,
    HttpBackend,
    ModelDescriptor,
    RoutingPool,
    SimulatedBackend,
    SimulatedProfile,
    dispatch,
)
from .protocol import (
    DEFAULT_LEXICON,
    Block,
    BlockKind,
    DirectiveError,
    FormatRule,
    FormatVerdict,
    ParseFailure,
    TagLexicon,
    Trajectory,
    Violation,
    extract_answer,
    loss_mask,
    parse_route_directive,
    parse_trajectory,
    validate_format,
)
from .rewards import (
    CostWindow,
    RewardBreakdown,
    RewardConfig,
    cost_reward,
    exact_match,
    f1_score,
    format_reward,
    normalize_answer,
    total_reward,
)
from .trainer import (
    LearnedRoutingPolicy,
    PolicyParams,
    TrainConfig,
    TrainReport,
    featurize,
    make_synthetic_tasks,
    train,
)

__version__ = "0.1.0"
