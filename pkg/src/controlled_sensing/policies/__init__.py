from .dp import (
    DpPolicy,
    StageTable,
    bayes_next_belief,
    dp_backup,
    dp_solve,
    dp_stage_cost_vector,
    dp_terminal,
    stage_cost,
)
from .gfis2 import PolicyDecision, gfis2_select
from .grid import BeliefGrid
from .rollout import (
    DpSelector,
    EpisodeRecord,
    FixedPolicy,
    FullBudgetPolicy,
    Gfis2Policy,
    RandomPolicy,
    run_policy,
)
