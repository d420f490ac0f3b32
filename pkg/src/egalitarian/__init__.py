"""Egalitarian transfers for constrained rationing on bipartite networks."""

from .errors import (
    BudgetExceeded,
    ContractViolation,
    GenerationExhausted,
    InfeasibleInstance,
    InvariantError,
    ParseError,
    TooLarge,
    UnequalTotals,
    ValidationError,
)
from .flow import (
    BipartiteGraph,
    CutResult,
    FlowNetwork,
    FlowResult,
    max_flow,
    min_cut_maximal,
    min_cut_minimal,
)
from .mechanism import (
    Allocation,
    Breakpoint,
    BreakpointKind,
    Decomposition,
    OneSidedInstance,
    TwoSidedInstance,
    check_feasible,
    decompose,
    decompose_one_sided,
    decompose_two_sided,
    egalitarian,
    egalitarian_one_sided,
    egalitarian_two_sided,
    first_type2_breakpoint,
    one_sided_with_peak_caps,
)
from .analysis import (
    ParetoReport,
    enumerate_pareto,
    enumerate_pareto_star,
    is_lex_optimal,
    lorenz_dominates,
    pareto_report,
    type2_breakpoint_oracle,
    uniform_rule,
)
from .strategy import (
    Agent,
    AttackReport,
    Manipulation,
    Mode,
    Side,
    Verdict,
    attack_links,
    attack_peaks,
    check_bossiness,
    check_decomposition_lemmas,
    weakly_prefers,
)
from .instance_io import emit_instance, generate_random, load_fixture, parse_instance

__version__ = "0.1.0"
