"""Inter-site staff mobility assignment: a genetic algorithm plus exact oracles."""

from ._kernels import BACKEND
from .ga import Chromosome, GAConfig, SolveResult, crossover, decode, encode, evolve, fitness, mutate, repair, select
from .instance import (
    Candidate,
    CandidateList,
    CriteriaProfile,
    Instance,
    InstanceFormatError,
    ValidationError,
    WeightMatrix,
    aggregate_weight,
    build_weight_matrices,
    canonicalize,
    load_instance,
    paper_instance,
    parse_instance,
    serialize_instance,
)
from .model import (
    AssignmentMatrix,
    FeasibilityReport,
    ShapeError,
    check_feasibility,
    count_assigned,
    destination_weight,
    total_objective,
)
from .oracle import OracleResult, SearchSpaceTooLarge, cross_validate, solve_exhaustive, solve_greedy
from .report import FlowSummary, NetFlowGraph, flow_summary, net_flow_graph

__version__ = "0.1.0"
