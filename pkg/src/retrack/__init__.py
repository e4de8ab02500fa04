"""Resilient multi-robot target tracking: distributed filtering with
consensus fusion, communication-topology reconfiguration after sensor
deterioration, and coverage-maximizing formation synthesis."""

from .config_gen import (InfoSnapshot, InnerResult, SolverReport, accg_inner,
                         greedy, solve, tccg_inner)
from .dkf import (Belief, InfoPair, consensus_round, dkf_step, from_info,
                  innovate, innovate_covariance, predict, run_consensus, to_info)
from .formation import (AnnealingSchedule, FormationError, FormationParams,
                        Placement, constraint_violations, constraints_ok,
                        coverage, synthesize)
from .harness import (CampaignResult, EventSchedule, EventSpec, ScenarioConfig,
                      TrialTrace, build_schedule, load_config, max_est_error,
                      max_trace_P, realize_events, run_campaign, run_trial,
                      save_config, write_aggregate_csv, write_events_csv,
                      write_trial_csv)
from .linalg import pd_cholesky, pd_inverse, pd_solve, sym
from .network import (Configuration, Topology, contraction_rate,
                      enumerate_topologies, frobenius_edge_distance,
                      is_connected_bfs, is_connected_spectral, line_graph,
                      metropolis_matrix, metropolis_weights, spectral_margin,
                      validate_weights)
from .sensing import (DeteriorationEvent, SensorModel, apply_deterioration,
                      measure, random_psd)
from .target_model import TargetModel, TargetState, dubins_model, step_truth

__version__ = "0.1.0"

__all__ = [
    "AnnealingSchedule", "Belief", "CampaignResult", "Configuration",
    "DeteriorationEvent", "EventSchedule", "EventSpec", "FormationError",
    "FormationParams", "InfoPair", "InfoSnapshot", "InnerResult", "Placement",
    "ScenarioConfig", "SensorModel", "SolverReport", "TargetModel",
    "TargetState", "Topology", "TrialTrace", "accg_inner", "apply_deterioration",
    "build_schedule", "consensus_round", "constraint_violations",
    "constraints_ok", "contraction_rate", "coverage", "dkf_step", "dubins_model",
    "enumerate_topologies", "frobenius_edge_distance", "from_info", "greedy",
    "innovate", "innovate_covariance", "is_connected_bfs",
    "is_connected_spectral", "line_graph", "load_config", "max_est_error",
    "max_trace_P", "measure", "metropolis_matrix", "metropolis_weights",
    "pd_cholesky", "pd_inverse", "pd_solve", "predict", "random_psd",
    "realize_events", "run_campaign", "run_consensus", "run_trial",
    "save_config", "solve", "spectral_margin", "step_truth", "sym",
    "synthesize", "tccg_inner", "to_info", "validate_weights",
    "write_aggregate_csv", "write_events_csv", "write_trial_csv",
]
