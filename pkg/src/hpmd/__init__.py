"""High-probability stochastic mirror descent: algorithms, weight sequences and checks."""
from .algorithms import NonFiniteIterateError, TrialRecord, replay, run_asmd, run_smd
from .harness import (ConfigError, ExperimentConfig, ExperimentSummary, auto_eta,
                      run_experiment, summarize, theoretical_bound)
from .mirror import DomainError, MirrorMap, bregman, prox_step
from .problems import (CertificationError, DegenerateNoiseWarning, NoiseModel, Problem,
                       certified_sigma, check_subgaussian, grad, sample_stochastic_grad)
from .schedules import (StepSchedule, WeightSequence, check_weight_conditions, step_at,
                        weights_asmd, weights_smd)
from .verify import (MartingaleTrace, WeightConditionError, check_asmd_step_inequality,
                     check_smd_step_inequality, estimate_mgf_bound, helper_taylor_check)

__version__ = "0.1.0"

__all__ = [
    "CertificationError", "ConfigError", "DegenerateNoiseWarning", "DomainError",
    "ExperimentConfig", "ExperimentSummary", "MartingaleTrace", "MirrorMap", "NoiseModel",
    "NonFiniteIterateError", "Problem", "StepSchedule", "TrialRecord",
    "WeightConditionError", "WeightSequence", "auto_eta", "bregman", "certified_sigma",
    "check_asmd_step_inequality", "check_smd_step_inequality", "check_subgaussian",
    "check_weight_conditions", "estimate_mgf_bound", "grad", "helper_taylor_check",
    "prox_step", "replay", "run_asmd", "run_experiment", "run_smd",
    "sample_stochastic_grad", "step_at", "summarize", "theoretical_bound",
    "weights_asmd", "weights_smd",
]
