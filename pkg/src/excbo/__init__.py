"""Causal Bayesian optimization with exogenous-noise distribution learning."""

from .backend import active_backend
from .benchmarks import (EpidemicConfig, MixtureNoiseSpec, benchmark_names,
                         epidemic_step, make_benchmark, mixture_noise_sample,
                         register_benchmark)
from .config import ExperimentConfig, parse_config
from .errors import (BoundsError, ConfigError, CycleError, DegenerateDataError,
                     DimensionError, ExcboError, IoError, NonFiniteError,
                     NumericalError, OracleError, ParseError, ShapeError,
                     ValidationError)
from .exo import (GaussianMixture, MeanScaleModel, NodeSurrogate, encode,
                  fit_decoder, fit_gmm, fit_mean_scale, gmm_logpdf, gmm_sample,
                  recover_noise)
from .gp import (GpModel, KernelSpec, gp_fit, gp_predict, gp_predict_batch,
                 kernel_eval, log_marginal_likelihood, optimize_hyperparams)
from .loop import (LoopSettings, RunTrace, baseline_anm_network_run,
                   baseline_ucb_run, excbo_run)
from .acquisition import (AcquisitionContext, SurrogateNetwork, draw_context,
                          optimize_acquisition, propagate, propagate_batch,
                          ucb_value)
from .runner import (ResultBundle, compute_regret, emit_outputs,
                     estimate_oracle_optimum, expected_reward, run_suite)
from .scm import (ActionSpace, CausalGraph, GroundTruthScm, ObservationSet,
                  append_round, sample_scm, topological_order)

__version__ = "0.1.0"
