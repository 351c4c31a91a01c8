"""Simulation and recursive maximum-likelihood estimation for binary-output networks."""

from .dynamics import (Discrete3, DisturbanceModel, GaussianStd, NetworkParams,
                       ObservationSequence, Occasional, ScaledGaussian, Scenario,
                       bnp_canonicalize, choice_canonicalize, pm_to_01, simulate, step,
                       trial_streams, validate_discrete3)
from .errors import (BinestError, CapacityError, ConfigError, ConvergenceError, NumericError,
                     ParameterError, ParseError, PreconditionError, UnsupportedModelError)
from .estimator import (EstimatorState, StepSchedule, Trajectory, TruncationBounds, batch_mle,
                        mse, round_integer_weights, run_online, sa_update, sa_update_truncated,
                        step_size)
from .markov_oracle import ChainOracle, build, transition_matrix, transition_row

__version__ = "0.1.0"
