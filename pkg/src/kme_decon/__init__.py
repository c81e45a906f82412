"""Deconditional kernel mean embeddings and task transformed Gaussian processes."""

from ._backend import BACKEND
from .dme import DmeModel, ParametricDmeModel, chained_loss, dme_fit, dme_predict, dmo_weights, parametric_dme_fit
from .embeddings import CmeModel, KbrModel, cme_estimate, cme_fit, kbr_b_symmetric_form, kbr_fit
from .errors import (ConfigError, ContractViolation, DomainError, KmeError, OptimizationFailure,
                     ShapeError, SingularSystemError)
from .kernels import FeatureMap, KernelSpec, feature, gram, normalized_gaussian
from .lfi import (HerdingResult, LfiProblem, approx_marginal_likelihood, exp_gamma_simulate,
                  exp_gamma_true_posterior, kernel_herding, learn_lfi_hyper, lfi_embedding)
from .linalg import PsdFactorization, gaussian_logpdf, reg_solve, woodbury_left
from .ttgp import (TtgpHyper, TtgpPosterior, build_transform, learn_inducing, log_marginal_alternative,
                   log_marginal_nonparametric, log_marginal_parametric, optimize_hyper, posterior_predict)
from .ttr_data import TaskTransformedDataset, cascade_baseline, generate_ttr, impute_baseline, toy_gp_process

__version__ = "0.1.0"
