"""Desk-scale laboratory for gradient coherence: per-example gradient
instrumentation, alignment metrics, robust gradient aggregation, a
stability-based generalization-bound evaluator, and scripted reproduction
experiments."""

from .aggregators import Aggregator, M3Stream, aggregate
from .coherence import (CoherenceReport, CoherenceStats, alpha,
                        alpha_from_grads, batch_alpha_forward,
                        commonality_alpha, impute_alpha)
from .datasets import (Dataset, Example, dataset_L, dataset_M, make_clusters,
                       outlier_regression, with_label_noise, with_pixel_noise)
from .models import (DiagDeepModel, LinearModel, MLP, ParamSpace,
                     TwoNeuronModel, make_model)
from .trainer import RunLog, TrainConfig, train

__version__ = "0.1.0"
