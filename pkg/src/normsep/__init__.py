"""Norm-controlled ReLU networks of depth 2 and 3.

Certified constructions, Maurey compression, weight-decay training and closed-form
bounds. Numerical kernels come from a compiled extension when available, with a numpy
fallback (set ``NORMSEP_PURE_PYTHON=1`` to force it).
"""
__version__ = "0.1.0"

from .errors import (DegeneracyError, DomainError, InfeasibleError, NetFormatError, NormsepError,
                     ShapeError, TrainingError, UsageError)
from .net import (CostCertificate, ReluNet, balance_depth2, cost, deserialize, evaluate,
                  lift_to_depth3, load, save, serialize)
from .geometry import SphereDataset, sample_product_sphere
from .constructions import (deep_approximant, inner_net, sawtooth, sawtooth_net, square_net,
                            tent_interpolant)
from .compression import maurey_compress
from .learning import RuleConfig, TrainConfig, rule_srm, sweep_path, train_weight_decay
from .bounds import evaluate_bound
from .kernels import BACKEND

__all__ = [
    "BACKEND", "CostCertificate", "DegeneracyError", "DomainError", "InfeasibleError",
    "NetFormatError", "NormsepError", "ReluNet", "RuleConfig", "ShapeError", "SphereDataset",
    "TrainConfig", "TrainingError", "UsageError", "balance_depth2", "cost", "deep_approximant",
    "deserialize", "evaluate", "evaluate_bound", "inner_net", "lift_to_depth3", "load",
    "maurey_compress", "rule_srm", "sample_product_sphere", "save", "sawtooth", "sawtooth_net",
    "serialize", "square_net", "sweep_path", "tent_interpolant", "train_weight_decay",
]
