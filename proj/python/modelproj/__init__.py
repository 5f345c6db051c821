"""Locate a generating process in a KL-divergence model space."""
import json

from . import _core
from ._core import (
    NumericalError,
    ValidationError,
    akaike_weights,
    dissimilarities,
    divergence_matrix,
    entropy_gaussian,
    estimate_sgg,
    isotonic_regression,
    kl_gaussian,
    kruskal_stress,
    model_average_location,
    nmds,
    solve_projection,
)

__all__ = [
    "NumericalError",
    "ValidationError",
    "akaike_weights",
    "default_config",
    "dissimilarities",
    "divergence_matrix",
    "entropy_gaussian",
    "estimate_sgg",
    "isotonic_regression",
    "kl_gaussian",
    "kruskal_stress",
    "model_average_location",
    "nmds",
    "run_pipeline",
    "solve_projection",
]


def default_config():
    return json.loads(_core.default_config())


def run_pipeline(config=None, threads=1):
    """Run simulate -> fit -> embed -> project. `config` is a dict in the
    same schema as the CLI's --config file; None uses the defaults."""
    text = None if config is None else json.dumps(config)
    return json.loads(_core.run_pipeline(text, threads))
