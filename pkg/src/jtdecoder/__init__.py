"""Joint typicality decoding for noisy compressive sampling.

Submodules: ``model`` (problem generation), ``subspace`` (projections and
least squares on column subsets), ``decoder``, ``bounds`` (CRB and tail
bounds) and ``harness`` (seeded Monte Carlo experiments).
"""
from .bounds import crb_gae
from .decoder import DecodeResult, DecoderConfig, genie_estimate, joint_typicality_decode
from .harness import ExperimentConfig, ExperimentReport, run_experiment
from .model import gen_gaussian_matrix, gen_sparse_signal, measure

__all__ = [
    "DecodeResult",
    "DecoderConfig",
    "ExperimentConfig",
    "ExperimentReport",
    "crb_gae",
    "gen_gaussian_matrix",
    "gen_sparse_signal",
    "genie_estimate",
    "joint_typicality_decode",
    "measure",
    "run_experiment",
]
