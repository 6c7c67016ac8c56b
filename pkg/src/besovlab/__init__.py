"""Besov norms, metric entropy of Besov balls and simulated empirical/Gaussian processes on lattices."""

from .grid import FrequencyGrid, GridFunction, GridSpec, lp_norm, weight_eval, weighted_l2_distance
from .besov import (BesovParams, DyadicPartition, besov_norm, block_norms, lp_block,
                    make_dyadic_partition, norm_equivalence_ratio, translate, weighted_b0_norm)

__all__ = [
    "FrequencyGrid", "GridFunction", "GridSpec", "lp_norm", "weight_eval", "weighted_l2_distance",
    "BesovParams", "DyadicPartition", "besov_norm", "block_norms", "lp_block",
    "make_dyadic_partition", "norm_equivalence_ratio", "translate", "weighted_b0_norm",
]
