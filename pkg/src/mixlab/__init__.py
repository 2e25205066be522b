"""Entropy and Fisher information of centered Gaussian mixtures.

A Gaussian mixture is the law of ``X = Y Z`` with ``Z`` standard Gaussian and an
independent positive scale (or positive-definite matrix) ``Y``.  The package
evaluates densities and scores of finite mixtures, computes entropies and Fisher
information matrices with certified error bars, and runs numerical checks of the
inequalities these quantities satisfy.
"""

from .infofn import (FisherMatrixEstimate, InfoEstimate, covariance, entropy, fisher_information,
                     fisher_matrix, renyi_entropy)
from .mixers import (MatrixMixerAtomic, ScalarMixerAtomic, StableMixerSpec, atomize, mixer_from_dict,
                     sample_mixer)
from .mixture import (CapacityError, MixtureDensity, SimplexPoint, as_mixture, matrix_mixture,
                      scalar_mixture, weighted_sum_law)
from .quad import QuadSpec

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "FisherMatrixEstimate", "InfoEstimate", "MatrixMixerAtomic", "MixtureDensity",
    "QuadSpec", "ScalarMixerAtomic", "SimplexPoint", "StableMixerSpec", "as_mixture", "atomize",
    "covariance", "entropy", "fisher_information", "fisher_matrix", "matrix_mixture", "mixer_from_dict",
    "renyi_entropy", "sample_mixer", "scalar_mixture", "weighted_sum_law",
]
