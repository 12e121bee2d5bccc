"""Chaotic variational autoencoder for one-class fraud detection.

A VAE is trained on genuine records only; fraud is flagged by high
reconstruction error.  The chaotic variant draws its reparameterization
noise from the logistic map instead of a Gaussian generator.
"""

from .chaos import ChaoticGenerator, NoiseTransform, arcsine_cdf, ks_statistic, seed_validate
from .data import TabularDataset, read_csv, split_one_class, synth_occ
from .occ import DecisionReport, ThresholdStrategy, classification_rate, classify, decision_scores
from .stats import aggregate, t_cdf, two_sample_t
from .vae import TrainConfig, VaeModel, train

__version__ = "0.1.0"
