"""Speculative sampling for autoregressive temporal point processes."""
from .distributions import Exponential, Gamma, LogNormal, Mixture, Weibull
from .envelope import rejection_const
from .events import EventSeq
from .hawkes import HawkesParams, HawkesProcess
from .sampler import SpecConfig, autoregressive_sample, batched_speculative_sample, speculative_sample

__version__ = "0.1.0"

__all__ = ["EventSeq", "Exponential", "Gamma", "HawkesParams", "HawkesProcess", "LogNormal", "Mixture",
           "SpecConfig", "Weibull", "autoregressive_sample", "batched_speculative_sample", "rejection_const",
           "speculative_sample"]
