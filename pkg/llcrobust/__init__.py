"""Robust LLC estimation for linear cyclic causal models with latent confounders."""

__version__ = "0.1.0"
