"""Causal discovery of information flow in simulated advection-diffusion fields."""

__version__ = "0.1.0"
