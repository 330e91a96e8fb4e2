"""Pretangent spaces, metric-space-valued derivatives and subspace tangency
for sampled metric spaces."""

__version__ = "0.1.0"
