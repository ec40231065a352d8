"""Generative networks trained by minimizing the unbiased MMD statistic."""
__version__ = "0.1.0"
