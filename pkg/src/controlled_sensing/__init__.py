"""Controlled sensing for Markov chains observed through controlled Gaussian
measurements: Kalman-like belief filter, generalized Fisher information,
greedy Fisher sensor selection and a belief-space DP baseline."""

__version__ = "0.1.0"
