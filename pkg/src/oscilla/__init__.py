"""Zeta zeros and oscillations of psi(x) - x: exact psi, smoothed explicit formula,
power sums and a numeric audit of the oscillation argument."""

__version__ = "0.1.0"
