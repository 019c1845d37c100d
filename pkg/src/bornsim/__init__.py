"""Stochastic simulation of open quantum systems.

Implements an orthogonal (Born-rule) jump unravelling of Lindblad dynamics,
a quantum-state-diffusion comparison, discrete system-environment channel
machinery, kicked-rotor and quantum-Brownian-motion models, phase-space
fields, and a classical Langevin oracle.
"""

__version__ = "0.1.0"

from . import hilbert, discrete, lindblad, unravel, models, phasespace, classical

__all__ = [
    "hilbert",
    "discrete",
    "lindblad",
    "unravel",
    "models",
    "phasespace",
    "classical",
]
