"""Numerical toolkit for the Baouendi-Grushin calculus and its weighted estimates.

Subpackages by concern:

    geometry      points, dilations, gauge, angle function, generator
    jets          closed-form derivative ladder of rho and psi
    oracle        nested finite-difference X-derivatives (independent check)
    fields        scalar fields with analytic X-jets, bump families
    coefficients  variable coefficient matrices, structural-bound machinery
    operators     pointwise operator application, Rellich residual
    quadrature    gauge-ball/annulus integration with singular weights
    carleman      both sides of the weighted inequalities, parameter sweeps
    ucp           finite-difference solves and vanishing-order diagnostics
    reporting     machine-readable verification reports and baselines
    cli           batch driver (`grushin verify|carleman|ucp|baseline`)
"""

from .geometry import GrushinSpace, Point, dilate, gauge, gauge_and_angle, angle, generator_apply
from .jets import GaugeJets, gauge_jets

__all__ = [
    "GrushinSpace",
    "Point",
    "gauge",
    "angle",
    "gauge_and_angle",
    "dilate",
    "generator_apply",
    "GaugeJets",
    "gauge_jets",
]

__version__ = "0.1.0"
