"""Affine term-structure model with Wishart-type stochastic covariance.

Pricing of caplets and swaptions by three independent routes (perturbation
expansion around the constant-covariance Gaussian model, second-order weak
Monte Carlo, Fourier inversion) plus the transform machinery they share.
"""
from .params import (Dimensions, ModelParams, ValidationReport,
                     validate_params)
from .curves import DiscountCurve, forward_libor, forward_swap
from .instruments import CapletSpec, SwaptionSpec, PriceResult
from . import lgm, riccati, kernels, expansion, simulation, fourier

__all__ = [
    "Dimensions", "ModelParams", "ValidationReport", "validate_params",
    "DiscountCurve", "forward_libor", "forward_swap",
    "CapletSpec", "SwaptionSpec", "PriceResult",
    "lgm", "riccati", "kernels", "expansion", "simulation", "fourier",
]
