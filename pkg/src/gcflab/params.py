"""Flow exponents and the height <-> pressure transformation.

For speed exponent alpha in (1/2, 1] the interface profile f ~ dist^beta is
critical for finite nondegenerate boundary speed; every derived constant used
elsewhere in the package lives on FlowParams.
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FlowParams",
    "derive_exponents",
    "pressure_from_height",
    "height_from_pressure",
]


@dataclass(frozen=True)
class FlowParams:
    """Speed exponent alpha and all constants derived from it.

    beta      : interface vanishing exponent, (3a-1)/(2a-1)
    theta     : pressure-equation coefficient, beta - 1
    mu        : barrier spatial exponent, 4a/(2a-1)
    gamma_exp : barrier time exponent, 1/(2a-1)
    c_plus    : critical barrier constant (gamma/(mu^{2a} (mu-1)^a))^{1/(2a-1)}
    lambda_nd : configured nondegeneracy constant used as an audit threshold
    """

    alpha: float
    beta: float
    theta: float
    mu: float
    gamma_exp: float
    c_plus: float
    lambda_nd: float = 0.1

    def __post_init__(self):
        if not (0.5 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (1/2, 1], got {self.alpha}")
        if not (self.lambda_nd > 0):
            raise ValueError("lambda_nd must be positive")


def derive_exponents(alpha: float, lambda_nd: float = 0.1) -> FlowParams:
    """Compute every derived exponent/constant from alpha in (1/2, 1]."""
    alpha = float(alpha)
    if not (0.5 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (1/2, 1], got {alpha}")
    d = 2.0 * alpha - 1.0
    beta = (3.0 * alpha - 1.0) / d
    theta = alpha / d
    mu = 4.0 * alpha / d
    gamma_exp = 1.0 / d
    c_plus = (gamma_exp / (mu ** (2.0 * alpha) * (mu - 1.0) ** alpha)) ** (1.0 / d)
    return FlowParams(
        alpha=alpha,
        beta=beta,
        theta=theta,
        mu=mu,
        gamma_exp=gamma_exp,
        c_plus=c_plus,
        lambda_nd=lambda_nd,
    )


def pressure_from_height(f, params: FlowParams):
    """g = (beta f)^(1/beta), elementwise; exact zero where f is zero."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("height field must be nonnegative")
    return (params.beta * f) ** (1.0 / params.beta)


def height_from_pressure(g, params: FlowParams):
    """f = g^beta / beta, elementwise; inverse of pressure_from_height."""
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise ValueError("pressure field must be nonnegative")
    return g ** params.beta / params.beta
