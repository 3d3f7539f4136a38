from dataclasses import dataclass

import numpy as np

from src.levelset_kernel.heaviside import smoothed_dirac
from src.levelset_kernel.heaviside import smoothed_heaviside

ALPHA_FLOOR = 1e-8


@dataclass(frozen=True)
class FluidParams:
    """
    Material data of the two fluids. Fluid 1 occupies phi > 0.

    Attributes:
        rho0 (float): Density of fluid 0 in kg/m^3.
        rho1 (float): Density of fluid 1 in kg/m^3.
        mu0 (float): Dynamic viscosity of fluid 0 in kg/(m s).
        mu1 (float): Dynamic viscosity of fluid 1 in kg/(m s).
        g (tuple[float, float]): Gravity in m/s^2.
        eps_smooth (float): Smoothing parameter of the alpha projection.
    """

    rho0: float = 1.0
    rho1: float = 1000.0
    mu0: float = 2.0
    mu1: float = 2.0
    g: tuple[float, float] = (0.0, -9.81)
    eps_smooth: float = 1.0

    def __post_init__(self):
        if not (self.rho0 > 0.0 and self.rho1 > 0.0):
            raise ValueError(f"densities must be positive, got {self.rho0}, {self.rho1}")
        if self.mu0 < 0.0 or self.mu1 < 0.0:
            raise ValueError(f"viscosities must be non-negative, got {self.mu0}, {self.mu1}")
        if self.eps_smooth < 0.0:
            raise ValueError(f"eps_smooth must be non-negative, got {self.eps_smooth}")
        if len(self.g) != 2:
            raise ValueError(f"gravity must have two components, got {self.g}")

    @property
    def delta_rho(self) -> float:
        return self.rho1 - self.rho0

    @property
    def delta_mu(self) -> float:
        return self.mu1 - self.mu0

    @property
    def gravity(self) -> np.ndarray:
        return np.asarray(self.g, dtype=float)


def eval_props(phi, alpha, params: FluidParams):
    """
    Evaluates density, viscosity and their level-set derivatives.

    The derivatives hold alpha fixed: d/dphi H(phi / alpha) = H'(phi / alpha) / alpha.

    Args:
        phi (float | numpy.ndarray): Level-set values.
        alpha (float | numpy.ndarray): Positive redistancing scale, same shape as phi.
        params (FluidParams): Material data.

    Returns:
        tuple: (rho, mu, drho_dphi, dmu_dphi).

    Raises:
        ValueError: If any alpha is not positive.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0.0):
        raise ValueError("alpha must be positive; apply the floor before evaluating properties")
    phi_alpha = np.asarray(phi, dtype=float) / alpha
    heaviside = smoothed_heaviside(phi_alpha)
    dirac = smoothed_dirac(phi_alpha) / alpha
    rho = params.rho0 * (1.0 - heaviside) + params.rho1 * heaviside
    mu = params.mu0 * (1.0 - heaviside) + params.mu1 * heaviside
    return rho, mu, params.delta_rho * dirac, params.delta_mu * dirac


def floor_alpha(alpha):
    """Applies the pointwise floor that keeps phi / alpha finite."""
    return np.maximum(alpha, ALPHA_FLOOR)
