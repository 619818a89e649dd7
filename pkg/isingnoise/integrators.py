"""
Fixed-step fourth-order Runge-Kutta integration for complex matrix ODEs.
"""

import math
from typing import Callable

import numpy as np
from numpy.typing import NDArray

ComplexArray = NDArray[np.complex128]
RightHandSide = Callable[[float, ComplexArray], ComplexArray]


def rk4_step(rhs: RightHandSide, t: float, y: ComplexArray, h: float) -> ComplexArray:
    """Advance ``y`` from ``t`` to ``t + h`` with one classical RK4 step."""
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_propagator(generator: ComplexArray, h: float) -> ComplexArray:
    """
    One RK4 step of the linear ODE dy/dt = G y as a matrix.

    For constant G the RK4 update is exactly the truncated series sum_{m<=4} (hG)^m / m!.
    """
    dim = generator.shape[0]
    step = h * generator
    term = np.eye(dim, dtype=complex)
    total = term.copy()
    for order in range(1, 5):
        term = term @ step / order
        total = total + term
    return total


def choose_substeps(dt: float, max_frequency: float, max_rate: float, max_phase_step: float = 0.1) -> int:
    """
    Number of RK4 substeps per grid step.

    Keeps ``max_frequency * h <= max_phase_step`` and ``max_rate * h <= 0.5`` for
    h = dt / substeps.
    """
    needed = max(dt * max_frequency / max_phase_step, dt * max_rate / 0.5, 1.0)
    return int(math.ceil(needed - 1e-12))
