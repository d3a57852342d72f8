"""Closed-form security quantities of the sealing protocol.

These are the reference values the simulators are checked against. All
angles are in radians. ``half_width`` below means the sealing angle range
Theta / n**alpha.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

QUAD_ABS_TOL = 1e-10


class QuadratureError(RuntimeError):
    pass


def _check_angles(*angles):
    for a in angles:
        if np.any(np.abs(np.asarray(a, dtype=float)) >= math.pi / 4):
            raise ValueError("angles must satisfy |theta| < pi/4")


def _check_params(Theta: float, alpha: float, n: int):
    if not 0 < Theta < math.pi / 4:
        raise ValueError(f"Theta must lie in (0, pi/4), got {Theta!r}")
    if not 0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")


def half_width(Theta: float, alpha: float, n: int) -> float:
    return Theta / n ** alpha


def eps_bound(Theta: float, alpha: float, n: int) -> float:
    """Per-bit reading error bound sin^2(Theta / n^alpha)."""
    _check_params(Theta, alpha, n)
    return math.sin(half_width(Theta, alpha, n)) ** 2


def pass_prob_fake(theta, theta_prime):
    """Check-pass probability of one qubit after Bob measures it and re-prepares
    cos(theta')|b'> + sin(theta')|not b'>."""
    _check_angles(theta, theta_prime)
    theta = np.asarray(theta, dtype=float)
    theta_prime = np.asarray(theta_prime, dtype=float)
    out = (np.cos(theta) ** 2 * np.cos(theta - theta_prime) ** 2
           + np.sin(theta) ** 2 * np.sin(theta + theta_prime) ** 2)
    return float(out) if out.ndim == 0 else out


def pass_prob_leave(theta):
    """Check-pass probability when Bob measures and leaves the collapsed qubit."""
    _check_angles(theta)
    out = 1.0 - 0.5 * np.sin(2 * np.asarray(theta, dtype=float)) ** 2
    return float(out) if out.ndim == 0 else out


def avg_pass_prob(Theta: float, alpha: float, n: int, theta_prime: float) -> float:
    """pass_prob_fake averaged over theta uniform on [-half_width, half_width], by adaptive quadrature."""
    _check_params(Theta, alpha, n)
    _check_angles(theta_prime)
    a = half_width(Theta, alpha, n)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(pass_prob_fake, -a, a, args=(theta_prime,),
                                      epsabs=QUAD_ABS_TOL * 1e-2, epsrel=0)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    if err > QUAD_ABS_TOL * 2 * a:
        raise QuadratureError(f"quadrature error estimate {err:g} above tolerance")
    return val / (2 * a)


def avg_pass_prob_closed(Theta: float, alpha: float, n: int, theta_prime: float) -> float:
    """Antiderivative form of ``avg_pass_prob``.

    With x = 2 theta and y = 2 theta', the integrand is
    (1 + sin x sin y + cos^2 x cos y) / 2. The odd term integrates to zero
    and cos^2 x averages to 1/2 + sin(4a) / (8a) over theta in [-a, a].
    """
    _check_params(Theta, alpha, n)
    _check_angles(theta_prime)
    a = half_width(Theta, alpha, n)
    mean_cos_sq = 0.5 + math.sin(4 * a) / (8 * a)
    return 0.5 * (1.0 + math.cos(2 * theta_prime) * mean_cos_sq)


def avg_bit_error(Theta: float, alpha: float, n: int) -> float:
    """Expected honest-read bit error rate, mean of sin^2(theta) over the sealing range."""
    _check_params(Theta, alpha, n)
    a = half_width(Theta, alpha, n)
    return 0.5 - math.sin(2 * a) / (4 * a)


def evade_prob_individual(thetas) -> float:
    """Probability that every measured-and-left qubit still passes Alice's check."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.size == 0:
        return 1.0
    _check_angles(thetas)
    # log1p keeps long products accurate
    return float(np.exp(np.sum(np.log1p(-0.5 * np.sin(2 * thetas) ** 2))))


def info_bound(n: int, m: float) -> float:
    """Bits learned when the state is confined to an m-dimensional basis subspace."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= m <= 2 ** n:
        raise ValueError(f"m must lie in [1, 2**n], got {m!r}")
    return n - math.log2(m)


def per_v_amplitude_bound(thetas) -> float:
    """Upper bound prod cos^2(theta_i) on any single basis-vector weight."""
    thetas = np.asarray(thetas, dtype=float)
    _check_angles(thetas)
    return float(np.exp(np.sum(np.log(np.cos(thetas) ** 2))))


def evade_bound_collective(thetas, k: float) -> float:
    """Raw bound 2**-k * prod 2 cos^2(theta_i); may exceed 1 for small k."""
    thetas = np.asarray(thetas, dtype=float)
    _check_angles(thetas)
    n = thetas.size
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}], got {k!r}")
    return float(np.exp(np.sum(np.log(2 * np.cos(thetas) ** 2)) - k * math.log(2)))


def evade_bound_collective_clamped(thetas, k: float) -> float:
    return min(1.0, evade_bound_collective(thetas, k))
