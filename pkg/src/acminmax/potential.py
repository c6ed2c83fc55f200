"""Double-well potentials, the 1-D transition profile, and its rescalings.

Everything downstream is built from three scalar ingredients: a symmetric
double-well density W, the heteroclinic profile q connecting the two wells,
and the interface energy constant sigma.  The standard quartic well gets
closed forms; any other admissible well goes through adaptive quadrature
and ODE integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp


class PotentialError(ValueError):
    """Raised when a candidate well violates the double-well requirements."""


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature cannot reach the requested tolerance."""

    def __init__(self, msg: str, achieved: float):
        super().__init__(f"{msg} (achieved tolerance {achieved:.3e})")
        self.achieved = achieved


@dataclass(frozen=True)
class Potential:
    """Smooth symmetric double well vanishing exactly at -1 and +1.

    ``eval``/``d1``/``d2`` are vectorized callables for W, W' and W''.
    ``sup_norm`` is the maximum of W on [-1, 1]; all fields are clamped to
    that interval, so nothing outside of it ever matters.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    sup_norm: float
    name: str = "custom"

    @property
    def is_standard(self) -> bool:
        return self.name == "standard-quartic"


@dataclass(frozen=True)
class Profile:
    """Increasing odd solution of q' = sqrt(2 W(q)) with q(0) = 0.

    ``domain`` is the radius beyond which evaluation switches to the
    exponential tail q(t) ~ +-(1 - a exp(-kappa |t|)).
    """

    q: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    domain: float
    potential: Potential


@dataclass(frozen=True)
class EnergyConstant:
    sigma: float
    two_sigma: float


def make_standard_potential() -> Potential:
    """The quartic well W(t) = (1 - t^2)^2 / 4 with closed-form derivatives."""

    def w(t):
        t = np.asarray(t, dtype=float)
        return (1.0 - t * t) ** 2 / 4.0

    def w1(t):
        t = np.asarray(t, dtype=float)
        return t * t * t - t

    def w2(t):
        t = np.asarray(t, dtype=float)
        return 3.0 * t * t - 1.0

    return Potential(eval=w, d1=w1, d2=w2, sup_norm=0.25, name="standard-quartic")


def polynomial_potential(coeffs) -> Potential:
    """Build a well from ascending polynomial coefficients and validate it."""
    poly = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
    d1 = poly.deriv(1)
    d2 = poly.deriv(2)
    ts = np.linspace(-1.0, 1.0, 4001)
    sup = float(np.max(poly(ts)))
    p = Potential(eval=poly, d1=d1, d2=d2, sup_norm=sup, name="polynomial")
    validate_potential(p)
    return p


def validate_potential(p: Potential, samples: int = 2001) -> None:
    """Check the double-well requirements by dense sampling on [-1, 1]."""
    ts = np.linspace(-1.0, 1.0, samples)
    w = np.asarray(p.eval(ts), dtype=float)
    if np.any(w < -1e-12):
        raise PotentialError("W must be non-negative on [-1, 1]")
    if np.max(np.abs(w - p.eval(-ts))) > 1e-12:
        raise PotentialError("W must be even")
    if abs(float(p.eval(1.0))) > 1e-12 or abs(float(p.eval(-1.0))) > 1e-12:
        raise PotentialError("W must vanish at -1 and +1")
    if float(p.d2(1.0)) <= 0.0 or float(p.d2(-1.0)) <= 0.0:
        raise PotentialError("the wells at -1 and +1 must be non-degenerate")
    if abs(float(p.d1(0.0))) > 1e-12 or float(p.d2(0.0)) >= 0.0:
        raise PotentialError("0 must be a local maximum of W")
    interior = ts[1:-1]
    if np.any(np.asarray(p.eval(interior)) <= 0.0):
        raise PotentialError("W must be strictly positive on (-1, 1)")
    if abs(float(np.max(w)) - p.sup_norm) > 1e-9 * max(1.0, p.sup_norm):
        raise PotentialError("sup_norm does not match the sampled maximum of W")


def energy_constant(p: Potential, tol: float = 1e-10) -> EnergyConstant:
    """Interface energy per unit length: sigma = integral of sqrt(W/2) over [-1, 1]."""
    val, err = quad(lambda s: math.sqrt(max(float(p.eval(s)), 0.0) / 2.0),
                    -1.0, 1.0, epsabs=tol, epsrel=tol, limit=200)
    if err > 100.0 * tol:
        raise QuadratureError("energy constant quadrature did not converge", err)
    if val <= tol:
        raise PotentialError("degenerate well: sigma must be positive")
    return EnergyConstant(sigma=val, two_sigma=2.0 * val)


def f_transform(p: Potential, t: float, tol: float = 1e-10) -> float:
    """F(t) = integral of sqrt(W/2) from 0 to t, for t in [-1, 1]."""
    if not -1.0 <= t <= 1.0:
        raise ValueError(f"f_transform argument {t} outside [-1, 1]")
    if t == 0.0:
        return 0.0
    val, err = quad(lambda s: math.sqrt(max(float(p.eval(s)), 0.0) / 2.0),
                    0.0, t, epsabs=tol, epsrel=tol, limit=200)
    if err > 100.0 * tol:
        raise QuadratureError("f_transform quadrature did not converge", err)
    return val


class ODEStepError(RuntimeError):
    def __init__(self, msg: str, last_t: float):
        super().__init__(f"{msg} (last valid t = {last_t:.6g})")
        self.last_t = last_t


def heteroclinic_profile(p: Potential, tol: float = 1e-10) -> Profile:
    """Solve q' = sqrt(2 W(q)), q(0) = 0, with exponential-tail evaluation.

    The standard quartic takes the closed form q(t) = tanh(t / sqrt(2)),
    which satisfies the ODE identically; other wells are integrated with an
    adaptive Runge-Kutta scheme up to the point where the tail asymptotics
    take over.
    """
    if p.is_standard:
        s2 = math.sqrt(2.0)

        def q(t):
            return np.tanh(np.asarray(t, dtype=float) / s2)

        def dq(t):
            c = np.cosh(np.asarray(t, dtype=float) / s2)
            return 1.0 / (s2 * c * c)

        return Profile(q=q, derivative=dq, domain=20.0, potential=p)

    kappa = math.sqrt(float(p.d2(1.0)))
    cutoff = 1.0 - 1e-9

    def rhs(t, y):
        return [math.sqrt(max(2.0 * float(p.eval(min(y[0], 1.0))), 0.0))]

    def reach_cutoff(t, y):
        return y[0] - cutoff

    reach_cutoff.terminal = True
    sol = solve_ivp(rhs, (0.0, 200.0), [0.0], rtol=tol, atol=tol,
                    dense_output=True, events=reach_cutoff, max_step=0.5)
    if not sol.success:
        raise ODEStepError("profile ODE integration failed", float(sol.t[-1]))
    t_star = float(sol.t[-1])
    q_star = float(sol.y[0, -1])
    # tail: 1 - q(t) = (1 - q(t*)) exp(-kappa (t - t*))
    amp = 1.0 - q_star

    def q(t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        out = np.where(a <= t_star,
                       sol.sol(np.minimum(a, t_star))[0],
                       1.0 - amp * np.exp(-kappa * (a - t_star)))
        return np.sign(t) * out

    def dq(t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        inner = np.sqrt(np.maximum(2.0 * np.asarray(p.eval(sol.sol(np.minimum(a, t_star))[0]), dtype=float), 0.0))
        return np.where(a <= t_star, inner, kappa * amp * np.exp(-kappa * (a - t_star)))

    return Profile(q=q, derivative=dq, domain=t_star, potential=p)


def truncated_profile(prof: Profile, eps: float, t) -> np.ndarray:
    """Lipschitz truncation of the rescaled profile, saturating at 2*sqrt(eps).

    Equals q(t/eps) for |t| <= sqrt(eps), ramps linearly to +-1 on
    sqrt(eps) <= |t| <= 2*sqrt(eps), and is exactly +-1 beyond.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    t = np.asarray(t, dtype=float)
    se = math.sqrt(eps)
    a = np.abs(t)
    q_se = float(prof.q(se / eps))
    core = prof.q(t / eps)
    ramp = np.sign(t) * (q_se + (a / se - 1.0) * (1.0 - q_se))
    out = np.where(a <= se, core, np.where(a <= 2.0 * se, ramp, np.sign(t)))
    return out


def truncated_profile_derivative(prof: Profile, eps: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    se = math.sqrt(eps)
    a = np.abs(t)
    q_se = float(prof.q(se / eps))
    slope = (1.0 - q_se) / se
    out = np.where(a <= se, prof.derivative(t / eps) / eps,
                   np.where(a <= 2.0 * se, slope, 0.0))
    return out


def ramp_profile(rho: float, t) -> np.ndarray:
    """Linear ramp t/rho clipped to [-1, 1]."""
    if rho <= 0.0:
        raise ValueError("rho must be positive")
    return np.clip(np.asarray(t, dtype=float) / rho, -1.0, 1.0)


def profile_energy_1d(prof: Profile, eps: float, truncated: bool = False,
                      tol: float = 1e-10) -> float:
    """Line energy of the (possibly truncated) rescaled profile.

    For the untruncated profile the value is 2*sigma for every eps; the
    truncation adds a correction that vanishes as eps -> 0.  The integrand
    beyond 12*eps is replaced by its exponential tail, integrated separately
    so the far contribution is accounted for rather than dropped.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    w = prof.potential.eval

    if truncated:
        se = math.sqrt(eps)

        def density(t):
            v = float(truncated_profile(prof, eps, t))
            dv = float(truncated_profile_derivative(prof, eps, t))
            return eps * dv * dv / 2.0 + float(w(v)) / eps

        val = 0.0
        err = 0.0
        for a, b in ((0.0, min(se, 12.0 * eps)), (min(se, 12.0 * eps), se), (se, 2.0 * se)):
            if b <= a:
                continue
            v, e = quad(density, a, b, epsabs=tol, epsrel=tol, limit=200)
            val += v
            err += e
        if err > 1e3 * tol:
            raise QuadratureError("truncated profile energy quadrature failed", err)
        return 2.0 * val

    # substitute s = t/eps: the density eps*q_eps'^2/2 + W(q_eps)/eps has
    # unit integral element e1(s) = q'(s)^2/2 + W(q(s)) under ds
    def density1(s):
        dq = float(prof.derivative(s))
        return dq * dq / 2.0 + float(w(float(prof.q(s))))

    body, err = quad(density1, 0.0, 12.0, epsabs=tol, epsrel=tol, limit=200)
    if err > 1e3 * tol:
        raise QuadratureError("profile energy quadrature failed", err)
    tail, _ = quad(density1, 12.0, 60.0, epsabs=tol, epsrel=tol, limit=200)
    return 2.0 * (body + tail)


def coarea_constant(eps: float, rho: float, sup_norm: float) -> float:
    """Transition-density bound eps/(2 rho^2) + ||W||_inf / eps for ramp fields."""
    return eps / (2.0 * rho * rho) + sup_norm / eps


def transition_density_sup(prof: Profile, eps: float, samples: int = 4001) -> float:
    """Bound the value-space energy density of the truncated profile.

    Sampling t over the transition band gives the largest value of
    eps*p'(t)/2 + W(p(t)) / (eps*p'(t)) where p is the truncated profile;
    this is the constant that converts an L1 gap into a coarea energy bound
    for sphere fields built from the truncated profile.
    """
    se = math.sqrt(eps)
    ts = np.linspace(-2.0 * se * (1.0 - 1e-9), 2.0 * se * (1.0 - 1e-9), samples)
    p = truncated_profile(prof, eps, ts)
    dp = truncated_profile_derivative(prof, eps, ts)
    dp = np.maximum(dp, 1e-300)
    dens = eps * dp / 2.0 + np.asarray(prof.potential.eval(p), dtype=float) / (eps * dp)
    return float(np.max(dens))
