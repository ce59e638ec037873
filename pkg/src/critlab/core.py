"""Closed-form profiles, scale functions, and derived constants.

Everything here is analytic input for the rest of the laboratory: the
explicit Sobolev extremizer and its scaling generator, the dimension
dependent scale functions that govern the high-frequency regime, the
admissibility rules for power-sum nonlinearities, and the constants of
the resolvent-at-origin asymptotics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq


class CritlabError(Exception):
    """Base class for all errors raised by this package."""


class AdmissibilityError(CritlabError):
    """A nonlinearity failed the admissibility gate."""


class QuadratureError(CritlabError):
    """A defining integral did not converge to the requested accuracy."""


# ---------------------------------------------------------------------------
# dimensions and carriers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dimension:
    """Space dimension tag, restricted to d in {3, 4}."""

    d: int

    def __post_init__(self):
        if self.d not in (3, 4):
            raise ValueError(f"dimension must be 3 or 4, got {self.d}")

    @property
    def two_star(self) -> float:
        """Critical Sobolev exponent 2d/(d-2): 6 for d=3, 4 for d=4."""
        return 2.0 * self.d / (self.d - 2)

    @property
    def p_crit(self) -> float:
        """Critical power (d+2)/(d-2) = two_star - 1."""
        return (self.d + 2.0) / (self.d - 2.0)

    @property
    def sphere_area(self) -> float:
        """Surface area of the unit sphere: 4*pi (d=3), 2*pi^2 (d=4)."""
        return 4.0 * math.pi if self.d == 3 else 2.0 * math.pi ** 2

    @property
    def curvature(self) -> float:
        """The combination d(d-2) appearing throughout the profile formulas."""
        return float(self.d * (self.d - 2))


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid on [0, r_max] with n cells (n+1 nodes, r_0 = 0)."""

    r_max: float
    n: int

    def __post_init__(self):
        if not (self.r_max > 0.0 and math.isfinite(self.r_max)):
            raise ValueError("r_max must be positive and finite")
        if self.n < 2:
            raise ValueError("need at least two cells")

    @property
    def h(self) -> float:
        return self.r_max / self.n

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.r_max, self.n + 1)


@dataclass
class RadialField:
    """Samples of a radial function on a uniform grid.

    The universal numeric carrier: solver output, rescaled states, probe
    inputs are all held in this shape.
    """

    grid: RadialGrid
    values: np.ndarray
    dim: Dimension

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n + 1,):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid with "
                f"{self.grid.n + 1} nodes")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def copy_with(self, values: np.ndarray) -> "RadialField":
        return RadialField(self.grid, np.asarray(values, dtype=float), self.dim)


# ---------------------------------------------------------------------------
# power-sum nonlinearities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonlinearitySpec:
    """A finite sum of positive-coefficient powers, g(t) = sum_i c_i t^(p_i).

    Exponents are kept strictly increasing; the smallest and largest are
    exposed as p1 and p2.  The leading large-t coefficient C2 = p2*c_{p2}
    is what g'(t)/t^(p2-1) converges to.
    """

    terms: tuple[tuple[float, float], ...]  # (coefficient, exponent)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("need at least one power term")
        coeffs = [c for c, _ in self.terms]
        exps = [p for _, p in self.terms]
        if any(c <= 0 for c in coeffs):
            raise ValueError("coefficients must be positive")
        if any(p <= 1 for p in exps):
            raise ValueError("exponents must exceed 1")
        if any(b <= a for a, b in zip(exps, exps[1:])):
            raise ValueError("exponents must be strictly increasing")

    @classmethod
    def power(cls, p: float, coeff: float = 1.0) -> "NonlinearitySpec":
        return cls(((float(coeff), float(p)),))

    @classmethod
    def parse(cls, text: str) -> "NonlinearitySpec":
        """Parse strings like ``"t^4"`` or ``"0.5*t^2.5 + 1*t^4"``."""
        terms = []
        for chunk in text.replace(" ", "").split("+"):
            if not chunk:
                continue
            if "*" in chunk:
                cpart, ppart = chunk.split("*", 1)
                coeff = float(cpart)
            else:
                coeff, ppart = 1.0, chunk
            if not ppart.startswith("t^"):
                raise ValueError(f"cannot parse power term {chunk!r}")
            terms.append((coeff, float(ppart[2:])))
        return cls(tuple(terms))

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def exponents(self) -> np.ndarray:
        return np.array([p for _, p in self.terms])

    @property
    def p1(self) -> float:
        return self.terms[0][1]

    @property
    def p2(self) -> float:
        return self.terms[-1][1]

    @property
    def C2(self) -> float:
        return self.terms[-1][0] * self.terms[-1][1]

    def g(self, t):
        """g(t) for t >= 0 (vectorized)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c, p in self.terms:
            out = out + c * t ** p
        return out

    def g_prime(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c, p in self.terms:
            out = out + c * p * t ** (p - 1.0)
        return out

    def big_g(self, t):
        """Antiderivative G(t) = int_0^t g."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c, p in self.terms:
            out = out + c / (p + 1.0) * t ** (p + 1.0)
        return out

    def rescaled(self, m: float, dim: Dimension) -> "NonlinearitySpec":
        """Coefficients seen by the unit-height frame u = m*phi(m^(2/(d-2)) x).

        Each power picks up m^(p - p_crit); all exponents sit below the
        critical power, so the factors vanish as m grows.
        """
        pc = dim.p_crit
        return NonlinearitySpec(tuple((c * m ** (p - pc), p) for c, p in self.terms))

    def describe(self) -> str:
        return " + ".join(f"{c:g}*t^{p:g}" for c, p in self.terms)


@dataclass(frozen=True)
class AdmissibilityReport:
    passed: bool
    violations: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()


def check_admissibility(spec: NonlinearitySpec, dim: Dimension,
                        samples: int = 61) -> AdmissibilityReport:
    """Check the structural conditions a nonlinearity must satisfy.

    The exponent-window checks are exact.  The monotonicity and coercivity
    clauses hold analytically for positive power sums (each term satisfies
    them separately); they are additionally verified on a logarithmic
    sample of t as a guard against regressions in the evaluators.
    """
    d = dim.d
    lo = max(2.0 / (d - 2), 1.0)
    hi = dim.p_crit
    violations: list[str] = []
    p1, p2 = spec.p1, spec.p2
    if not p1 > lo:
        violations.append(
            f"smallest exponent p1={p1:g} must exceed max(2/(d-2), 1) = {lo:g}")
    if not p2 < hi:
        violations.append(
            f"largest exponent p2={p2:g} must stay below (d+2)/(d-2) = {hi:g}")
    if not p2 > hi - 2.0:
        violations.append(
            f"largest exponent p2={p2:g} must exceed (d+2)/(d-2) - 2 = {hi - 2:g} "
            "(below this floor high-frequency ground states are lost)")

    notes = [f"C2 = p2 * leading coefficient = {spec.C2:g}",
             "monotonicity g'(t)t - g(t) >= 0 holds termwise (all exponents > 1)",
             "coercivity G(t) - g(t)t/2* >= C3 t^(p2+1) holds termwise "
             "(all exponents below 2* - 1)"]

    # sampled verification of the two analytic clauses
    t = np.logspace(-6, 6, samples)
    mono = spec.g_prime(t) * t - spec.g(t)
    if np.any(mono < -1e-12 * np.maximum(spec.g(t) * t, 1e-300)):
        violations.append("sampled monotonicity clause g'(t)t - g(t) >= 0 failed")
    two_star = dim.two_star
    coer = spec.big_g(t) - spec.g(t) * t / two_star
    c3 = spec.terms[-1][0] * (1.0 / (p2 + 1.0) - 1.0 / two_star)
    if np.any(coer < c3 * t ** (p2 + 1.0) * (1.0 - 1e-12) - 1e-300):
        violations.append("sampled coercivity clause G - g t/2* >= C3 t^(p2+1) failed")

    return AdmissibilityReport(passed=not violations,
                               violations=tuple(violations), notes=tuple(notes))


# ---------------------------------------------------------------------------
# closed-form profiles
# ---------------------------------------------------------------------------

def w_profile(r, dim: Dimension):
    """The explicit Sobolev extremizer (1 + r^2/(d(d-2)))^(-(d-2)/2).

    Strictly decreasing from 1 at the origin with algebraic decay
    r^(-(d-2)); the zero-frequency limit profile of the ground states.
    """
    r = np.asarray(r, dtype=float)
    q = r * r / dim.curvature
    return (1.0 + q) ** (-(dim.d - 2) / 2.0)


def lambda_w(r, dim: Dimension):
    """Generator of the critical scaling applied to the extremizer.

    Equals ((d-2)/2) W + r W'; closed form ((d-2)/2)(1-q)(1+q)^(-d/2)
    with q = r^2/(d(d-2)).  Positive inside r = sqrt(d(d-2)), one sign
    change there, negative beyond.
    """
    r = np.asarray(r, dtype=float)
    q = r * r / dim.curvature
    return 0.5 * (dim.d - 2) * (1.0 - q) * (1.0 + q) ** (-dim.d / 2.0)


def w_potential(r, dim: Dimension):
    """Attractive potential -((d+2)/(d-2)) W^(4/(d-2)).

    The linearization of the zero-frequency equation around the extremizer
    is -Lap + this; the scaling generator spans its radial kernel.
    """
    return -dim.p_crit * w_profile(r, dim) ** (4.0 / (dim.d - 2))


def w_prime(r, dim: Dimension):
    """Radial derivative of the extremizer (needed for tail matching)."""
    r = np.asarray(r, dtype=float)
    q = r * r / dim.curvature
    return -(r / dim.curvature) * (dim.d - 2) * (1.0 + q) ** (-dim.d / 2.0)


# ---------------------------------------------------------------------------
# scale functions
# ---------------------------------------------------------------------------

def scale_delta(s, dim: Dimension):
    """delta(s): sqrt(s) for d=3, 1/log(1 + 1/s) for d=4.

    The resolvent-at-origin amplitude scale; positive and increasing,
    delta(s) -> 0 as s -> 0.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise ValueError("scale functions are defined for s > 0 only")
    if dim.d == 3:
        return np.sqrt(s)
    return 1.0 / np.log1p(1.0 / s)


def scale_beta(s, dim: Dimension):
    """beta(s) = s / delta(s); strictly increasing on (0, inf)."""
    s = np.asarray(s, dtype=float)
    return s / scale_delta(s, dim)


def scale_alpha(t, dim: Dimension):
    """Inverse of beta.  Exactly t^2 for d=3; numeric inversion for d=4.

    For d=4 the image of beta is (0, 1), so t must lie in (0, 1).
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0.0):
        raise ValueError("alpha is defined for positive arguments")
    if dim.d == 3:
        return t_arr ** 2
    if np.any(t_arr >= 1.0):
        raise ValueError("for d=4 the domain of alpha is (0, 1)")

    def invert(tv: float) -> float:
        f = lambda s: s * np.log1p(1.0 / s) - tv
        lo, hi = 1e-300, 1.0
        # beta(s) -> 1 as s -> inf for d=4 from below on (0,inf); bracket upward
        while f(hi) < 0.0:
            hi *= 10.0
            if hi > 1e12:
                raise QuadratureError("could not bracket the beta inverse")
        return brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=200)

    if t_arr.ndim == 0:
        return invert(float(t_arr))
    return np.array([invert(tv) for tv in t_arr.ravel()]).reshape(t_arr.shape)


# ---------------------------------------------------------------------------
# closed-profile integrals and pairings
# ---------------------------------------------------------------------------

def w_power_integral(p: float, dim: Dimension) -> float:
    """Integral of W^p over R^d; requires p > d/(d-2) for convergence."""
    if p * (dim.d - 2) <= dim.d:
        raise ValueError(f"W^{p:g} is not integrable in dimension {dim.d}")
    val, err = quad(lambda r: w_profile(r, dim) ** p * r ** (dim.d - 1),
                    0.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    if err > 1e-8 * max(abs(val), 1.0):
        raise QuadratureError(f"W^{p:g} integral failed to converge (err={err:g})")
    return dim.sphere_area * val


def pairing_w_power_lambda_w(r_exp: float, dim: Dimension) -> float:
    """<W^r, LambdaW> via the closed form.

    Integration by parts collapses the pairing to
    -(4 - (d-2)(r-1)) / (2(r+1)) * ||W||_{r+1}^{r+1}; the norm is
    computed by quadrature.  The factor vanishes exactly at the critical
    power r = (d+2)/(d-2).
    """
    lo = max(1.0, 2.0 / (dim.d - 2))
    if not (lo < r_exp <= dim.p_crit):
        raise ValueError(
            f"exponent {r_exp:g} outside (max(1, 2/(d-2)), (d+2)/(d-2)] for d={dim.d}")
    factor = -(4.0 - (dim.d - 2) * (r_exp - 1.0)) / (2.0 * (r_exp + 1.0))
    if factor == 0.0:
        return 0.0
    return factor * w_power_integral(r_exp + 1.0, dim)


def g_pairing_lambda_w(spec: NonlinearitySpec, amplitude: float,
                       dim: Dimension) -> float:
    """<g(amplitude * W), LambdaW> for a power sum, term by term."""
    total = 0.0
    for c, p in spec.terms:
        total += c * amplitude ** p * pairing_w_power_lambda_w(p, dim)
    return total


# ---------------------------------------------------------------------------
# small-ball integral and derived constants
# ---------------------------------------------------------------------------

def smallball_integral(dim: Dimension, s: float) -> float:
    """Integral of 1/((|xi|^2 + s)|xi|^2) over the unit ball, 0 < s < 1.

    Grows like a constant times 1/delta(s) as s -> 0; the constant is the
    small-ball coefficient stored in ScaleConstants.
    """
    if not (0.0 < s < 1.0):
        raise ValueError("the small-ball integral is used for 0 < s < 1")
    d = dim.d

    def integrand(x):
        return x ** (d - 1) / ((x * x + s) * x * x)

    split = min(1.0, 10.0 * math.sqrt(s))
    total = 0.0
    for a, b in ((0.0, split), (split, 1.0)):
        if b > a:
            val, err = quad(integrand, a, b, epsabs=1e-12, epsrel=1e-11, limit=400)
            total += val
    return dim.sphere_area * total


@dataclass(frozen=True)
class ScaleConstants:
    """Derived constants of the resolvent-at-origin asymptotics.

    a0:        limit of delta(s) * (resolvent of W at the origin)
    c0:        pairing constant relating that origin value to <. , V LambdaW>
    a1:        product c0 * a0, the coefficient in the t ~ a1 * beta(s) law
    smallball: coefficient of 1/delta(s) in the small-ball integral
    """

    a0: float
    c0: float
    a1: float
    smallball: float

    def __post_init__(self):
        if min(self.a0, self.c0, self.a1, self.smallball) <= 0:
            raise ValueError("scale constants must be positive")


def derive_scale_constants(dim: Dimension) -> ScaleConstants:
    """Compute the four derived constants by quadrature.

    The small-ball coefficient comes from a linear-in-delta extrapolation
    of delta(s) * smallball_integral(s) over three small s.  For d=3 the
    origin constant is sqrt(3) times the integral of e^(-r); for d=4 it is
    the small-ball coefficient times the integral of W^3 over (2 pi)^4.
    """
    d = dim.d
    s_list = (1e-6, 1e-7, 1e-8)
    deltas = np.array([float(scale_delta(s, dim)) for s in s_list])
    vals = np.array([scale_delta(s, dim) * smallball_integral(dim, s)
                     for s in s_list])
    slope, intercept = np.polyfit(deltas, vals, 1)
    frak_c = float(intercept)

    if d == 3:
        tail, err = quad(lambda r: math.exp(-r), 0.0, np.inf,
                         epsabs=1e-14, epsrel=1e-13)
        a0 = math.sqrt(3.0) * tail
    else:
        a0 = frak_c / (2.0 * math.pi) ** 4 * w_power_integral(dim.p_crit, dim)

    c0 = dim.curvature ** (d / 2.0) / (2.0 * d) * (d - 2) * dim.sphere_area
    return ScaleConstants(a0=a0, c0=c0, a1=c0 * a0, smallball=frak_c)
