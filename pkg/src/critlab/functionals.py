"""Quadrature of the action, Nehari, and scaling identities on radial grids.

Bulk integrals use composite Simpson on the uniform grid; contributions
beyond the grid come from a tail object supplied by the caller (the
shooting solver attaches its matched exponential tail, closed profiles
get adaptive quadrature of the profile itself).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np
from scipy.integrate import quad, simpson

from .core import Dimension, NonlinearitySpec, RadialField


class TailContribution(Protocol):
    """Integrals of a field beyond its grid, against the radial measure."""

    def lp_tail(self, p: float) -> float: ...

    def grad_sq_tail(self) -> float: ...


class ProfileTail:
    """Tail contributions for a field with a known closed-form profile.

    Used for analytic inputs (the Sobolev extremizer and friends) where
    the continuation beyond the grid is the profile itself.  Powers too
    low for the algebraic decay rate integrate to an honest infinity (the
    extremizer itself is not square integrable below d=5).
    """

    def __init__(self, func: Callable, r_start: float, dim: Dimension,
                 dfunc: Callable | None = None):
        self.func = func
        self.dfunc = dfunc
        self.r_start = r_start
        self.dim = dim
        # estimated algebraic decay exponent of the profile
        f1, f2 = func(r_start), func(2.0 * r_start)
        self.decay = (math.log(abs(f1) / abs(f2)) / math.log(2.0)
                      if f1 != 0.0 and f2 != 0.0 else math.inf)

    def _tail_quad(self, g, decay: float) -> float:
        if decay <= self.dim.d:
            return math.inf
        # substitute x = r_start / r: algebraically decaying integrands
        # become smooth and bounded on (0, 1]
        R = self.r_start
        val, _ = quad(lambda x: g(R / x) * (R / x) ** (self.dim.d - 1) * R / x ** 2,
                      0.0, 1.0, epsabs=1e-11, epsrel=1e-9, limit=200)
        return self.dim.sphere_area * val

    def lp_tail(self, p: float) -> float:
        return self._tail_quad(lambda r: self.func(r) ** p, p * self.decay)

    def grad_sq_tail(self) -> float:
        if self.dfunc is None:
            eps = 1e-5 * self.r_start
            df = lambda r: (self.func(r + eps) - self.func(r - eps)) / (2 * eps)
        else:
            df = self.dfunc
        return self._tail_quad(lambda r: df(r) ** 2, 2.0 * (self.decay + 1.0))


def radial_gradient(values: np.ndarray, h: float) -> np.ndarray:
    """Centered differences with radial smoothness at the origin.

    The derivative at r=0 is exactly zero for a smooth radial function;
    the outer end uses the second-order one-sided stencil.
    """
    g = np.gradient(values, h, edge_order=2)
    g[0] = 0.0
    return g


def radial_integral(samples: np.ndarray, grid, dim: Dimension) -> float:
    """Simpson quadrature of samples(r) r^(d-1) times the sphere area."""
    r = grid.nodes()
    return dim.sphere_area * float(simpson(samples * r ** (dim.d - 1), x=r))


@dataclass
class Norms:
    l2_sq: float
    grad_l2_sq: float
    lp_pow: dict  # r -> ||u||_{L^r}^r

    def lp_norm(self, r: float) -> float:
        return self.lp_pow[r] ** (1.0 / r)


def norms(field: RadialField, rs: tuple = (), tail: TailContribution | None = None) -> Norms:
    """L2, gradient-L2 (both squared) and requested L^r integrals.

    ``lp_pow[r]`` carries the r-th power of the L^r norm, which is what
    the functionals consume directly.
    """
    dim = field.dim
    vals = field.values
    h = field.grid.h
    l2 = radial_integral(vals * vals, field.grid, dim)
    g = radial_gradient(vals, h)
    grad = radial_integral(g * g, field.grid, dim)
    lp = {}
    for r in rs:
        lp[r] = radial_integral(np.abs(vals) ** r, field.grid, dim)
    if tail is not None:
        l2 += tail.lp_tail(2.0)
        grad += tail.grad_sq_tail()
        for r in rs:
            lp[r] += tail.lp_tail(r)
    return Norms(l2_sq=l2, grad_l2_sq=grad, lp_pow=lp)


@dataclass
class FunctionalValues:
    """The five ingredients every identity is assembled from."""

    grad_sq: float
    l2_sq: float
    crit_pow: float       # ||u||_{2*}^{2*}
    g_pairing: float      # int g(|u|) |u|
    big_g: float          # int G(|u|)


def functional_ingredients(field: RadialField, spec: NonlinearitySpec,
                           tail: TailContribution | None = None) -> FunctionalValues:
    dim = field.dim
    two_star = dim.two_star
    rs = tuple({two_star} | {p + 1.0 for _, p in spec.terms})
    nm = norms(field, rs=rs, tail=tail)
    gp = sum(c * nm.lp_pow[p + 1.0] for c, p in spec.terms)
    gg = sum(c / (p + 1.0) * nm.lp_pow[p + 1.0] for c, p in spec.terms)
    return FunctionalValues(grad_sq=nm.grad_l2_sq, l2_sq=nm.l2_sq,
                            crit_pow=nm.lp_pow[two_star], g_pairing=gp, big_g=gg)


@dataclass
class IdentityReport:
    """Values and residuals of the variational identities for one field."""

    nehari_value: float
    action_value: float
    pohozaev_value: float
    mass_identity_residual: float
    nehari_residual: float
    pohozaev_residual: float


_FLOOR = 1e-300


def assemble_identities(fv: FunctionalValues, omega: float,
                        dim: Dimension) -> IdentityReport:
    two_star = dim.two_star
    nehari = fv.grad_sq + omega * fv.l2_sq - fv.crit_pow - fv.g_pairing
    action = (0.5 * fv.grad_sq + 0.5 * omega * fv.l2_sq
              - fv.crit_pow / two_star - fv.big_g)
    pohozaev = (fv.grad_sq / two_star + 0.5 * omega * fv.l2_sq
                - fv.crit_pow / two_star - fv.big_g)
    mass_lhs = omega * fv.l2_sq
    mass_rhs = dim.d * (fv.big_g - fv.g_pairing / two_star)
    mass_res = abs(mass_lhs - mass_rhs) / max(mass_lhs, _FLOOR)
    pos_n = fv.grad_sq + omega * fv.l2_sq
    pos_p = fv.grad_sq / two_star + 0.5 * omega * fv.l2_sq
    return IdentityReport(
        nehari_value=nehari,
        action_value=action,
        pohozaev_value=pohozaev,
        mass_identity_residual=mass_res,
        nehari_residual=abs(nehari) / max(pos_n, _FLOOR),
        pohozaev_residual=abs(pohozaev) / max(pos_p, _FLOOR),
    )


def identity_report(field: RadialField, omega: float, spec: NonlinearitySpec,
                    tail: TailContribution | None = None) -> IdentityReport:
    """Identity values for an arbitrary field (not necessarily a solution)."""
    fv = functional_ingredients(field, spec, tail=tail)
    return assemble_identities(fv, omega, field.dim)


def evaluate_identities(gs) -> IdentityReport:
    """Identity certificate for a solved ground state.

    Works in the unit-height frame, where the state is O(1) everywhere:
    the gradient and critical integrals are scaling invariants, the mass
    term carries the frequency s of that frame, and the lower-order powers
    carry their rescaled coefficients.  The resulting numbers are exactly
    the raw-frame functional values.
    """
    fv = functional_ingredients(gs.scaled_field, gs.scaled_spec, tail=gs.tail)
    return assemble_identities(fv, gs.s_scaled, gs.dim)


def nehari_of_multiple(gs, c: float) -> float:
    """Nehari value along the ray c -> N(c * state), in the scaled frame."""
    fv = functional_ingredients(gs.scaled_field, gs.scaled_spec, tail=gs.tail)
    dim = gs.dim
    two_star = dim.two_star
    crit = fv.crit_pow * c ** two_star
    gp = sum(cc * c ** (p + 1.0) *
             _lp_of(gs, p + 1.0) for cc, p in gs.scaled_spec.terms)
    return c * c * (fv.grad_sq + gs.s_scaled * fv.l2_sq) - crit - gp


def _lp_of(gs, p: float) -> float:
    nm = norms(gs.scaled_field, rs=(p,), tail=gs.tail)
    return nm.lp_pow[p]
