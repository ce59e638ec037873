"""Rescaling of solved states to the extremizer frame and the sweep laws.

A solved state of height M is carried to the frame of the Sobolev
extremizer by the norm-preserving scaling T_mu with a correction factor
mu chosen so that the difference from the extremizer is orthogonal to the
degenerate direction (through the resolvent-twisted pairing).  The sweep
report tracks the frame frequency s, the nonlinear coupling t, and the
difference norms across frequencies, with trend verdicts for the limit
laws they must obey.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, simpson
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .core import (Dimension, RadialField, ScaleConstants,
                   g_pairing_lambda_w, lambda_w, scale_beta, w_profile)
from .resolvent import orthogonality_functional
from .shooting import GroundState


def apply_T_lambda(fld: RadialField, lam: float, tail=None) -> RadialField:
    """Norm-preserving rescale lam^(-1) f(lam^(-2/(d-2)) r) on the same grid.

    Sampling is cubic; radii beyond the source grid fall back to the tail
    model when one is supplied, else to the algebraic continuation
    c r^(-(d-2)) matched at the outer node.
    """
    if lam <= 0:
        raise ValueError("scaling parameter must be positive")
    dim = fld.dim
    nodes = fld.grid.nodes()
    args = lam ** (-2.0 / (dim.d - 2)) * nodes
    spline = CubicSpline(nodes, fld.values)
    inside = args <= nodes[-1]
    out = np.empty_like(nodes)
    out[inside] = spline(args[inside])
    if not np.all(inside):
        far = args[~inside]
        if tail is not None:
            out[~inside] = tail.value(far)
        else:
            c = fld.values[-1] * nodes[-1] ** (dim.d - 2)
            out[~inside] = c * far ** (-(dim.d - 2.0))
    return fld.copy_with(out / lam)


def sample_scaled_state(gs: GroundState, radii: np.ndarray) -> np.ndarray:
    """Unit-height state at arbitrary radii (grid spline + matched tail)."""
    nodes = gs.scaled_field.grid.nodes()
    spline = CubicSpline(nodes, gs.scaled_field.values)
    radii = np.asarray(radii, dtype=float)
    out = np.empty_like(radii)
    inside = radii <= nodes[-1]
    out[inside] = spline(radii[inside])
    if not np.all(inside):
        out[~inside] = gs.tail.value(radii[~inside])
    return out


def sample_scaled_derivative(gs: GroundState, radii: np.ndarray) -> np.ndarray:
    nodes = gs.scaled_field.grid.nodes()
    spline = CubicSpline(nodes, gs.scaled_field.values)
    radii = np.asarray(radii, dtype=float)
    out = np.empty_like(radii)
    inside = radii <= nodes[-1]
    out[inside] = spline(radii[inside], 1)
    if not np.all(inside):
        xt, dv = gs.tail.x, gs.tail.derivs
        out[~inside] = np.interp(radii[~inside], xt, dv)
    return out


# ---------------------------------------------------------------------------
# the orthogonality correction mu
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MuResult:
    mu: float
    fallback: bool
    functional_at_mu: float


def _ortho_mismatch(gs: GroundState, mu: float) -> float:
    dim = gs.dim
    q = apply_T_lambda(gs.scaled_field, mu, tail=gs.tail)
    zeta = q.copy_with(q.values - w_profile(q.grid.nodes(), dim))
    s_mu = gs.s_scaled * mu ** (-4.0 / (dim.d - 2))
    return orthogonality_functional(zeta, s_mu)


def solve_mu(gs: GroundState, bracket=(0.5, 1.5), xtol: float = 1e-11) -> MuResult:
    """Root of the orthogonality mismatch in the scaling correction mu.

    The mismatch is evaluated on a short ladder of mu values across the
    bracket; a bracketed root solve runs between the first sign change.
    Without a sign change (low frequencies) the result falls back to
    mu = 1 with a warning flag, which every downstream law tolerates.
    """
    lo, hi = bracket
    probes = np.array([lo, 0.8, 0.95, 1.0, 1.05, 1.2, hi])
    probes = probes[(probes >= lo) & (probes <= hi)]
    vals = [_ortho_mismatch(gs, float(mu)) for mu in probes]
    for (m0, f0), (m1, f1) in zip(zip(probes, vals), zip(probes[1:], vals[1:])):
        if f0 == 0.0:
            return MuResult(float(m0), False, 0.0)
        if f0 * f1 < 0.0:
            root = brentq(lambda mu: _ortho_mismatch(gs, mu), m0, m1,
                          xtol=xtol, rtol=1e-15, maxiter=200)
            return MuResult(float(root), False, _ortho_mismatch(gs, root))
    return MuResult(1.0, True, vals[int(np.argmin(np.abs(probes - 1.0)))])


# ---------------------------------------------------------------------------
# the rescaled state and its diagnostics
# ---------------------------------------------------------------------------

@dataclass
class RescaledState:
    """One solved state carried to the extremizer frame."""

    omega: float
    dim: Dimension
    Q: RadialField
    mu: float
    mu_fallback: bool
    s_omega: float
    kappa: float              # -<g(mu M W), LambdaW>, closed pairing route
    kappa_quad: float         # same by grid quadrature (cross-check)
    t_omega: float
    zeta: RadialField
    zeta_norms: dict          # r -> ||zeta||_{L^r}
    pde_residual: float
    M_omega: float


def _zeta_norm(gs: GroundState, q: RadialField, mu: float, r_pow: float) -> float:
    dim = gs.dim
    nodes = q.grid.nodes()
    zeta = q.values - w_profile(nodes, dim)
    bulk = dim.sphere_area * float(
        simpson(np.abs(zeta) ** r_pow * nodes ** (dim.d - 1), x=nodes))
    lam = mu ** (-2.0 / (dim.d - 2))
    r_max = q.grid.r_max

    def zeta_far(rho):
        qv = float(sample_scaled_state(gs, np.atleast_1d(lam * rho))[0]) / mu
        return abs(qv - float(w_profile(rho, dim))) ** r_pow * rho ** (dim.d - 1)

    # x = r_max/rho turns the algebraic far field into a smooth integrand;
    # near machine floor quad cannot certify its own relative target even
    # though the absolute bound (1e-8 of the bulk) is already met, so its
    # roundoff complaint is silenced for this one call
    import warnings
    from scipy.integrate import IntegrationWarning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        tail_val, _ = quad(lambda x: zeta_far(r_max / x) * r_max / x ** 2,
                           0.0, 1.0, epsrel=1e-6,
                           epsabs=max(1e-8 * abs(bulk) / dim.sphere_area, 1e-290),
                           limit=300)
    return (bulk + dim.sphere_area * tail_val) ** (1.0 / r_pow)


def _pde_residual(gs: GroundState, q: RadialField, mu: float, s_omega: float,
                  t_over_kappa: float) -> float:
    """Relative residual of the frame equation on interior nodes.

    Fourth-order stencils keep the discretization error well below the
    rescaling consistency being certified.
    """
    dim = gs.dim
    nodes = q.grid.nodes()
    h = q.grid.h
    v = q.values
    i = np.arange(2, len(v) - 2)
    d2 = (-v[i - 2] + 16 * v[i - 1] - 30 * v[i] + 16 * v[i + 1] - v[i + 2]) / (12 * h * h)
    d1 = (v[i - 2] - 8 * v[i - 1] + 8 * v[i + 1] - v[i + 2]) / (12 * h)
    lap = d2 + (dim.d - 1) / nodes[i] * d1
    amp = mu * gs.M_omega
    source = v[i] ** dim.p_crit + t_over_kappa * gs.spec.g(amp * v[i])
    resid = -lap + s_omega * v[i] - source
    scale = np.sqrt(np.mean((s_omega * v[i] + source) ** 2))
    return float(np.sqrt(np.mean(resid ** 2)) / scale)


def build_rescaled_state(gs: GroundState, mu: float | None = None,
                         tracked_rs: tuple = None) -> RescaledState:
    """Assemble the extremizer-frame package for one solved state."""
    dim = gs.dim
    res = solve_mu(gs) if mu is None else MuResult(mu, False, math.nan)
    mu_val = res.mu
    q = apply_T_lambda(gs.scaled_field, mu_val, tail=gs.tail)
    amp = mu_val * gs.M_omega
    s_omega = amp ** (-4.0 / (dim.d - 2)) * gs.omega
    kappa = -g_pairing_lambda_w(gs.spec, amp, dim)

    nodes = q.grid.nodes()
    lw = lambda_w(nodes, dim)
    gw = gs.spec.g(amp * w_profile(nodes, dim))
    bulk = -dim.sphere_area * float(simpson(gw * lw * nodes ** (dim.d - 1), x=nodes))
    tail_int, _ = quad(
        lambda r: float(gs.spec.g(amp * w_profile(r, dim))) *
        float(lambda_w(r, dim)) * r ** (dim.d - 1),
        q.grid.r_max, np.inf, epsabs=1e-14, epsrel=1e-10, limit=300)
    kappa_quad = bulk - dim.sphere_area * tail_int

    t_omega = amp ** (-dim.p_crit) * kappa
    if tracked_rs is None:
        tracked_rs = (dim.two_star, 4.0, 8.0)
    znorms = {r: _zeta_norm(gs, q, mu_val, r) for r in tracked_rs}
    zeta = q.copy_with(q.values - w_profile(nodes, dim))
    resid = _pde_residual(gs, q, mu_val, s_omega, t_omega / kappa)
    return RescaledState(omega=gs.omega, dim=dim, Q=q, mu=mu_val,
                         mu_fallback=res.fallback, s_omega=s_omega,
                         kappa=kappa, kappa_quad=kappa_quad, t_omega=t_omega,
                         zeta=zeta, zeta_norms=znorms, pde_residual=resid,
                         M_omega=gs.M_omega)


# ---------------------------------------------------------------------------
# the sweep report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticRow:
    omega: float
    s_omega: float
    t_omega: float
    beta_s: float
    ratio_t_beta: float
    zeta_norms: dict
    rate_ratios: dict


@dataclass(frozen=True)
class AsymptoticReport:
    rows: tuple
    verdicts: dict
    a1: float


def asymptotic_law_report(states, constants: ScaleConstants,
                          eps: float = 0.05,
                          final_rel_tol: float = 0.25) -> AsymptoticReport:
    """Sweep table with trend verdicts for the high-frequency laws.

    Checks, across states sorted by frequency: the frame frequency and the
    coupling decrease to zero; the ratio t/beta(s) approaches the derived
    constant monotonically over the last three points and lands within
    ``final_rel_tol`` of it; the difference norms decrease; and the rate
    law holds as a bounded-ratio check with margin ``eps`` on the exponent.
    """
    states = sorted(states, key=lambda st: st.omega)
    if len(states) < 3:
        raise ValueError("need at least three sweep points")
    dim = states[0].dim
    rows = []
    for st in states:
        beta = float(scale_beta(st.s_omega, dim))
        ratio = st.t_omega / beta
        rates = {}
        for r, znorm in st.zeta_norms.items():
            expo = (dim.d - 2) / 2.0 - dim.d / (2.0 * r) - eps
            rates[r] = znorm / st.s_omega ** expo
        rows.append(AsymptoticRow(
            omega=st.omega, s_omega=st.s_omega, t_omega=st.t_omega,
            beta_s=beta, ratio_t_beta=ratio, zeta_norms=dict(st.zeta_norms),
            rate_ratios=rates))

    a1 = constants.a1
    s_vals = [r.s_omega for r in rows]
    t_vals = [r.t_omega for r in rows]
    gaps = [abs(r.ratio_t_beta - a1) for r in rows[-3:]]
    verdicts = {
        "s_strictly_decreasing": all(b < a for a, b in zip(s_vals, s_vals[1:])),
        "t_decreasing_to_zero": all(b < a for a, b in zip(t_vals, t_vals[1:])),
        "ratio_toward_a1_monotone": all(b < a for a, b in zip(gaps, gaps[1:])),
        "final_ratio_within_tol": gaps[-1] <= final_rel_tol * a1,
    }
    for r in rows[0].zeta_norms:
        zn = [row.zeta_norms[r] for row in rows]
        verdicts[f"zeta_L{r:g}_nonincreasing"] = all(
            b <= a * (1 + 1e-9) for a, b in zip(zn, zn[1:]))
        rr = [row.rate_ratios[r] for row in rows]
        verdicts[f"zeta_L{r:g}_rate_bounded"] = all(
            b <= 1.25 * a for a, b in zip(rr, rr[1:]))
    return AsymptoticReport(rows=tuple(rows), verdicts=verdicts, a1=a1)
