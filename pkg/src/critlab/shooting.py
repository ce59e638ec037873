"""Shooting solver for the radial ground-state equation.

The solve runs in the unit-height frame u = m * phi(m^(2/(d-2)) x),
phi(0) = 1, where the shooting parameter is the center height m itself:
the bubble core is O(1) wide there for every frequency, so a uniform
grid resolves it.  The frequency seen by that frame is s = m^(-4/(d-2))
omega and every power of the nonlinearity carries a vanishing coefficient
m^(p - p_crit).

Classification of a shot is by the usual dichotomy (crossing / rebound /
decay) when an event fires inside the grid.  Near the critical height the
events move outside any fixed grid, so undecided shots are classified by
the sign of their growing-mode content at the outer edge, measured
against the growing-mode content the true solution must have there
(the nonlinear tail keeps sourcing both modes; one Picard pass over the
matched tail quantifies it).  This keeps the bisection contracting at
machine resolution on a fixed grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from . import _rk4
from .core import (CritlabError, Dimension, NonlinearitySpec, RadialField,
                   RadialGrid, check_admissibility)
from . import functionals


class NoBracketError(CritlabError):
    """No rebound/crossing bracket found within the height search range."""


class ResidualError(CritlabError):
    """Solver residuals exceeded tolerance; the grid is too coarse."""


@dataclass(frozen=True)
class ShotClassification:
    kind: str                      # "crossing" | "rebound" | "decay"
    event_radius: float | None


# ---------------------------------------------------------------------------
# homogeneous Helmholtz modes used for projection and tails
# ---------------------------------------------------------------------------

class _Modes:
    """Decaying/growing radial mode pair of -Lap + kappa^2 and its Wronskian.

    d=3 uses the elementary pair (e^{-kr}/r, sinh(kr)/r); d=4 the Bessel
    pair (K1(kr)/r, I1(kr)/r).  ``wronskian`` is the r-independent
    combination r^(d-1) (u_grow' u_dec - u_grow u_dec'), positive.
    """

    def __init__(self, kappa: float, dim: Dimension):
        self.kappa = kappa
        self.dim = dim
        if dim.d == 3:
            self.wronskian = kappa
        else:
            self.wronskian = 1.0

    def dec(self, r):
        k = self.kappa
        if self.dim.d == 3:
            return np.exp(-k * r) / r
        from scipy.special import k1
        return k1(k * r) / r

    def dec_prime(self, r):
        k = self.kappa
        if self.dim.d == 3:
            return -np.exp(-k * r) * (k * r + 1.0) / r ** 2
        from scipy.special import k0, k1
        return -k * k0(k * r) / r - 2.0 * k1(k * r) / r ** 2

    def grow(self, r):
        k = self.kappa
        if self.dim.d == 3:
            return np.sinh(k * r) / r
        from scipy.special import i1
        return i1(k * r) / r

    def grow_prime(self, r):
        k = self.kappa
        if self.dim.d == 3:
            return (k * np.cosh(k * r) * r - np.sinh(k * r)) / r ** 2
        from scipy.special import i0, i1
        return k * i0(k * r) / r - 2.0 * i1(k * r) / r ** 2

    def project(self, r, y, dy):
        """Coefficients (A, B) with y = A*dec + B*grow at radius r."""
        det = self.dec(r) * self.grow_prime(r) - self.grow(r) * self.dec_prime(r)
        a = (y * self.grow_prime(r) - dy * self.grow(r)) / det
        b = (self.dec(r) * dy - self.dec_prime(r) * y) / det
        return a, b


def _power_sum(values, coeffs, exps):
    out = np.zeros_like(values)
    for c, p in zip(coeffs, exps):
        out += c * values ** p
    return out


class TailModel:
    """Matched decaying-mode tail with one Picard correction.

    Beyond the matching radius the state solves the linear equation up to
    its own nonlinearity; writing it as A(x)*dec + B(x)*grow and feeding
    the pure matched mode through variation of parameters once captures
    the drift of both coefficients.  The model is evaluated on an explicit
    far grid (the remaining bulk nodes plus a geometrically stretched
    continuation out to ~40 e-folds) so every tail integral is a Simpson
    pass, with nothing left beyond the far end but e^{-80} dust.
    """

    def __init__(self, dim: Dimension, s: float, terms: tuple,
                 amplitude: float, rho_match: float,
                 bulk_nodes: np.ndarray | None = None,
                 q_crit: float | None = None):
        self.dim = dim
        self.s = s
        self.kappa = math.sqrt(s)
        self.amplitude = amplitude
        self.rho_match = rho_match
        self.terms = terms
        self.q_crit = dim.p_crit if q_crit is None else q_crit
        self.modes = _Modes(self.kappa, dim)
        self._build(bulk_nodes)

    def _build(self, bulk_nodes):
        k = self.kappa
        x_end = self.rho_match + 40.0 / k
        parts = []
        if bulk_nodes is not None and len(bulk_nodes) >= 2:
            parts.append(np.asarray(bulk_nodes, dtype=float))
            x0 = bulk_nodes[-1]
            step = bulk_nodes[1] - bulk_nodes[0]
        else:
            x0 = self.rho_match
            step = min(0.02 / k, (x_end - x0) / 4000.0)
            parts.append(np.array([x0]))
        ext = []
        cap = 0.02 / k
        x = x0
        while x < x_end:
            step = min(step * 1.03, cap)
            x += step
            ext.append(x)
        if ext:
            parts.append(np.array(ext))
        self.x = np.concatenate(parts)
        u_dec = self.modes.dec(self.x)
        u_grow = self.modes.grow(self.x)
        phi0 = self.amplitude * u_dec
        n0 = _power_sum(phi0, [1.0] + [c for c, _ in self.terms],
                        [self.q_crit] + [p for _, p in self.terms])
        meas = self.x ** (self.dim.d - 1)
        wr = self.modes.wronskian
        grow_int = cumulative_simpson(u_grow * n0 * meas, x=self.x, initial=0.0) / wr
        dec_cum = cumulative_simpson(u_dec * n0 * meas, x=self.x, initial=0.0)
        b = (dec_cum[-1] - dec_cum) / wr
        self.a_of_x = self.amplitude + grow_int
        self.b_of_x = b
        self.values = self.a_of_x * u_dec + b * u_grow
        self.derivs = (self.a_of_x * self.modes.dec_prime(self.x)
                       + b * self.modes.grow_prime(self.x))
        self.b_match = b[0]

    def value(self, rho):
        """Model value at arbitrary radii >= rho_match (log interpolation)."""
        rho = np.asarray(rho, dtype=float)
        out = np.exp(np.interp(rho, self.x, np.log(np.maximum(self.values, 1e-300))))
        beyond = rho > self.x[-1]
        if np.any(beyond):
            # pure decaying-mode continuation from the far end
            ratio = self.modes.dec(rho[beyond]) / self.modes.dec(self.x[-1])
            out = np.where(beyond, self.values[-1] * ratio, out)
        return out

    # --- tail integrals consumed by the functionals (from the bulk edge) ---

    def _slice(self):
        if not hasattr(self, "_i0"):
            self._i0 = 0
        return self._i0

    def anchor(self, r_start: float):
        """Set the radius the bulk quadrature hands over at."""
        self._i0 = int(np.searchsorted(self.x, r_start * (1 - 1e-12)))
        return self

    def lp_tail(self, p: float) -> float:
        i0 = self._slice()
        xs = self.x[i0:]
        return self.dim.sphere_area * float(
            simpson(self.values[i0:] ** p * xs ** (self.dim.d - 1), x=xs))

    def grad_sq_tail(self) -> float:
        i0 = self._slice()
        xs = self.x[i0:]
        return self.dim.sphere_area * float(
            simpson(self.derivs[i0:] ** 2 * xs ** (self.dim.d - 1), x=xs))


# ---------------------------------------------------------------------------
# shot integration and classification
# ---------------------------------------------------------------------------

_STATUS_KIND = {_rk4.CROSSING: "crossing", _rk4.REBOUND: "rebound",
                _rk4.DECAY: "decay", _rk4.OVERFLOW: "crossing"}


@dataclass
class _Shot:
    kind: str
    event_radius: float | None
    y: np.ndarray
    dy: np.ndarray
    i_last: int
    status: int
    b_meas: float = math.nan
    b_target: float = math.nan


def _run_shot(dim: Dimension, s: float, terms, center: float, grid: RadialGrid,
              project_undecided: bool) -> _Shot:
    coeffs = np.array([c for c, _ in terms], dtype=float)
    exps = np.array([p for _, p in terms], dtype=float)
    h = grid.h
    n = grid.n
    decay_u = 1e-8 * center
    decay_du = 1e-8 * center * math.sqrt(s)
    y, dy, status, i_last = _rk4.shoot(dim.d, s, dim.p_crit, coeffs, exps,
                                       center, h, n, decay_u, decay_du)
    r_event = i_last * h if status != _rk4.RAN_OUT else None
    if status != _rk4.RAN_OUT or not project_undecided:
        kind = _STATUS_KIND.get(status, "decay")
        return _Shot(kind, r_event, y, dy, i_last, status)

    # undecided within the grid: growing-mode content vs the true target
    kappa = math.sqrt(s)
    modes = _Modes(kappa, dim)
    i_proj = n - 4
    rho = i_proj * h
    a, b = modes.project(rho, y[i_proj], dy[i_proj])
    tail = TailModel(dim, s, tuple(terms), max(a, 1e-300), rho)
    kind = "rebound" if b > tail.b_match else "crossing"
    return _Shot(kind, None, y, dy, i_last, status, b_meas=b,
                 b_target=tail.b_match)


def integrate_shot(spec: NonlinearitySpec, dim: Dimension, omega: float,
                   a: float, grid: RadialGrid):
    """Integrate one raw-frame shot of height a and classify it.

    Overflow inside a step counts as the crossing side (large data dive
    through zero faster than the grid resolves).  Shots that reach the
    outer edge undecided are classified by their growing-mode content.
    Returns the trajectory truncated at the event together with the
    classification.
    """
    if a < 0 or omega <= 0:
        raise ValueError("need a >= 0 and omega > 0")
    if a == 0.0:
        zero = RadialField(grid, np.zeros(grid.n + 1), dim)
        return zero, ShotClassification("decay", None)
    shot = _run_shot(dim, omega, tuple(spec.terms), a, grid, project_undecided=True)
    i = shot.i_last
    vals = np.where(np.isfinite(shot.y), shot.y, 0.0)
    if shot.status != _rk4.RAN_OUT:
        # freeze the trajectory at the event; the far nodes were never run
        vals[i + 1:] = vals[i] if math.isfinite(shot.y[i]) else 0.0
    traj = RadialField(grid, vals, dim)
    return traj, ShotClassification(shot.kind, shot.event_radius)


# ---------------------------------------------------------------------------
# ground-state solve
# ---------------------------------------------------------------------------

@dataclass
class Diagnostics:
    nehari_residual: float
    pohozaev_residual: float
    mass_identity_residual: float
    monotone: bool
    bracket_rel: float
    classification: str           # "event" or "projection" at the final shot
    match_radius: float


@dataclass
class GroundState:
    """A solved positive decreasing radial ground state.

    ``field`` holds the raw-frame samples (value M_omega at the origin) on
    a uniform raw grid; the unit-height samples and the matched tail live
    alongside because every downstream consumer works in that frame.
    """

    omega: float
    spec: NonlinearitySpec
    dim: Dimension
    M_omega: float
    field: RadialField
    scaled_field: RadialField
    tail: TailModel
    diagnostics: Diagnostics | None = None

    @property
    def s_scaled(self) -> float:
        """Frequency seen by the unit-height frame, M^(-4/(d-2)) omega."""
        return self.M_omega ** (-4.0 / (self.dim.d - 2)) * self.omega

    @property
    def scaled_spec(self) -> NonlinearitySpec:
        return self.spec.rescaled(self.M_omega, self.dim)


def _default_rmax(n: int) -> float:
    return float(min(max(60.0, 0.025 * n), 1200.0))


def find_ground_state(spec: NonlinearitySpec, dim: Dimension, omega: float,
                      tol: float = 1e-12, n: int = 2 ** 14,
                      r_max: float | None = None,
                      residual_tol: float = 1e-4,
                      max_expand: int = 60) -> GroundState:
    """Bisect the center height between rebound and crossing witnesses.

    The returned state carries the composite field (shot out to the
    matching radius, matched tail beyond), with identity residuals already
    evaluated; residuals above ``residual_tol`` raise ResidualError.
    """
    report = check_admissibility(spec, dim)
    if not report.passed:
        raise ValueError("inadmissible nonlinearity: " + "; ".join(report.violations))
    if omega <= 0:
        raise ValueError("omega must be positive")
    grid = RadialGrid(_default_rmax(n) if r_max is None else r_max, n)
    expo = 4.0 / (dim.d - 2)

    def classify(m: float) -> _Shot:
        s = m ** (-expo) * omega
        terms = tuple(spec.rescaled(m, dim).terms)
        return _run_shot(dim, s, terms, 1.0, grid, project_undecided=True)

    lo, hi = 1.0, 2.0
    k = 0
    while classify(lo).kind != "rebound":
        lo *= 0.5
        k += 1
        if k > max_expand:
            raise NoBracketError(
                f"no rebound witness above height {lo:g} (omega={omega:g})")
    k = 0
    while classify(hi).kind == "rebound":
        hi *= 2.0
        k += 1
        if k > max_expand:
            raise NoBracketError(
                f"no crossing witness below height {hi:g} (omega={omega:g})")

    tol = max(tol, 5e-16)
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if classify(mid).kind == "rebound":
            lo = mid
        else:
            hi = mid
    m = 0.5 * (lo + hi)

    s = m ** (-expo) * omega
    terms = tuple(spec.rescaled(m, dim).terms)
    shot = _run_shot(dim, s, terms, 1.0, grid, project_undecided=True)
    kappa = math.sqrt(s)

    # matching node: just inside the reliable end of the shot
    if shot.status == _rk4.RAN_OUT:
        i_match = grid.n - 4
        cls_mode = "projection"
    else:
        i_match = max(8, int(shot.i_last * 0.97))
        cls_mode = "event"
    rho_match = i_match * grid.h
    modes = _Modes(kappa, dim)
    win = slice(max(1, i_match - 4), i_match + 1)
    rw = np.arange(max(1, i_match - 4), i_match + 1) * grid.h
    a_win, _ = modes.project(rw, shot.y[win], shot.dy[win])
    amplitude = float(np.median(a_win))
    if not (amplitude > 0 and np.isfinite(amplitude)):
        raise ResidualError("tail matching failed: nonpositive decaying amplitude")

    tail = TailModel(dim, s, terms, amplitude, rho_match,
                     bulk_nodes=grid.nodes()[i_match:])
    values = shot.y.copy()
    nbulk = grid.n - i_match
    values[i_match:] = tail.values[: nbulk + 1]
    tail.anchor(grid.r_max)
    if not np.all(values > 0.0):
        raise ResidualError("composite field is not positive; refine the grid")
    monotone = bool(np.all(np.diff(values) < 0.0))

    scaled_field = RadialField(grid, values, dim)
    raw_grid = RadialGrid(grid.r_max * m ** (-2.0 / (dim.d - 2)), n)
    raw_field = RadialField(raw_grid, m * values, dim)
    gs = GroundState(omega=omega, spec=spec, dim=dim, M_omega=m,
                     field=raw_field, scaled_field=scaled_field, tail=tail)
    rep = functionals.evaluate_identities(gs)
    gs.diagnostics = Diagnostics(
        nehari_residual=rep.nehari_residual,
        pohozaev_residual=rep.pohozaev_residual,
        mass_identity_residual=rep.mass_identity_residual,
        monotone=monotone,
        bracket_rel=(hi - lo) / hi,
        classification=cls_mode,
        match_radius=rho_match,
    )
    worst = max(rep.nehari_residual, rep.pohozaev_residual,
                rep.mass_identity_residual)
    if worst > residual_tol:
        raise ResidualError(
            f"identity residuals {worst:.3g} exceed {residual_tol:g}; "
            "the grid is too coarse for this frequency")
    if not monotone:
        raise ResidualError("solved state is not strictly decreasing")
    return gs


@dataclass(frozen=True)
class DecayCheckResult:
    constant: float
    passed: bool


def decay_check(gs: GroundState) -> DecayCheckResult:
    """Sup of the unit-height state times (1+r)^(d-2), with tail stability.

    The supremum is taken over the grid and again with the matched tail
    appended; pass means the two agree (the weighted profile peaked inside
    the computational domain and the algebraic-decay bound is grid-stable).
    """
    d = gs.dim.d
    rho = gs.scaled_field.grid.nodes()
    w = gs.scaled_field.values * (1.0 + rho) ** (d - 2)
    sup_grid = float(np.max(w))
    xt = gs.tail.x
    wt = gs.tail.values * (1.0 + xt) ** (d - 2)
    sup_full = max(sup_grid, float(np.max(wt)))
    passed = math.isfinite(sup_full) and sup_full <= sup_grid * (1.0 + 1e-9)
    return DecayCheckResult(constant=sup_full, passed=passed)
