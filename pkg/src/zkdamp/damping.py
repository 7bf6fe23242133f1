"""Damping profiles a(x) and the x1-dependent weight functions.

Profiles depend on x1 only (uniform, localized slab complement, or a
custom tabulated shape); gradients are analytic, never numerically
differentiated. Weights (the increasing bounded ``rho`` and the
exponential ``psi``) are sampled along the x1 axis together with their
first three analytic derivatives and are used for quadrature only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad as _quad
from scipy.special import erf as _erf

from .grid import FieldError, GridSpec, RealField


class DampingError(ValueError):
    """Invalid damping profile or weight construction."""


@dataclass(frozen=True)
class DampingProfile:
    """Nonnegative damping coefficient a(x) with analytic gradient."""

    grid: GridSpec
    a: RealField
    grad_a: tuple[RealField, ...]
    alpha0: float
    R: float
    ramp_width: float
    kind: str  # uniform | localized | custom

    def __post_init__(self):
        if self.kind not in ("uniform", "localized", "custom"):
            raise DampingError(f"unknown damping kind {self.kind!r}")
        if not (self.alpha0 > 0):
            raise DampingError(f"alpha0 must be positive, got {self.alpha0}")
        if self.R < 0:
            raise DampingError(f"R must be nonnegative, got {self.R}")
        if not (self.ramp_width > 0):
            raise DampingError(f"ramp_width must be positive, got {self.ramp_width}")
        if len(self.grad_a) != self.grid.dim:
            raise DampingError("grad_a must hold one field per axis")
        if np.any(self.a.values < 0):
            raise DampingError("damping must be nonnegative everywhere")

    @property
    def a_inf(self) -> float:
        """Sup norm of a."""
        return float(np.max(self.a.values))

    @property
    def grad_a_inf(self) -> float:
        g = np.zeros(self.grid.shape)
        for comp in self.grad_a:
            g += comp.values**2
        return float(np.sqrt(np.max(g)))


def make_uniform_damping(grid: GridSpec, alpha0: float) -> DampingProfile:
    """Constant damping a(x) = alpha0 > 0 on the whole box."""
    if not (alpha0 > 0):
        raise DampingError(f"alpha0 must be positive, got {alpha0}")
    a = RealField(grid, np.full(grid.shape, float(alpha0)))
    grad = tuple(RealField(grid, np.zeros(grid.shape)) for _ in range(grid.dim))
    return DampingProfile(grid, a, grad, float(alpha0), 0.0, 1.0, "uniform")


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _smoothstep_deriv(t: np.ndarray) -> np.ndarray:
    tc = np.clip(t, 0.0, 1.0)
    d = 6.0 * tc * (1.0 - tc)
    return np.where((t > 0) & (t < 1), d, 0.0)


def make_localized_damping(
    grid: GridSpec,
    alpha0: float,
    R: float,
    ramp_width: float,
    plateau: float | None = None,
) -> DampingProfile:
    """Damping vanishing on the slab |x1| <= R - ramp_width, at full strength outside |x1| >= R.

    The ramp is the cubic smoothstep t^2(3-2t) of the normalized distance
    into the transition layer, so a >= alpha0 holds on {|x1| > R} with
    plateau >= alpha0, and grad a is closed-form.
    """
    if plateau is None:
        plateau = alpha0
    if not (alpha0 > 0):
        raise DampingError(f"alpha0 must be positive, got {alpha0}")
    if not (R - ramp_width > 0):
        raise DampingError(
            f"need 0 < R - ramp_width, got R={R}, ramp_width={ramp_width}"
        )
    if not (R < grid.half_length[0]):
        raise DampingError(
            f"plateau must start inside the box: R={R} >= half_length={grid.half_length[0]}"
        )
    if not (plateau >= alpha0):
        raise DampingError(f"plateau={plateau} must be >= alpha0={alpha0}")

    x1 = grid.axis_coordinates(1)
    t = (np.abs(x1) - (R - ramp_width)) / ramp_width
    a1 = plateau * _smoothstep(t)
    da1 = plateau * _smoothstep_deriv(t) / ramp_width * np.sign(x1)

    shape = [1] * grid.dim
    shape[0] = grid.points[0]
    a = RealField(grid, np.broadcast_to(a1.reshape(shape), grid.shape).copy())
    comps = [RealField(grid, np.broadcast_to(da1.reshape(shape), grid.shape).copy())]
    for _ in range(grid.dim - 1):
        comps.append(RealField(grid, np.zeros(grid.shape)))
    return DampingProfile(
        grid, a, tuple(comps), float(alpha0), float(R), float(ramp_width), "localized"
    )


def load_profile_table(
    grid: GridSpec,
    path: str,
    alpha0: float,
    R: float = 0.0,
    ramp_width: float = 1.0,
) -> DampingProfile:
    """Custom profile from a two-column (x1, a) plain-text table.

    Lines starting with '#' are comments. Values are linearly interpolated
    onto the grid's x1 axis and clamped to the endpoint values outside the
    tabulated range; the x1-gradient is the active segment's slope.
    """
    xs, ys = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DampingError(f"{path}:{lineno}: expected two columns, got {len(parts)}")
            try:
                xs.append(float(parts[0]))
                ys.append(float(parts[1]))
            except ValueError as exc:
                raise DampingError(f"{path}:{lineno}: non-numeric entry") from exc
    if len(xs) < 2:
        raise DampingError(f"{path}: need at least two table rows")
    xs_a = np.asarray(xs)
    ys_a = np.asarray(ys)
    order = np.argsort(xs_a)
    xs_a, ys_a = xs_a[order], ys_a[order]
    if np.any(ys_a < 0):
        raise DampingError(f"{path}: damping values must be nonnegative")

    x1 = grid.axis_coordinates(1)
    a1 = np.interp(x1, xs_a, ys_a)
    slopes = np.diff(ys_a) / np.diff(xs_a)
    seg = np.clip(np.searchsorted(xs_a, x1, side="right") - 1, 0, len(slopes) - 1)
    da1 = np.where((x1 > xs_a[0]) & (x1 < xs_a[-1]), slopes[seg], 0.0)

    shape = [1] * grid.dim
    shape[0] = grid.points[0]
    a = RealField(grid, np.broadcast_to(a1.reshape(shape), grid.shape).copy())
    comps = [RealField(grid, np.broadcast_to(da1.reshape(shape), grid.shape).copy())]
    for _ in range(grid.dim - 1):
        comps.append(RealField(grid, np.zeros(grid.shape)))
    return DampingProfile(grid, a, tuple(comps), float(alpha0), float(R), float(ramp_width), "custom")


@dataclass
class DampingReport:
    """Validation summary of a profile against its stated constants."""

    a_min: float
    a_inf: float
    grad_a_inf: float
    plateau_min: float
    ok: bool
    violation_at: tuple[float, ...] | None = None


def validate_damping(p: DampingProfile) -> DampingReport:
    """Check a >= alpha0 on the region the profile's kind promises.

    Report-only: returns extrema and, on failure, the coordinates of the
    violating grid point.
    """
    vals = p.a.values
    a_min = float(vals.min())
    a_inf = float(vals.max())
    g_inf = p.grad_a_inf

    x1 = p.grid.axis_coordinates(1)
    if p.kind == "uniform":
        region = np.ones(len(x1), dtype=bool)
    else:
        region = np.abs(x1) > p.R
    if not region.any():
        return DampingReport(a_min, a_inf, g_inf, float("nan"), False, None)

    sub = vals[region, ...]
    plateau_min = float(sub.min())
    ok = plateau_min >= p.alpha0 - 1e-12
    violation_at = None
    if not ok:
        flat = int(np.argmin(sub))
        idx = list(np.unravel_index(flat, sub.shape))
        idx[0] = int(np.flatnonzero(region)[idx[0]])
        coords = [p.grid.axis_coordinates(ax + 1)[idx[ax]] for ax in range(p.grid.dim)]
        violation_at = tuple(float(c) for c in coords)
    return DampingReport(a_min, a_inf, g_inf, plateau_min, ok, violation_at)


# --- weight functions ---------------------------------------------------

_BLEND = 1.0  # curvature of the C^2 blend between the plateau and the exponential tail


def _tail_exponent(s: np.ndarray) -> np.ndarray:
    # g(s) = s - sqrt(pi/(4 b)) erf(sqrt(b) s); g' = 1 - exp(-b s^2) in [0, 1)
    b = _BLEND
    return s - np.sqrt(np.pi / (4.0 * b)) * _erf(np.sqrt(b) * s)


def _tail_exponent_d1(s: np.ndarray) -> np.ndarray:
    return 1.0 - np.exp(-_BLEND * s * s)


def _tail_exponent_d2(s: np.ndarray) -> np.ndarray:
    return 2.0 * _BLEND * s * np.exp(-_BLEND * s * s)


@dataclass(frozen=True)
class WeightFunction:
    """Sampled x1 weight with analytic first/second/third derivatives."""

    grid: GridSpec
    r: float
    kind: str  # rho | psi
    samples: np.ndarray = field(repr=False)
    d1: np.ndarray = field(repr=False)
    d2: np.ndarray = field(repr=False)
    d3: np.ndarray = field(repr=False)

    def broadcast(self, which: str = "samples") -> np.ndarray:
        """Weight samples broadcast to the grid's field shape."""
        arr = getattr(self, which)
        shape = [1] * self.grid.dim
        shape[0] = self.grid.points[0]
        return arr.reshape(shape)


def make_weight(grid: GridSpec, r: float, kind: str) -> WeightFunction:
    """Construct the rho or psi weight on the grid's x1 axis.

    rho: increasing, positive, bounded; rho' = 1 exactly on [-r, r] and
    decays like exp(-(|x1| - r)) outside through a C^2 blend keeping
    |rho''| <= rho' pointwise. The antiderivative is shifted by the total
    variation so rho > 0 everywhere.

    psi: exp(x1 - max x1), scaled into (0, 1], so psi' = psi exactly.
    """
    if kind not in ("rho", "psi"):
        raise DampingError(f"unknown weight kind {kind!r}")
    if not (0 < r < grid.half_length[0]):
        raise DampingError(
            f"need 0 < r < half_length (= {grid.half_length[0]}), got r={r}"
        )
    x1 = grid.axis_coordinates(1)

    if kind == "psi":
        w = np.exp(x1 - x1[-1])
        return WeightFunction(grid, float(r), "psi", w, w.copy(), w.copy(), w.copy())

    s = np.abs(x1) - r
    outside = s > 0
    so = s[outside]
    g = _tail_exponent(so)
    gp = _tail_exponent_d1(so)
    gpp = _tail_exponent_d2(so)

    d1 = np.ones_like(x1)
    d1[outside] = np.exp(-g)
    d2 = np.zeros_like(x1)
    d2[outside] = -np.sign(x1[outside]) * gp * np.exp(-g)
    d3 = np.zeros_like(x1)
    d3[outside] = (gp * gp - gpp) * np.exp(-g)

    # antiderivative of d1: x1 inside the plateau, numeric tail integral outside
    tail = lambda t: np.exp(-_tail_exponent(t))
    samples = np.empty_like(x1)
    for i, xv in enumerate(x1):
        if xv > r:
            samples[i] = r + _quad(tail, 0.0, xv - r, epsabs=1e-13, epsrel=1e-13)[0]
        elif xv < -r:
            samples[i] = -r - _quad(tail, 0.0, -xv - r, epsabs=1e-13, epsrel=1e-13)[0]
        else:
            samples[i] = xv
    tail_mass = _quad(tail, 0.0, np.inf, epsabs=1e-13, epsrel=1e-13)[0]
    total_variation = 2.0 * r + 2.0 * tail_mass
    samples = samples + total_variation

    w = WeightFunction(grid, float(r), "rho", samples, d1, d2, d3)
    if not (w.samples > 0).all():
        raise DampingError("rho construction failed to stay positive")
    return w
