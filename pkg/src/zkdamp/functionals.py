"""Scalar diagnostics: energies, balance residuals, inequality reports.

Everything here is a pure function of fields and recorded histories. Time
integrals over histories are trapezoidal on the recorded samples. Cubic
quadratures are alias-controlled: the public ``hamiltonian`` uses 2x
zero-padding (exact for any grid function), while records of dealiased
runs pair the cube against the two-thirds-projected square, which is what
the conservative solver actually sees (the two coincide exactly for
band-limited fields).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft
from scipy.integrate import cumulative_trapezoid as _cumtrap

from .damping import DampingProfile, WeightFunction
from .grid import GridSpec, RealField, quadrature


class FunctionalError(ValueError):
    pass


@dataclass(frozen=True)
class EnergyRecord:
    """One time sample of every integral the balance checks consume.

    Core fields mirror the timeseries CSV columns; ``extras`` carries the
    damping and weight integrands needed by the Hamiltonian balance and
    the Kato smoothing check.
    """

    t: float
    E: float
    H: float
    grad_sq: float
    h1_sq: float
    dissipation: float
    local_E: float
    local_grad_sq_weighted: float
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.E < 0 or self.grad_sq < 0:
            raise FunctionalError("E and grad_sq must be nonnegative")
        if self.dissipation < -1e-12:
            raise FunctionalError("dissipation must be nonnegative")
        if self.local_E > 2.0 * self.E + 1e-9 * (1.0 + self.E):
            raise FunctionalError("local_E cannot exceed the full L2 mass")


CSV_FIELDS = (
    "t",
    "E",
    "H",
    "grad_sq",
    "h1_sq",
    "dissipation",
    "local_E",
    "local_grad_sq_weighted",
)


def energy(u: RealField) -> float:
    """E(u) = 1/2 integral of u^2."""
    return 0.5 * quadrature(RealField(u.grid, u.values**2))


def cubic_integral(f: RealField) -> float:
    """Alias-free integral of f^3 via 2x zero-padded evaluation.

    Exact for the cube of the grid's trigonometric interpolant: padding
    doubles the resolvable band, and a cubic of modes below the original
    Nyquist stays below the padded one.
    """
    g = f.grid
    coeffs = np.fft.fftshift(_fft.fftn(f.values))
    fine_shape = tuple(2 * n for n in g.shape)
    big = np.zeros(fine_shape, dtype=complex)
    sl = tuple(slice(n // 2, n // 2 + n) for n in g.shape)
    big[sl] = coeffs
    scale = np.prod(fine_shape) / g.total_points
    u_fine = _fft.ifftn(np.fft.ifftshift(big)).real * scale
    cell_fine = g.cell_volume / 2**g.dim
    return cell_fine * float(np.sum(u_fine**3))


def _gradients(u: RealField):
    """Spectral gradient components plus Laplacian, via one rfft."""
    g = u.grid
    keep = g.shape[-1] // 2 + 1
    F = _fft.rfftn(u.values)
    grads = []
    mag2 = np.zeros(F.shape)
    for ax in range(g.dim):
        xi = g.frequencies(ax + 1)
        if ax == g.dim - 1:
            xi = xi[:keep]
        shape = [1] * g.dim
        shape[ax] = len(xi)
        xi_b = xi.reshape(shape)
        mag2 = mag2 + xi_b**2
        xi_odd = xi.copy()
        # Nyquist sits at index N/2 on full axes and at the end of the half axis
        xi_odd[g.shape[ax] // 2 if ax < g.dim - 1 else -1] = 0.0
        grads.append(_fft.irfftn(1j * xi_odd.reshape(shape) * F, s=g.shape))
    lap_u = _fft.irfftn(-mag2 * F, s=g.shape)
    return F, grads, lap_u


def hamiltonian(u: RealField) -> float:
    """H(u) = integral of |grad u|^2 - u^3/3, gradient spectral, cube alias-free."""
    _, grads, _ = _gradients(u)
    gsq = np.zeros(u.grid.shape)
    for comp in grads:
        gsq += comp**2
    return quadrature(RealField(u.grid, gsq)) - cubic_integral(u) / 3.0


def h1_norm_sq(u: RealField) -> float:
    """Squared H1 norm: integral of u^2 + |grad u|^2."""
    _, grads, _ = _gradients(u)
    gsq = u.values**2
    for comp in grads:
        gsq = gsq + comp**2
    return quadrature(RealField(u.grid, gsq))


def _dealias_half_mask(g: GridSpec) -> np.ndarray:
    keep = g.shape[-1] // 2 + 1
    mask = np.ones(g.shape[:-1] + (keep,), dtype=bool)
    for ax in range(g.dim):
        k = g.wavevectors(ax + 1)
        if ax == g.dim - 1:
            k = k[:keep]
        cut = g.shape[ax] / 3.0
        shape = [1] * g.dim
        shape[ax] = len(k)
        mask &= np.abs(k).reshape(shape) <= cut
    return mask


def compute_record(
    u: RealField,
    t: float,
    profile: DampingProfile | None = None,
    weight: WeightFunction | None = None,
    local_radius: float | None = None,
    dealiased: bool = True,
) -> EnergyRecord:
    """Evaluate every recorded integral at one time sample.

    With ``dealiased`` the cubic integrands pair the field against its
    two-thirds-projected square, matching the solver's conservative
    nonlinearity, and the damping cross term integral of grad a . grad(u^2)
    is evaluated with the derivative moved off a:

        integral grad a . grad(u^2) = -2 integral a |grad u|^2 - 2 integral a u lap u,

    which is exact in the continuum and pairs exactly with the discrete
    damping operator (the smoothstep ramp is too rough for the sampled
    analytic grad a to do so at the required tolerance).
    """
    g = u.grid
    cell = g.cell_volume
    uval = u.values
    u2 = uval * uval

    F, grads, lap_u = _gradients(u)
    gsq = np.zeros(g.shape)
    for comp in grads:
        gsq += comp**2

    if dealiased:
        mask = _dealias_half_mask(g)
        dsq = _fft.irfftn(np.where(mask, _fft.rfftn(u2), 0.0), s=g.shape)
    else:
        dsq = u2

    E = 0.5 * cell * float(u2.sum())
    grad_sq = cell * float(gsq.sum())
    cube = cell * float((dsq * uval).sum())
    H = grad_sq - cube / 3.0
    h1_sq = 2.0 * E + grad_sq

    if local_radius is None:
        local_radius = 0.5 * g.half_length[0]
    x1 = g.axis_coordinates(1)
    ind = (np.abs(x1) <= local_radius).reshape([-1] + [1] * (g.dim - 1))
    local_E = cell * float((u2 * ind).sum())

    extras: dict = {"local_radius": float(local_radius)}
    if profile is not None:
        a = profile.a.values
        dissipation = cell * float((a * u2).sum())
        a_grad_sq = cell * float((a * gsq).sum())
        extras["a_grad_sq"] = a_grad_sq
        extras["grad_a_dot_grad_u2"] = -2.0 * a_grad_sq - 2.0 * cell * float(
            (a * uval * lap_u).sum()
        )
        extras["a_u3"] = cell * float((a * uval * dsq).sum())
    else:
        dissipation = 0.0
        extras["a_grad_sq"] = 0.0
        extras["grad_a_dot_grad_u2"] = 0.0
        extras["a_u3"] = 0.0

    local_grad_sq_weighted = 0.0
    if weight is not None and weight.kind == "rho":
        rho_b = weight.broadcast("samples")
        d1_b = weight.broadcast("d1")
        d3_b = weight.broadcast("d3")
        local_grad_sq_weighted = cell * float((gsq * d1_b).sum())
        extras["u2_rho"] = cell * float((u2 * rho_b).sum())
        extras["u2_rho3"] = cell * float((u2 * d3_b).sum())
        extras["u3_rho1"] = cell * float((u2 * uval * d1_b).sum())
        extras["kato_flux"] = cell * float(((2.0 * grads[0] ** 2 + gsq) * d1_b).sum())
        if profile is not None:
            extras["a_u2_rho"] = cell * float((profile.a.values * u2 * rho_b).sum())
        else:
            extras["a_u2_rho"] = 0.0

    return EnergyRecord(
        t=float(t),
        E=E,
        H=H,
        grad_sq=grad_sq,
        h1_sq=h1_sq,
        dissipation=dissipation,
        local_E=local_E,
        local_grad_sq_weighted=local_grad_sq_weighted,
        extras=extras,
    )


# --- balance residuals ----------------------------------------------------


def _series(history, key):
    if key in CSV_FIELDS:
        return np.array([getattr(r, key) for r in history])
    try:
        return np.array([r.extras[key] for r in history])
    except KeyError as exc:
        raise FunctionalError(
            f"history is missing the recorded integrand {key!r}"
        ) from exc


def _times(history):
    t = np.array([r.t for r in history])
    if len(t) < 2:
        raise FunctionalError("need at least two records")
    return t


def _cum(t, y):
    return np.concatenate([[0.0], _cumtrap(y, t)])


def l2_balance_residual(history) -> float:
    """Max normalized defect of  2E(t) + 2 int_0^t int a u^2  =  2E(0)."""
    t = _times(history)
    E = _series(history, "E")
    diss = _series(history, "dissipation")
    lhs = 2.0 * E + 2.0 * _cum(t, diss)
    return float(np.max(np.abs(lhs - 2.0 * E[0])) / (2.0 * E[0]))


def h_balance_residual(history) -> float:
    """Max normalized defect of the Hamiltonian balance identity.

    H(t) + int_0^t int [grad a . grad(u^2) + 2 a |grad u|^2]
        = H(0) + int_0^t int a u^3,
    normalized by |H(0)| + 1.
    """
    t = _times(history)
    H = _series(history, "H")
    cross = _series(history, "grad_a_dot_grad_u2")
    a_gsq = _series(history, "a_grad_sq")
    a_u3 = _series(history, "a_u3")
    lhs = H + _cum(t, cross + 2.0 * a_gsq)
    rhs = H[0] + _cum(t, a_u3)
    return float(np.max(np.abs(lhs - rhs)) / (abs(H[0]) + 1.0))


@dataclass
class KatoReport:
    """Two-sided Kato smoothing check over one recorded run."""

    lhs: float  # int_0^T int |grad u|^2 rho'
    rhs: float  # int u0^2 rho + int int u^2 rho''' + 2/3 int int u^3 rho'
    identity_residual: float
    lhs_le_rhs: bool
    initial_weighted_mass: float


def kato_check(history, weight: WeightFunction, profile=None) -> KatoReport:
    """Evaluate the weighted smoothing identity and the derived inequality.

    The identity residual is the max-over-time normalized defect of

        1/2 int u^2 rho + 1/2 II[(2 u_x1^2 + |grad u|^2) rho']
        - 1/2 II[u^2 rho'''] - 1/3 II[u^3 rho'] + II[a u^2 rho]
        = 1/2 int u0^2 rho,

    where II is the trapezoidal time integral of the recorded integrand.
    """
    if weight.kind != "rho":
        raise FunctionalError(f"kato_check needs a rho weight, got {weight.kind!r}")
    t = _times(history)
    u2_rho = _series(history, "u2_rho")
    flux = _series(history, "kato_flux")
    u2_rho3 = _series(history, "u2_rho3")
    u3_rho1 = _series(history, "u3_rho1")
    a_u2_rho = _series(history, "a_u2_rho")

    lhs_t = (
        0.5 * u2_rho
        + 0.5 * _cum(t, flux)
        - 0.5 * _cum(t, u2_rho3)
        - _cum(t, u3_rho1) / 3.0
        + _cum(t, a_u2_rho)
    )
    norm = 0.5 * u2_rho[0]
    residual = float(np.max(np.abs(lhs_t - norm)) / norm) if norm > 0 else float(
        np.max(np.abs(lhs_t))
    )

    grad_rho1 = _series(history, "local_grad_sq_weighted")
    lhs = float(_cum(t, grad_rho1)[-1])
    rhs = float(u2_rho[0] + _cum(t, u2_rho3)[-1] + (2.0 / 3.0) * _cum(t, u3_rho1)[-1])
    return KatoReport(
        lhs=lhs,
        rhs=rhs,
        identity_residual=residual,
        lhs_le_rhs=bool(lhs <= rhs + 1e-12 * (1.0 + abs(rhs))),
        initial_weighted_mass=float(u2_rho[0]),
    )


# --- inequality reports -----------------------------------------------------


@dataclass
class InequalityReport:
    lhs: float
    gradient_term: float
    l2_terms: float
    epsilon: float
    min_constant: float


def weighted_cubic_report(f: RealField, weight: WeightFunction, epsilon: float) -> InequalityReport:
    """Weighted cubic estimate: |int psi f^3| <= eps int psi |grad f|^2 + c(...) l2 terms.

    The L2 block is ||f||^(2(6-n)/(4-n)) + ||f||^2 (exponent 4 in 2D, 6 in
    3D); min_constant is the smallest c closing the inequality for this f.
    """
    if weight.kind != "psi":
        raise FunctionalError(f"weighted_cubic_report needs a psi weight, got {weight.kind!r}")
    if not (epsilon > 0):
        raise FunctionalError(f"epsilon must be positive, got {epsilon}")
    g = f.grid
    psi_b = weight.broadcast("samples")
    cell = g.cell_volume
    _, grads, _ = _gradients(f)
    gsq = np.zeros(g.shape)
    for comp in grads:
        gsq += comp**2

    lhs = abs(cell * float((psi_b * f.values**3).sum()))
    gradient_term = cell * float((psi_b * gsq).sum())
    l2_sq = cell * float((f.values**2).sum())
    n = g.dim
    expo = 2.0 * (6 - n) / (4 - n)
    l2_terms = l2_sq ** (expo / 2.0) + l2_sq
    if l2_terms > 0:
        min_constant = max(0.0, (lhs - epsilon * gradient_term) / l2_terms)
    else:
        min_constant = 0.0
    return InequalityReport(lhs, gradient_term, l2_terms, float(epsilon), min_constant)


@dataclass(frozen=True)
class GNExponents:
    """Exponent tuple for the interpolation inequality
    ||d^j f||_p <= c ||d^m f||_q^theta ||f||_r^(1-theta)."""

    p: float
    j: int
    m: int
    q: float
    r: float
    theta: float

    def scaling_defect(self, n: int) -> float:
        lhs = 1.0 / self.p - self.j / n
        rhs = self.theta * (1.0 / self.q - self.m / n) + (1.0 - self.theta) / self.r
        return lhs - rhs


def cubic_gn_exponents(n: int) -> GNExponents:
    """The instance ||u||_3^3 <~ ||grad u||^(n/2) ||u||^((6-n)/2)."""
    return GNExponents(p=3.0, j=0, m=1, q=2.0, r=2.0, theta=n / 6.0)


@dataclass
class GNReport:
    lhs: float
    rhs_core: float
    constant: float
    exponents: GNExponents


def gn_report(f: RealField, exponents: GNExponents | None = None) -> GNReport:
    """Empirical constant of the cubic interpolation instance.

    lhs = ||f||_3^3 and rhs_core = ||grad f||^(n/2) ||f||^((6-n)/2); the
    exponent tuple is validated against the scaling relation first.
    """
    n = f.grid.dim
    if exponents is None:
        exponents = cubic_gn_exponents(n)
    defect = exponents.scaling_defect(n)
    if abs(defect) > 1e-12:
        raise FunctionalError(
            f"exponent tuple violates the scaling relation: "
            f"1/p - j/n != theta(1/q - m/n) + (1-theta)/r (defect {defect:.3e})"
        )
    if not (exponents.j / exponents.m <= exponents.theta <= 1.0):
        raise FunctionalError(
            f"theta={exponents.theta} outside [j/m, 1] = "
            f"[{exponents.j / exponents.m}, 1]"
        )
    cell = f.grid.cell_volume
    lhs = cell * float((np.abs(f.values) ** 3).sum())
    l2 = np.sqrt(cell * float((f.values**2).sum()))
    _, grads, _ = _gradients(f)
    gsq = np.zeros(f.grid.shape)
    for comp in grads:
        gsq += comp**2
    grad_l2 = np.sqrt(cell * float(gsq.sum()))
    rhs_core = grad_l2 ** (n / 2.0) * l2 ** ((6.0 - n) / 2.0)
    constant = lhs / rhs_core if rhs_core > 0 else 0.0
    return GNReport(lhs=lhs, rhs_core=rhs_core, constant=constant, exponents=exponents)


@dataclass
class ObservabilityReport:
    R: float
    T: float
    numerator: float
    denominator: float
    ratio: float


def observability_ratio(history, R: float, T: float | None = None) -> ObservabilityReport:
    """Ratio of slab mass to total dissipation over [0, T].

    numerator = int_0^T int_{|x1|<=R} u^2, denominator = int_0^T int a u^2.
    A zero denominator with positive numerator reports an infinite ratio
    (the damping never sees the solution).
    """
    t = _times(history)
    rec_R = history[0].extras.get("local_radius")
    if rec_R is not None and abs(rec_R - R) > 1e-9 * max(1.0, R):
        raise FunctionalError(
            f"history recorded Q_R integrals with R={rec_R}, asked for R={R}"
        )
    local = _series(history, "local_E")
    diss = _series(history, "dissipation")
    if T is None:
        T = float(t[-1])
    if T > t[-1] + 1e-12:
        raise FunctionalError(f"run only reaches t={t[-1]}, asked for T={T}")
    num_c = _cum(t, local)
    den_c = _cum(t, diss)
    numerator = float(np.interp(T, t, num_c))
    denominator = float(np.interp(T, t, den_c))
    if denominator > 0:
        ratio = numerator / denominator
    else:
        ratio = 0.0 if numerator == 0.0 else float("inf")
    return ObservabilityReport(float(R), float(T), numerator, denominator, ratio)


@dataclass
class DecayConstants:
    """The Gronwall constant b and the H-decay rate it predicts."""

    b: float
    predicted_rate: float


def compute_b(alpha0: float, epsilon: float, a_inf: float) -> DecayConstants:
    """b = 3 (2 alpha0 - eps (1 + ||a||_inf)) / (4 (2 alpha0 - eps)).

    The predicted Hamiltonian decay rate is (2 alpha0 - eps) b. Requires
    0 < eps < alpha0 and a positive numerator, otherwise the choice of b
    cannot close the decay argument.
    """
    if not (0 < epsilon < alpha0):
        raise FunctionalError(
            f"need 0 < epsilon < alpha0, got epsilon={epsilon}, alpha0={alpha0}"
        )
    numerator = 2.0 * alpha0 - epsilon * (1.0 + a_inf)
    if numerator <= 0:
        raise FunctionalError(
            f"2*alpha0 - epsilon*(1 + a_inf) = {numerator} must be positive"
        )
    b = 3.0 * numerator / (4.0 * (2.0 * alpha0 - epsilon))
    return DecayConstants(b=b, predicted_rate=(2.0 * alpha0 - epsilon) * b)
