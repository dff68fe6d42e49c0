"""Optical-lattice proposal calculator for the four-site dipolar ring.

Geometry: a horizontal square lattice (spacing l = lambda/2) from two
retro-reflected 532 nm beams, a vertical accordion lattice of spacing
d_sw = lambda/(2 sin(alpha/2)), and an attractive central Gaussian beam
(waist w1) that isolates a 2x2 plaquette.  A weak movable beam (waist
w_b) displaced by (dx, dy) provides the site-imbalance fields mu, nu.

Trap frequencies at the plaquette:

    omega_r = sqrt((2/m)(V0 k^2 + 2 V1 / w1^2)),
    omega_z = sqrt((2/m)(pi^2 V2 / d_sw^2 + V1 / R1^2)),   R1 = pi w1^2 / lambda,

with k = 2 pi / lambda.  The interaction integrals use the Gaussian
ground state of width eta = m omega_r / (2 hbar) (inverse length^2) and
aspect ratio kappa^2 = omega_z / omega_r.  On-site coupling:

    U0 = kappa (eta/pi)^(3/2) (g - (C_dd/3) f(kappa)),

with g = 4 pi hbar^2 a / m, C_dd = mu_0 mu1^2, and f the standard
dipolar anisotropy function.  (The bare product kappa eta^3/pi^3 is not
an inverse volume; the square-root reading above is the dimensionally
consistent one and is the one that reproduces the published
integrability frequencies.)  Inter-site dipolar coupling at in-plane
distance d (a semi-infinite Hankel-type integral over the in-plane
wavevector q):

    U_1j = (C_dd / 4 pi) Int_0^inf dq q e^{-q^2/(4 eta)} J0(q d) Z(q),
    Z(q) = (4/3) sqrt(kappa^2 eta / pi) - q erfcx(q / (2 kappa sqrt(eta))),

whose d -> 0 limit recovers the on-site dipolar term.  All couplings
are returned as angular frequencies (X/hbar in rad/s); lengths are in
meters and energies in joules elsewhere.

The Dy-164 magnetic moment is calibrated (see calibrate_moment) so that
the a = -21 a0 integrability root lands at omega_r = 2 pi x 37.078 kHz;
the uncorrected literature value 9.93 mu_B is kept available for
sensitivity studies (the root frequency moves ~25x faster than C_dd).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants, integrate, optimize, special

from .model import ModelParameters

HBAR = constants.hbar
MU_0 = constants.mu_0
BOHR_RADIUS = constants.physical_constants["Bohr radius"][0]
BOHR_MAGNETON = constants.physical_constants["Bohr magneton"][0]
ATOMIC_MASS = constants.atomic_mass

DY164_MASS = 164.0 * ATOMIC_MASS
DY_MOMENT_LITERATURE = 9.93  # Bohr magnetons, uncalibrated
# Pinned by calibrate_moment() so that solve_integrability at a = -21 a0
# returns omega_r = 2 pi x 37.078 kHz for the default trap (see tests).
DY_MOMENT_CALIBRATED = 9.978541109384


class QuadratureError(RuntimeError):
    """Dipolar integral failed to reach the requested accuracy."""


def anisotropy_f(kappa: float) -> float:
    """Standard dipolar anisotropy function f(kappa).

    f(0+) = 1, f(1) = 0, f(inf) = -2, monotone decreasing.  Near
    kappa = 1 the closed forms are 0/0; a series in u = kappa^2 - 1 is
    used there.
    """
    if kappa <= 0.0:
        raise ValueError(f"kappa must be positive, got {kappa:g}")
    ksq = kappa * kappa
    u = ksq - 1.0
    if abs(u) < 1e-5:
        # f = sum_{k>=1} 6 (-1)^k u^k / ((2k+1)(2k+3))
        total, term = 0.0, 1.0
        for k in range(1, 12):
            term *= -u
            total += 6.0 * term / ((2 * k + 1) * (2 * k + 3))
        return total
    if kappa < 1.0:
        root = math.sqrt(1.0 - ksq)
        return (1.0 + 2.0 * ksq) / (1.0 - ksq) - 3.0 * ksq * math.atanh(root) / (1.0 - ksq) ** 1.5
    root = math.sqrt(ksq - 1.0)
    return (1.0 + 2.0 * ksq) / (1.0 - ksq) + 3.0 * ksq * math.atan(root) / (ksq - 1.0) ** 1.5


@dataclass(frozen=True)
class TrapParameters:
    """Inputs of the physical proposal (SI units; moments in mu_B, a in a0)."""

    wavelength: float = 0.532e-6
    w1: float = 1.0e-6
    w_b: float = 5.0e-6
    alpha: float = math.pi / 3.0
    v1_ratio: float = 1.0       # V1 / V0
    v2_ratio: float = 9.0       # V2 / V0
    vb_ratio: float = 5.0e-3    # V_b / V0
    scattering_length_a0: float = -21.0
    mass: float = DY164_MASS
    magnetic_moment_mub: float = DY_MOMENT_CALIBRATED
    # omega_z / omega_r.  The default is the self-consistent value of the
    # trap formulas at the working radial frequency (omega_z_formula /
    # omega_r with the default depth ratios), not an independent quantity.
    kappa_sq: float = 1.489

    def __post_init__(self):
        if self.wavelength <= 0.0 or self.mass <= 0.0:
            raise ValueError("wavelength and mass must be positive")
        if self.w1 <= self.wavelength:
            raise ValueError("central-beam waist must exceed the wavelength")
        if self.w_b <= 0.0 or self.kappa_sq <= 0.0:
            raise ValueError("w_b and kappa_sq must be positive")

    @property
    def lattice_spacing(self) -> float:
        return self.wavelength / 2.0

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def d_sw(self) -> float:
        """Vertical accordion spacing lambda / (2 sin(alpha/2))."""
        return self.wavelength / (2.0 * math.sin(self.alpha / 2.0))

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.w1**2 / self.wavelength

    @property
    def kappa(self) -> float:
        return math.sqrt(self.kappa_sq)

    @property
    def delta(self) -> float:
        """Site-compression factor 1 + 2 V1/(V0 k^2 w1^2) from the central beam."""
        return 1.0 + 2.0 * self.v1_ratio / (self.wavenumber**2 * self.w1**2)

    @property
    def scattering_length(self) -> float:
        return self.scattering_length_a0 * BOHR_RADIUS

    @property
    def contact_g(self) -> float:
        """g = 4 pi hbar^2 a / m (J m^3)."""
        return 4.0 * math.pi * HBAR**2 * self.scattering_length / self.mass

    @property
    def c_dd(self) -> float:
        """C_dd = mu_0 mu1^2 (J m^3)."""
        return MU_0 * (self.magnetic_moment_mub * BOHR_MAGNETON) ** 2

    def eta(self, omega_r: float) -> float:
        """Inverse squared radial oscillator length, m omega_r / (2 hbar)."""
        return self.mass * omega_r / (2.0 * HBAR)

    def nearest_distance(self) -> float:
        return self.lattice_spacing / self.delta

    def diagonal_distance(self) -> float:
        return math.sqrt(2.0) * self.lattice_spacing / self.delta


def recoil_energy(trap: TrapParameters) -> float:
    """E_R / hbar = hbar k^2 / (2 m) in rad/s."""
    return HBAR * trap.wavenumber**2 / (2.0 * trap.mass)


def v0_from_omega_r(trap: TrapParameters, omega_r: float) -> float:
    """Invert omega_r = sqrt((2/m)(V0 k^2 + 2 V1/w1^2)) for V0 (J)."""
    if omega_r <= 0.0:
        raise ValueError("omega_r must be positive")
    return trap.mass * omega_r**2 / (
        2.0 * (trap.wavenumber**2 + 2.0 * trap.v1_ratio / trap.w1**2)
    )


def omega_z_formula(trap: TrapParameters, omega_r: float) -> float:
    """Vertical frequency from the accordion depth V2 = v2_ratio V0."""
    v0 = v0_from_omega_r(trap, omega_r)
    return math.sqrt(
        (2.0 / trap.mass) * (
            math.pi**2 * trap.v2_ratio * v0 / trap.d_sw**2
            + trap.v1_ratio * v0 / trap.rayleigh_range**2
        )
    )


def onsite_coupling(trap: TrapParameters, omega_r: float) -> float:
    """U0/hbar = kappa (eta/pi)^(3/2) (g - (C_dd/3) f(kappa)) / hbar."""
    if omega_r <= 0.0:
        raise ValueError("omega_r must be positive")
    eta = trap.eta(omega_r)
    prefactor = trap.kappa * (eta / math.pi) ** 1.5
    return prefactor * (trap.contact_g - trap.c_dd * anisotropy_f(trap.kappa) / 3.0) / HBAR


def onsite_dipolar(trap: TrapParameters, omega_r: float) -> float:
    """The dipolar part of U0/hbar alone (rad/s); equals the d->0 limit of U_1j."""
    eta = trap.eta(omega_r)
    prefactor = trap.kappa * (eta / math.pi) ** 1.5
    return -prefactor * trap.c_dd * anisotropy_f(trap.kappa) / 3.0 / HBAR


def dipolar_coupling(
    trap: TrapParameters,
    omega_r: float,
    distance: float,
    rel_tol: float = 1e-4,
) -> float:
    """U_1j/hbar at in-plane distance d by adaptive quadrature (rad/s).

    The erfcx form of the kernel is overflow-free; the Gaussian factor
    is < 1e-42 beyond the cutoff q = 14 sqrt(eta), where the kernel has
    already flattened to a constant, so the truncation error is far
    below the requested tolerance.
    """
    if omega_r <= 0.0 or distance < 0.0:
        raise ValueError("omega_r must be positive and distance non-negative")
    eta = trap.eta(omega_r)
    kappa = trap.kappa
    sqrt_eta = math.sqrt(eta)
    z_origin = (4.0 / 3.0) * math.sqrt(kappa**2 * eta / math.pi)

    def integrand(q):
        kernel = z_origin - q * special.erfcx(q / (2.0 * kappa * sqrt_eta))
        return q * math.exp(-q * q / (4.0 * eta)) * special.j0(q * distance) * kernel

    cutoff = 14.0 * sqrt_eta
    value, abserr = integrate.quad(integrand, 0.0, cutoff, epsabs=0.0, epsrel=1e-10, limit=500)
    if value != 0.0 and abserr > rel_tol * abs(value):
        raise QuadratureError(
            f"dipolar integral reached relative error {abserr / abs(value):.2e} "
            f"> {rel_tol:g} at d = {distance:g} m"
        )
    return trap.c_dd / (4.0 * math.pi) * value / HBAR


def offsite_coupling(trap: TrapParameters, omega_r: float, pair: str) -> float:
    """Dipolar coupling for the nearest (l/delta) or diagonal (sqrt(2) l/delta) pair."""
    if pair == "nearest":
        distance = trap.nearest_distance()
    elif pair == "diagonal":
        distance = trap.diagonal_distance()
    else:
        raise ValueError(f"pair must be 'nearest' or 'diagonal', got {pair!r}")
    return dipolar_coupling(trap, omega_r, distance)


def integrability_residual(trap: TrapParameters, omega_r: float) -> float:
    """U0(omega_r) - U13(omega_r) in rad/s; zero at the integrable point."""
    return onsite_coupling(trap, omega_r) - offsite_coupling(trap, omega_r, "diagonal")


@dataclass(frozen=True)
class IntegrabilityRoot:
    """Solution of U0(omega_r) = U13(omega_r)."""

    omega_r: float   # rad/s
    u0: float        # rad/s
    u13: float       # rad/s
    u12: float       # rad/s (nearest-neighbor coupling at the root)
    residual: float  # rad/s


def solve_integrability(
    trap: TrapParameters,
    bracket: tuple[float, float] = (2.0 * math.pi * 20e3, 2.0 * math.pi * 60e3),
) -> IntegrabilityRoot:
    """Find omega_r with U0 = U13 by bracketed root-finding (rel. tol 1e-6)."""
    lo, hi = bracket
    f_lo = integrability_residual(trap, lo)
    f_hi = integrability_residual(trap, hi)
    if f_lo == 0.0:
        root = lo
    elif f_hi == 0.0:
        root = hi
    elif f_lo * f_hi > 0.0:
        raise ValueError(
            f"no integrable point in bracket [{lo:g}, {hi:g}] rad/s: "
            f"U0 - U13 = {f_lo:g} and {f_hi:g} at the endpoints"
        )
    else:
        root = optimize.brentq(
            lambda w: integrability_residual(trap, w), lo, hi, rtol=1e-8)
    u0 = onsite_coupling(trap, root)
    u13 = offsite_coupling(trap, root, "diagonal")
    u12 = offsite_coupling(trap, root, "nearest")
    return IntegrabilityRoot(omega_r=root, u0=u0, u13=u13, u12=u12, residual=u0 - u13)


def field_strengths(
    trap: TrapParameters, v0: float, dx: float, dy: float
) -> tuple[float, float]:
    """Displacement-beam fields (mu, nu) in rad/s.

    mu = 2 V_b l (dx - dy) / (w_b^2 delta hbar),
    nu = 2 V_b l (dx + dy) / (w_b^2 delta hbar);
    with |dx| = |dy| only one of them is nonzero at a time.
    """
    if abs(dx) >= trap.w_b or abs(dy) >= trap.w_b:
        raise ValueError("displacements must stay within the beam waist")
    v_b = trap.vb_ratio * v0
    scale = 2.0 * v_b * trap.lattice_spacing / (trap.w_b**2 * trap.delta * HBAR)
    return scale * (dx - dy), scale * (dx + dy)


@dataclass(frozen=True)
class LatticeDerived:
    """Everything the proposal derives at a given radial frequency."""

    omega_r: float          # rad/s
    omega_z: float          # rad/s, kappa_sq * omega_r
    omega_z_check: float    # rad/s, from the accordion-depth formula
    omega_beam: float       # rad/s, central-beam frequency sqrt(4 V1/(m w1^2))
    eta: float              # 1/m^2
    recoil: float           # E_R/hbar, rad/s
    delta: float
    v0: float               # J
    v0_over_recoil: float
    u0: float               # rad/s
    u12: float              # rad/s
    u13: float              # rad/s
    coupling_u: float       # (U12 - U0)/4, rad/s
    mu: float               # rad/s
    nu: float               # rad/s


def derive(
    trap: TrapParameters,
    omega_r: float,
    dx: float = 0.0,
    dy: float = 0.0,
) -> LatticeDerived:
    """Evaluate the full chain of derived quantities at omega_r."""
    v0 = v0_from_omega_r(trap, omega_r)
    u0 = onsite_coupling(trap, omega_r)
    u12 = offsite_coupling(trap, omega_r, "nearest")
    u13 = offsite_coupling(trap, omega_r, "diagonal")
    mu, nu = field_strengths(trap, v0, dx, dy)
    recoil = recoil_energy(trap)
    return LatticeDerived(
        omega_r=omega_r,
        omega_z=trap.kappa_sq * omega_r,
        omega_z_check=omega_z_formula(trap, omega_r),
        omega_beam=math.sqrt(4.0 * trap.v1_ratio * v0 / (trap.mass * trap.w1**2)),
        eta=trap.eta(omega_r),
        recoil=recoil,
        delta=trap.delta,
        v0=v0,
        v0_over_recoil=v0 / (HBAR * recoil),
        u0=u0,
        u12=u12,
        u13=u13,
        coupling_u=(u12 - u0) / 4.0,
        mu=mu,
        nu=nu,
    )


def model_parameters_from_lattice(derived: LatticeDerived, j: float) -> ModelParameters:
    """Ready-to-use couplings; J is an input (no tunneling formula is used).

    When U0 and U13 agree to within the root solver's tolerance the pair
    is snapped to its mean so the result satisfies the exact integrability
    check that the protocol constructors enforce.  Away from the root the
    raw (non-integrable) values are kept.
    """
    u0, u13 = derived.u0, derived.u13
    if abs(u0 - u13) <= 1e-6 * max(abs(u0), abs(u13)):
        u0 = u13 = 0.5 * (derived.u0 + derived.u13)
    return ModelParameters(
        u0=u0,
        u12=derived.u12, u14=derived.u12, u23=derived.u12, u34=derived.u12,
        u13=u13, u24=u13,
        j=j,
    )


def calibrate_moment(
    trap: TrapParameters,
    target_omega_r: float,
    bracket_mub: tuple[float, float] = (9.0, 11.0),
) -> float:
    """Magnetic moment (in mu_B) placing the integrability root at target_omega_r.

    Solves U0(target) = U13(target) for mu1; used once to pin
    DY_MOMENT_CALIBRATED against the published root frequency.
    """
    def residual(moment):
        candidate = TrapParameters(
            wavelength=trap.wavelength, w1=trap.w1, w_b=trap.w_b,
            alpha=trap.alpha, v1_ratio=trap.v1_ratio, v2_ratio=trap.v2_ratio,
            vb_ratio=trap.vb_ratio,
            scattering_length_a0=trap.scattering_length_a0,
            mass=trap.mass, magnetic_moment_mub=moment,
            kappa_sq=trap.kappa_sq,
        )
        return integrability_residual(candidate, target_omega_r)

    lo, hi = bracket_mub
    if residual(lo) * residual(hi) > 0.0:
        raise ValueError(f"no calibrating moment in [{lo:g}, {hi:g}] mu_B")
    return float(optimize.brentq(residual, lo, hi, rtol=1e-10))
