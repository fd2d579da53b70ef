"""Closed-form disc analytics: Green functions, conformal radius, hitting
probabilities, Poisson kernels, and the first-moment integral of the chaos
measure.

Everything in this module is exact up to quadrature and serves as the oracle
side of every Monte Carlo estimate the engine produces. Analytics exist for
discs only; the rectangle domain is simulation-only and any analytic request
for it raises UnsupportedDomainError.

Conventions: natural logarithms throughout; points are in domain length units;
the Green function normalization is the one with G(y,z) = -log|y-z| + log R(y)
+ o(1) near the diagonal on the unit disc.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Union

from scipy import integrate
from scipy.integrate import IntegrationWarning

from .errors import QuadratureError, UnsupportedDomainError

# Flag threshold for leading-order hitting formulas: the approximation is only
# trusted while the target radius is well below the distance to the boundary.
ASYMPTOTIC_REGIME_FACTOR = 0.1

# Default absolute tolerance for the adaptive first-moment quadrature.
QUAD_ABS_TOL = 1e-8


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("point components must be finite")

    def as_complex(self) -> complex:
        return complex(self.x, self.y)

    def dist(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


ORIGIN = Point2(0.0, 0.0)


@dataclass(frozen=True)
class Disc:
    """Open disc domain with the walk origin x0 stored as ``start``."""

    center: Point2
    radius: float
    start: Point2

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("disc radius must be positive")
        if self.center.dist(self.start) >= self.radius:
            raise ValueError("start point must be strictly interior")

    def contains(self, p: Point2, strict: bool = True) -> bool:
        d = self.center.dist(p)
        return d < self.radius if strict else d <= self.radius

    def boundary_distance(self, p: Point2) -> float:
        return self.radius - self.center.dist(p)


@dataclass(frozen=True)
class Rectangle:
    """Open axis-aligned rectangle domain (simulation only, no analytics)."""

    lower_left: Point2
    width: float
    height: float
    start: Point2

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("rectangle sides must be positive")
        if not self.contains(self.start, strict=True):
            raise ValueError("start point must be strictly interior")

    def contains(self, p: Point2, strict: bool = True) -> bool:
        dx = p.x - self.lower_left.x
        dy = p.y - self.lower_left.y
        if strict:
            return 0 < dx < self.width and 0 < dy < self.height
        return 0 <= dx <= self.width and 0 <= dy <= self.height

    def boundary_distance(self, p: Point2) -> float:
        dx = p.x - self.lower_left.x
        dy = p.y - self.lower_left.y
        return min(dx, self.width - dx, dy, self.height - dy)


DomainSpec = Union[Disc, Rectangle]


@dataclass(frozen=True)
class CircleSpec:
    """Circle of radius eps around a center x (the local-time target)."""

    center: Point2
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("circle radius must be positive")


class AsymptoticValue(NamedTuple):
    """Value of a leading-order formula plus its regime flag.

    ``in_regime`` is False when the inputs sit outside the asymptotic regime
    the formula was derived in; the value is still returned (clamped where the
    contract says so) but should be treated as indicative only.
    """

    value: float
    in_regime: bool


def _require_disc(domain: DomainSpec) -> Disc:
    if not isinstance(domain, Disc):
        raise UnsupportedDomainError(
            "analytic formulas are available for disc domains only"
        )
    return domain


def green_disc(domain: DomainSpec, y: Point2, z: Point2) -> float:
    """Green function of the disc, killed on the boundary.

    For the disc D(c, rho) this is

        G(y, z) = log( |1 - conj(y-c)(z-c)/rho^2| / (|y-z|/rho) ),

    which is symmetric, positive inside, and vanishes as either argument
    reaches the boundary. Points on the closed boundary are accepted (value 0);
    exterior points and y = z are rejected.
    """
    disc = _require_disc(domain)
    if y == z:
        raise ValueError("Green function diverges at y = z")
    rho = disc.radius
    if disc.center.dist(y) > rho * (1 + 1e-12) or disc.center.dist(z) > rho * (1 + 1e-12):
        raise ValueError("both points must lie in the closed disc")
    c = disc.center.as_complex()
    w1 = (y.as_complex() - c) / rho
    w2 = (z.as_complex() - c) / rho
    num = abs(1.0 - w1.conjugate() * w2)
    den = abs(w1 - w2)
    val = math.log(num / den)
    # float fuzz can leave a tiny negative value for boundary points
    return max(val, 0.0)


def conformal_radius(domain: DomainSpec, x: Point2) -> float:
    """Conformal radius R(x, D) of a disc: (rho^2 - |x-c|^2)/rho.

    Reduces to 1 - |x|^2 on the unit disc. The general-disc form is the
    Moebius rescaling of the unit-disc formula and is validated against the
    Green-function short-distance asymptotic in the test suite.
    """
    disc = _require_disc(domain)
    d = disc.center.dist(x)
    if d >= disc.radius:
        raise ValueError("conformal radius requires a strictly interior point")
    return (disc.radius ** 2 - d ** 2) / disc.radius


def hit_prob_concentric(dist: float, eps: float, rho: float) -> float:
    """Exact probability of reaching the eps-circle before the rho-circle.

    Both circles are concentric; the start is at distance ``dist`` from their
    common center. Returns log(dist/rho) / log(eps/rho). Endpoints are allowed
    and give the exact degenerate values 1 (on the target) and 0 (killed).
    """
    if not (0 < eps < rho):
        raise ValueError("need 0 < eps < rho")
    if dist < eps or dist > rho:
        raise ValueError("start distance must satisfy eps <= dist <= rho")
    if dist == eps:
        return 1.0
    if dist == rho:
        return 0.0
    return math.log(dist / rho) / math.log(eps / rho)


def hit_prob_general(domain: DomainSpec, y: Point2, target: CircleSpec) -> AsymptoticValue:
    """Leading-order probability that the motion from y reaches the target
    circle before leaving the domain.

    Returns G_D(x, y) / log(R(x, D)/eps) where x is the target center, clamped
    to [0, 1]. This is an approximation with relative error of order
    eps/log(eps); the flag is False when eps > 0.1 * d(x, boundary), i.e.
    outside the regime where the error term is small.
    """
    disc = _require_disc(domain)
    x = target.center
    eps = target.radius
    if disc.boundary_distance(x) <= eps:
        raise ValueError("target circle must lie strictly inside the domain")
    if y.dist(x) < eps:
        raise ValueError("start point must lie outside the target circle")
    big_r = conformal_radius(disc, x)
    log_ratio = math.log(big_r / eps)
    if log_ratio <= 0:
        raise ValueError("target radius reaches the conformal radius scale")
    raw = green_disc(disc, x, y) / log_ratio
    value = min(max(raw, 0.0), 1.0)
    # the leading-order formula is trusted only for targets well inside the
    # domain, starts off the target circle, and values that stay
    # probabilities; clamping means the regime was left
    in_regime = (
        eps <= ASYMPTOTIC_REGIME_FACTOR * disc.boundary_distance(x)
        and y.dist(x) > eps
        and raw <= 1.0
    )
    return AsymptoticValue(value, in_regime)


def two_circle_bounds(
    p_ab_lo: float,
    p_ab_hi: float,
    p_ba_lo: float,
    p_ba_hi: float,
    p_za: float,
    p_zb: float,
) -> tuple[float, float]:
    """Sandwich for the probability of reaching circle A while avoiding B.

    Inputs are lower/upper bounds on the crossing probabilities A->B and B->A
    (uniform over the source circle) plus the plain hitting probabilities from
    the start z. Returns

        lower = (p_za - p_ba_hi * p_zb) / (1 - p_ba_hi * p_ab_lo)
        upper = (p_za - p_ba_lo * p_zb) / (1 - p_ba_lo * p_ab_hi)

    For probabilistically consistent inputs lower <= true value <= upper.
    """
    for name, p in (
        ("p_ab_lo", p_ab_lo),
        ("p_ab_hi", p_ab_hi),
        ("p_ba_lo", p_ba_lo),
        ("p_ba_hi", p_ba_hi),
        ("p_za", p_za),
        ("p_zb", p_zb),
    ):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must be a probability, got {p}")
    if p_ab_lo > p_ab_hi or p_ba_lo > p_ba_hi:
        raise ValueError("lower bounds must not exceed upper bounds")
    den_lo = 1.0 - p_ba_hi * p_ab_lo
    den_hi = 1.0 - p_ba_lo * p_ab_hi
    if den_lo <= 0 or den_hi <= 0:
        raise ValueError("denominator 1 - p_ba*p_ab must be positive")
    lower = (p_za - p_ba_hi * p_zb) / den_lo
    upper = (p_za - p_ba_lo * p_zb) / den_hi
    return lower, upper


def poisson_kernel_circle(circle: CircleSpec, y: Point2, xi: Point2) -> float:
    """Harmonic measure density (w.r.t. arc length) of a circle seen from y.

    For a circle of radius R centered c, an interior point y and a boundary
    point xi: (1/(2 pi R)) * (R^2 - |y-c|^2) / |y - xi|^2. Integrates to 1
    over the circle and is constant 1/(2 pi R) from the center.
    """
    big_r = circle.radius
    d = circle.center.dist(y)
    if d >= big_r:
        raise ValueError("y must be strictly inside the circle")
    if abs(circle.center.dist(xi) - big_r) > 1e-9 * big_r:
        raise ValueError("xi must lie on the circle")
    return (big_r ** 2 - d ** 2) / (2.0 * math.pi * big_r * y.dist(xi) ** 2)


def expected_local_time_ring(eps: float, r: float) -> float:
    """Mean circle local time at radius eps before exiting the r-disc, started
    on the eps-circle itself: 2 eps log(r/eps). Exact for concentric circles."""
    if eps <= 0 or eps >= r:
        raise ValueError("need 0 < eps < r")
    return 2.0 * eps * math.log(r / eps)


def expected_local_time_domain(domain: DomainSpec, x: Point2, eps: float) -> AsymptoticValue:
    """Leading-order mean circle local time before exiting the domain, started
    on the circle: 2 eps (log(1/eps) + log R(x, D)).

    The o(1) correction is dropped. When log(1/eps) + log R <= 0 the leading
    order is vacuous; the value is clamped to 0 and flagged out of regime.
    """
    disc = _require_disc(domain)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if disc.boundary_distance(x) <= eps:
        raise ValueError("circle must lie strictly inside the domain")
    term = math.log(1.0 / eps) + math.log(conformal_radius(disc, x))
    if term <= 0:
        return AsymptoticValue(0.0, False)
    return AsymptoticValue(2.0 * eps * term, True)


def first_moment_density(domain: DomainSpec, gamma: float, x: Point2) -> float:
    """Density of the mean chaos measure at x:

        sqrt(2 pi) * gamma * R(x, D)^(gamma^2/2) * G_D(x0, x)

    with x0 the domain start. Vanishes on the boundary; diverges
    logarithmically at x0 (rejected).
    """
    disc = _require_disc(domain)
    if not 0.0 < gamma < 2.0:
        raise ValueError("gamma must lie in (0, 2)")
    if x == disc.start:
        raise ValueError("density diverges at the start point")
    d = disc.center.dist(x)
    if d > disc.radius * (1 + 1e-12):
        raise ValueError("x must lie in the closed disc")
    if d >= disc.radius:
        return 0.0
    big_r = conformal_radius(disc, x)
    return (
        math.sqrt(2.0 * math.pi)
        * gamma
        * big_r ** (gamma ** 2 / 2.0)
        * green_disc(disc, disc.start, x)
    )


@dataclass(frozen=True)
class Annulus:
    """Annular region r_inner <= |p - center| <= r_outer (r_inner may be 0)."""

    center: Point2
    r_inner: float
    r_outer: float

    def __post_init__(self) -> None:
        if self.r_inner < 0 or self.r_outer < self.r_inner:
            raise ValueError("need 0 <= r_inner <= r_outer")

    def contains(self, p: Point2) -> bool:
        d = self.center.dist(p)
        return self.r_inner <= d <= self.r_outer

    def area(self) -> float:
        return math.pi * (self.r_outer ** 2 - self.r_inner ** 2)


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned rectangular region (used for rectangle-in-disc integrals)."""

    lower_left: Point2
    width: float
    height: float

    def __post_init__(self) -> None:
        if self.width < 0 or self.height < 0:
            raise ValueError("sides must be nonnegative")

    def contains(self, p: Point2) -> bool:
        dx = p.x - self.lower_left.x
        dy = p.y - self.lower_left.y
        return 0 <= dx <= self.width and 0 <= dy <= self.height

    def area(self) -> float:
        return self.width * self.height


Region = Union[Annulus, RectRegion]


def _ray_intervals(region: Region, origin: Point2, ct: float, st: float) -> list[tuple[float, float]]:
    """Intersection of the ray origin + t(ct, st), t >= 0, with the region.

    Returns up to two [t0, t1] intervals (annulus with the ray crossing the
    hole) or one (everything else). Used by the polar quadrature around the
    Green singularity at the origin.
    """
    if isinstance(region, RectRegion):
        t_lo, t_hi = 0.0, math.inf
        for p0, d, lo, size in (
            (origin.x, ct, region.lower_left.x, region.width),
            (origin.y, st, region.lower_left.y, region.height),
        ):
            hi = lo + size
            if abs(d) < 1e-300:
                if not (lo <= p0 <= hi):
                    return []
                continue
            ta = (lo - p0) / d
            tb = (hi - p0) / d
            if ta > tb:
                ta, tb = tb, ta
            t_lo = max(t_lo, ta)
            t_hi = min(t_hi, tb)
        return [(t_lo, t_hi)] if t_lo < t_hi else []

    # annulus: solve |origin + t u - c|^2 = r^2, a quadratic with leading 1
    ex = origin.x - region.center.x
    ey = origin.y - region.center.y
    b = ex * ct + ey * st
    c0 = ex * ex + ey * ey

    def disc_interval(r: float) -> tuple[float, float] | None:
        disc = b * b - (c0 - r * r)
        if disc <= 0:
            return None
        root = math.sqrt(disc)
        t0, t1 = -b - root, -b + root
        t0 = max(t0, 0.0)
        return (t0, t1) if t0 < t1 else None

    outer = disc_interval(region.r_outer)
    if outer is None:
        return []
    if region.r_inner == 0.0:
        return [outer]
    inner = disc_interval(region.r_inner)
    if inner is None:
        return [outer]
    out: list[tuple[float, float]] = []
    if outer[0] < inner[0]:
        out.append((outer[0], min(outer[1], inner[0])))
    if inner[1] < outer[1]:
        out.append((max(outer[0], inner[1]), outer[1]))
    return out


class QuadratureResult(NamedTuple):
    value: float
    error_estimate: float


def first_moment_integral(
    domain: DomainSpec,
    gamma: float,
    region: Region,
    abs_tol: float = QUAD_ABS_TOL,
) -> QuadratureResult:
    """Integral of first_moment_density over a region, by adaptive quadrature.

    Integration runs in polar coordinates centered at the start point x0 so
    that the logarithmic Green singularity becomes the integrable t*log(t) at
    the origin of each ray. The region boundary is resolved exactly by ray
    clipping, so the integrand is smooth on every inner interval.

    Returns the value with a (conservative) error estimate; raises
    QuadratureError if scipy's adaptive rule reports non-convergence.
    """
    disc = _require_disc(domain)
    if not 0.0 < gamma < 2.0:
        raise ValueError("gamma must lie in (0, 2)")
    x0 = disc.start
    g2 = gamma ** 2 / 2.0

    def density_at(t: float, ct: float, st: float) -> float:
        p = Point2(x0.x + t * ct, x0.y + t * st)
        d = disc.center.dist(p)
        if d >= disc.radius or t == 0.0:
            return 0.0
        big_r = (disc.radius ** 2 - d ** 2) / disc.radius
        return (
            math.sqrt(2.0 * math.pi)
            * gamma
            * big_r ** g2
            * green_disc(disc, x0, p)
        )

    inner_errs: list[float] = []

    def along_ray(theta: float) -> float:
        ct, st = math.cos(theta), math.sin(theta)
        total = 0.0
        for t0, t1 in _ray_intervals(region, x0, ct, st):
            t1 = min(t1, 2.0 * disc.radius)  # region may poke past the domain
            if t1 <= t0:
                continue
            val, err = integrate.quad(
                lambda t: density_at(t, ct, st) * t,
                t0,
                t1,
                epsabs=abs_tol * 1e-2,
                epsrel=1e-10,
                limit=200,
            )
            total += val
            inner_errs.append(err)
        return total

    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, outer_err = integrate.quad(
                along_ray, 0.0, 2.0 * math.pi, epsabs=abs_tol, epsrel=1e-10, limit=200
            )
        except IntegrationWarning as exc:
            raise QuadratureError(f"first-moment quadrature did not converge: {exc}") from exc
    err = outer_err + 2.0 * math.pi * (max(inner_errs) if inner_errs else 0.0)
    return QuadratureResult(max(value, 0.0), err)


@dataclass(frozen=True)
class MobiusMap:
    """Automorphism of the unit disc: z -> e^{i alpha} (z - a)/(1 - conj(a) z)."""

    a: complex
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.a) >= 1.0:
            raise ValueError("the map parameter a must lie inside the unit disc")

    def apply(self, z: complex) -> complex:
        return complex(math.cos(self.alpha), math.sin(self.alpha)) * (z - self.a) / (
            1.0 - self.a.conjugate() * z
        )

    def inverse(self, w: complex) -> complex:
        u = complex(math.cos(-self.alpha), math.sin(-self.alpha)) * w
        return (u + self.a) / (1.0 + self.a.conjugate() * u)

    def deriv_abs(self, z: complex) -> float:
        return (1.0 - abs(self.a) ** 2) / abs(1.0 - self.a.conjugate() * z) ** 2


def conformal_covariance_check(
    phi: MobiusMap, gamma: float, x: Point2, x0: Point2 = ORIGIN
) -> float:
    """Relative residual of the covariance identity on first-moment densities.

    Let d be the density for (unit disc, start x0) and d' the density for the
    mapped start phi(x0). Pulling d' back through phi (with its |phi'|^2 area
    Jacobian) must equal |phi'(x)|^(2 + gamma^2/2) times d:

        d'(phi(x)) * |phi'(x)|^2  ==  |phi'(x)|^(2 + gamma^2/2) * d(x).

    The identity is exact, so the residual is pure floating-point noise
    (<= 1e-12 for rotations, <= 1e-9 generally).
    """
    unit = Disc(ORIGIN, 1.0, x0)
    z = x.as_complex()
    if abs(z) >= 1.0:
        raise ValueError("test point must be strictly inside the unit disc")
    w = phi.apply(z)
    w0 = phi.apply(x0.as_complex())
    mapped = Disc(ORIGIN, 1.0, Point2(w0.real, w0.imag))
    d = first_moment_density(unit, gamma, x)
    d_prime = first_moment_density(mapped, gamma, Point2(w.real, w.imag))
    j = phi.deriv_abs(z)
    lhs = d_prime * j ** 2
    rhs = j ** (2.0 + gamma ** 2 / 2.0) * d
    if lhs == 0.0:
        return abs(rhs)
    return abs(lhs - rhs) / abs(lhs)
