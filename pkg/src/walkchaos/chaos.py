"""Multiplicative-chaos measures built from walk occupation fields.

Turns the per-site visit counts of one killed walk into exponential
functionals of its circle-average local times: the normalized chaos measure
(`build_mu`), the excursion-count measure over a threshold (`build_nu`), the
thick-point mask, and the ladder "good event" masks used to filter both
measures.  Everything here is a pure function of the occupation field and
the parameters; the only randomness lives in the walk.

Cells are the lattice sites of the walk raster, each owning area h^2 and
evaluated at its center.  A cell whose circle of radius eps is not strictly
inside the domain scores local time 0 but keeps its cell weight (the
boundary convention of the continuum construction).

The local-time field over the whole grid is one convolution of the count
grid with a fixed annulus kernel: relative to a lattice-aligned center the
band occupies the same integer offsets for every cell, so per-cell ring
sums reduce to `fftconvolve` followed by rounding back to exact integers.
"""
from __future__ import annotations

import json
import math
import warnings
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .errors import SubResolutionError
from .geometry import Annulus, Disc, DomainSpec, Point2, Rectangle, RectRegion, Region
from .walk import (
    LatticeConfig,
    OccupationField,
    _build_frame,
    _snap,
    cfg_to_dict,
    domain_to_dict,
)

__all__ = [
    "ScaleLadder",
    "ChaosField",
    "ThickPointMask",
    "GoodEventParams",
    "GoodEventMasks",
    "Measurements",
    "ProfileResult",
    "ConsistencyResult",
    "ladder_radii",
    "local_time_grid",
    "region_cells",
    "build_mu",
    "build_nu",
    "chaos_measurements",
    "chaos_measurements_many",
    "nu_exponential_profile",
    "profile_from_masses",
    "mu_nu_consistency",
    "consistency_from_masses",
    "thick_points",
    "good_event_mask",
    "top_mass_fraction",
    "render_heatmap",
    "write_chaos_csv",
    "write_chaos_summary",
]

_LADDER_TOL = 1e-9


# -------------------------------------------------------------------- types

@dataclass(frozen=True)
class ScaleLadder:
    """Geometric scale ladder base * e^-p for p = p_min..p_max."""

    base: float
    p_min: int
    p_max: int

    def __post_init__(self) -> None:
        if self.base <= 0:
            raise ValueError("base must be positive")
        if self.p_min > self.p_max:
            raise ValueError("need p_min <= p_max")

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(self.base * math.exp(-p) for p in range(self.p_min, self.p_max + 1))

    def validate_resolution(self, cfg: LatticeConfig) -> None:
        if min(self.values) < 2.0 * cfg.h:
            raise SubResolutionError("ladder reaches below twice the lattice spacing")


@dataclass(frozen=True)
class ChaosField:
    """One realization of the normalized chaos measure on the cell grid.

    `weights` is zero outside `region_mask`; `mass` is the sum over the
    region and `normalization` the scalar sqrt|log eps| * eps^(gamma^2/2)
    shared by every cell.
    """

    gamma: float
    eps: float
    h: float
    origin: Point2
    normalization: float
    weights: np.ndarray
    region_mask: np.ndarray
    mass: float
    n_cells: int

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 2.0:
            raise ValueError("gamma must lie in (0, 2)")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.weights.shape != self.region_mask.shape:
            raise ValueError("weights and region_mask must share a shape")
        if np.any(self.weights < 0.0):
            raise ValueError("cell weights are nonnegative")
        if np.any(self.weights[~self.region_mask] != 0.0):
            raise ValueError("weights must vanish outside the region")
        total = float(self.weights.sum())
        if not math.isclose(self.mass, total, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("mass must equal the sum of cell weights")
        if self.n_cells != int(self.region_mask.sum()):
            raise ValueError("n_cells must count the region cells")


@dataclass(frozen=True)
class ThickPointMask:
    """Cells whose normalized local time clears the gamma^2 threshold."""

    gamma: float
    eps: float
    mask: np.ndarray
    area: float


@dataclass(frozen=True)
class GoodEventParams:
    """Parameters of the regularity event: a dominating exponent
    gamma_tilde, a coarsest scale eps0 on the e^-p ladder, and the width M
    of the window around gamma * log(1/eps)."""

    gamma: float
    gamma_tilde: float
    eps0: float
    m_window: float

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.gamma_tilde <= self.gamma:
            raise ValueError("gamma_tilde must exceed gamma")
        if self.m_window <= 0:
            raise ValueError("m_window must be positive")
        p = -math.log(self.eps0)
        if abs(p - round(p)) > _LADDER_TOL or round(p) < 1:
            raise ValueError("eps0 must be e^-p for an integer p >= 1")


@dataclass(frozen=True)
class GoodEventMasks:
    """Ladder mask `g` and window mask `g_prime`, both already excluding
    cells within eps0 of the start or of the boundary."""

    g: np.ndarray
    g_prime: np.ndarray
    radii: tuple[float, ...]

    @property
    def combined(self) -> np.ndarray:
        return self.g & self.g_prime


@dataclass(frozen=True)
class Measurements:
    """Scalar summaries of one occupation field at fixed gamma and eps."""

    mu_mass: float
    nu_masses: tuple[float, ...]
    thick_area: float


@dataclass(frozen=True)
class ProfileResult:
    b_values: tuple[float, ...]
    ratios: np.ndarray
    n_used: int
    n_dropped: int


@dataclass(frozen=True)
class ConsistencyResult:
    ratio: float
    mu_mean: float
    nu_mean: float
    n_replicas: int
    flagged: bool


def ladder_radii(eps: float, eps0: float) -> tuple[float, ...]:
    """Rungs e^-p inside [eps, eps0], descending, with eps appended when it
    is not itself a rung.  eps0 must sit on the ladder."""
    if not 0.0 < eps <= eps0:
        raise ValueError("need 0 < eps <= eps0")
    p0 = round(-math.log(eps0))
    if abs(-math.log(eps0) - p0) > _LADDER_TOL:
        raise ValueError("eps0 must be e^-p for an integer p")
    p1 = int(math.floor(-math.log(eps) + _LADDER_TOL))
    radii = [math.exp(-p) for p in range(p0, p1 + 1)]
    if abs(radii[-1] - eps) > _LADDER_TOL * eps:
        radii.append(eps)
    return tuple(radii)


# ------------------------------------------------------- grid constructions

@lru_cache(maxsize=32)
def _band_kernel(h: float, eps: float, w: float) -> np.ndarray:
    """Annulus indicator [eps-w, eps+w) as integer offsets from a cell.

    Thresholds are snapped in lattice units so lattice-aligned bands keep
    the closed-bottom / open-top convention exactly (same rule as the
    single-circle ring sums).
    """
    t_lo = _snap(max(eps - w, 0.0) / h)
    t_hi = _snap((eps + w) / h)
    k = int(math.ceil(t_hi)) - 1
    u = np.arange(-k, k + 1, dtype=np.int64)
    d2 = u[:, None] ** 2 + u[None, :] ** 2
    kern = ((d2 >= t_lo * t_lo) & (d2 < t_hi * t_hi)).astype(np.float64)
    kern.setflags(write=False)
    return kern


@lru_cache(maxsize=32)
def _interior_mask(
    domain: DomainSpec, origin_x: float, origin_y: float, h: float,
    nx: int, ny: int, margin: float,
) -> np.ndarray:
    """Cells at strict distance > margin from the boundary."""
    if isinstance(domain, Disc):
        xs = _snap((origin_x - domain.center.x) / h) + np.arange(nx)
        ys = _snap((origin_y - domain.center.y) / h) + np.arange(ny)
        d2 = xs[:, None] ** 2 + ys[None, :] ** 2
        t = _snap((domain.radius - margin) / h)
        mask = d2 < t * t if t > 0 else np.zeros((nx, ny), dtype=bool)
    elif isinstance(domain, Rectangle):
        ax = _snap((origin_x - domain.lower_left.x) / h) + np.arange(nx)
        ay = _snap((origin_y - domain.lower_left.y) / h) + np.arange(ny)
        t = _snap(margin / h)
        wx = _snap(domain.width / h)
        wy = _snap(domain.height / h)
        ok_x = (ax > t) & (ax < wx - t)
        ok_y = (ay > t) & (ay < wy - t)
        mask = ok_x[:, None] & ok_y[None, :]
    else:
        raise TypeError(f"no interior mask for {type(domain).__name__}")
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=32)
def _region_mask(
    region: Region, origin_x: float, origin_y: float, h: float, nx: int, ny: int
) -> np.ndarray:
    """Vectorized Region.contains over the cell grid (closed boundaries),
    with snapped thresholds so lattice-aligned radii behave exactly."""
    if isinstance(region, Annulus):
        xs = _snap((origin_x - region.center.x) / h) + np.arange(nx)
        ys = _snap((origin_y - region.center.y) / h) + np.arange(ny)
        d2 = xs[:, None] ** 2 + ys[None, :] ** 2
        t_in = _snap(region.r_inner / h)
        t_out = _snap(region.r_outer / h)
        mask = (d2 >= t_in * t_in) & (d2 <= t_out * t_out)
    elif isinstance(region, RectRegion):
        ax = _snap((origin_x - region.lower_left.x) / h) + np.arange(nx)
        ay = _snap((origin_y - region.lower_left.y) / h) + np.arange(ny)
        wx = _snap(region.width / h)
        wy = _snap(region.height / h)
        ok_x = (ax >= 0) & (ax <= wx)
        ok_y = (ay >= 0) & (ay <= wy)
        mask = ok_x[:, None] & ok_y[None, :]
    else:
        raise TypeError(f"no cell mask for {type(region).__name__}")
    mask.setflags(write=False)
    return mask


def local_time_grid(field: OccupationField, eps: float, cfg: LatticeConfig) -> np.ndarray:
    """Circle-average local time at every cell center simultaneously.

    Matches `walk.local_time_estimate` at lattice-aligned centers exactly,
    including the zero convention for circles not strictly inside.
    """
    if eps < 2.0 * cfg.h:
        raise SubResolutionError("eps must be at least twice the lattice spacing")
    kern = _band_kernel(cfg.h, eps, cfg.half_width)
    if kern.sum() == 0:
        warnings.warn("annulus contains no lattice sites", RuntimeWarning, stacklevel=2)
        return np.zeros(field.counts.shape, dtype=np.float64)
    band = fftconvolve(field.counts.astype(np.float64), kern, mode="same")
    band = np.maximum(np.rint(band), 0.0)
    lt = (cfg.h * cfg.h / 2.0) * band / (2.0 * cfg.half_width)
    inside = _interior_mask(
        field.domain, field.origin.x, field.origin.y, cfg.h, field.nx, field.ny, eps
    )
    lt[~inside] = 0.0
    return lt


def region_cells(
    field: OccupationField, region: Region | None, cfg: LatticeConfig
) -> np.ndarray:
    """Cells inside the domain raster and inside `region` (all domain cells
    when region is None)."""
    alive = _build_frame(field.domain, cfg.h).alive
    if region is None:
        return alive.copy()
    rm = _region_mask(region, field.origin.x, field.origin.y, cfg.h, field.nx, field.ny)
    return alive & rm


def _validated(gamma: float, eps: float) -> None:
    if not 0.0 < gamma < 2.0:
        raise ValueError("gamma must lie in (0, 2)")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")


def mu_normalization(gamma: float, eps: float) -> float:
    return math.sqrt(abs(math.log(eps))) * eps ** (0.5 * gamma * gamma)


def nu_normalization(gamma: float, eps: float) -> float:
    return abs(math.log(eps)) * eps ** (-0.5 * gamma * gamma)


def build_mu(
    field: OccupationField,
    gamma: float,
    eps: float,
    region: Region | None,
    cfg: LatticeConfig,
    mask: np.ndarray | None = None,
) -> ChaosField:
    """Chaos measure with cell weights
    sqrt|log eps| * eps^(gamma^2/2) * exp(gamma * sqrt(L/eps)) * h^2.

    `mask` optionally restricts the measure to cells where it is true (the
    good-event filtering); filtered weights never exceed unfiltered ones.
    """
    _validated(gamma, eps)
    lt = local_time_grid(field, eps, cfg)
    rmask = region_cells(field, region, cfg)
    if mask is not None:
        rmask = rmask & mask
    norm = mu_normalization(gamma, eps)
    weights = np.zeros(lt.shape, dtype=np.float64)
    cell = cfg.h * cfg.h
    weights[rmask] = norm * np.exp(gamma * np.sqrt(lt[rmask] / eps)) * cell
    return ChaosField(
        gamma=gamma,
        eps=eps,
        h=cfg.h,
        origin=field.origin,
        normalization=norm,
        weights=weights,
        region_mask=rmask,
        mass=float(weights.sum()),
        n_cells=int(rmask.sum()),
    )


def build_nu(
    field: OccupationField,
    gamma: float,
    eps: float,
    region: Region | None,
    b: float,
    cfg: LatticeConfig,
    mask: np.ndarray | None = None,
) -> float:
    """Mass |log eps| * eps^(-gamma^2/2) * h^2 * #{cells with
    sqrt(L/eps) - gamma * log(1/eps) > b} over the region."""
    _validated(gamma, eps)
    lt = local_time_grid(field, eps, cfg)
    rmask = region_cells(field, region, cfg)
    if mask is not None:
        rmask = rmask & mask
    count = _nu_count(lt, rmask, gamma, eps, b)
    return nu_normalization(gamma, eps) * cfg.h * cfg.h * count


def _nu_count(
    lt: np.ndarray, rmask: np.ndarray, gamma: float, eps: float, b: float
) -> int:
    thr = b + gamma * (-math.log(eps))
    vals = np.sqrt(lt[rmask] / eps)
    return int(np.count_nonzero(vals > thr))


def _thick_count(lt: np.ndarray, rmask: np.ndarray, gamma: float, eps: float) -> int:
    thr = gamma * gamma * eps * math.log(eps) ** 2
    return int(np.count_nonzero(lt[rmask] >= thr))


def _measure(
    lt: np.ndarray,
    rmask: np.ndarray,
    gamma: float,
    eps: float,
    cell: float,
    b_values: Sequence[float],
) -> Measurements:
    vals = lt[rmask]
    mu = float(
        mu_normalization(gamma, eps) * cell * np.exp(gamma * np.sqrt(vals / eps)).sum()
    )
    nu_norm = nu_normalization(gamma, eps)
    nus = tuple(
        nu_norm * cell * _nu_count(lt, rmask, gamma, eps, b) for b in b_values
    )
    thick = cell * _thick_count(lt, rmask, gamma, eps)
    return Measurements(mu_mass=mu, nu_masses=nus, thick_area=thick)


def chaos_measurements_many(
    field: OccupationField,
    gamma: float,
    eps: float,
    regions: Sequence[Region | None],
    cfg: LatticeConfig,
    b_values: Sequence[float] = (),
    mask: np.ndarray | None = None,
) -> tuple[Measurements, ...]:
    """Measurements over several regions sharing one local-time convolution."""
    _validated(gamma, eps)
    lt = local_time_grid(field, eps, cfg)
    cell = cfg.h * cfg.h
    out = []
    for region in regions:
        rmask = region_cells(field, region, cfg)
        if mask is not None:
            rmask = rmask & mask
        out.append(_measure(lt, rmask, gamma, eps, cell, b_values))
    return tuple(out)


def chaos_measurements(
    field: OccupationField,
    gamma: float,
    eps: float,
    region: Region | None,
    cfg: LatticeConfig,
    b_values: Sequence[float] = (),
    mask: np.ndarray | None = None,
) -> Measurements:
    """mu mass, nu masses at each b, and thick-point area of one field,
    sharing a single local-time convolution."""
    return chaos_measurements_many(
        field, gamma, eps, (region,), cfg, b_values=b_values, mask=mask
    )[0]


# ----------------------------------------------------- ensemble aggregation

def _as_fields(fields: Iterable[OccupationField] | OccupationField) -> Iterable[OccupationField]:
    if isinstance(fields, OccupationField):
        return (fields,)
    return fields


def profile_from_masses(
    gamma: float,
    b_values: Sequence[float],
    nu_zero: np.ndarray,
    nu_b: np.ndarray,
) -> ProfileResult:
    """Mean of e^(gamma b) * nu(b)/nu(0) over replicas with nu(0) > 0.

    Replica rows with a zero denominator are dropped from the ratio and
    reported in n_dropped.
    """
    nu_zero = np.asarray(nu_zero, dtype=np.float64)
    nu_b = np.atleast_2d(np.asarray(nu_b, dtype=np.float64))
    if nu_b.shape != (nu_zero.size, len(b_values)):
        raise ValueError("nu_b must be (n_replicas, n_b)")
    keep = nu_zero > 0.0
    n_used = int(np.count_nonzero(keep))
    boost = np.exp(gamma * np.asarray(b_values, dtype=np.float64))
    if n_used == 0:
        ratios = np.full(len(b_values), np.nan)
    else:
        per = nu_b[keep] / nu_zero[keep, None]
        ratios = boost * per.mean(axis=0)
    return ProfileResult(
        b_values=tuple(float(b) for b in b_values),
        ratios=ratios,
        n_used=n_used,
        n_dropped=int(nu_zero.size - n_used),
    )


def nu_exponential_profile(
    fields: Iterable[OccupationField] | OccupationField,
    gamma: float,
    eps: float,
    region: Region | None,
    b_values: Sequence[float],
    cfg: LatticeConfig,
) -> ProfileResult:
    """Ensemble-averaged exponential profile e^(gamma b) * nu(b)/nu(0)."""
    _validated(gamma, eps)
    nu_zero: list[float] = []
    nu_b: list[tuple[float, ...]] = []
    probe = (0.0, *b_values)
    for field in _as_fields(fields):
        m = chaos_measurements(field, gamma, eps, region, cfg, b_values=probe)
        nu_zero.append(m.nu_masses[0])
        nu_b.append(m.nu_masses[1:])
    return profile_from_masses(
        gamma, tuple(b_values), np.array(nu_zero), np.array(nu_b)
    )


def consistency_from_masses(
    gamma: float, mu_masses: np.ndarray, nu_masses: np.ndarray
) -> ConsistencyResult:
    """Ratio of ensemble means: (mean mu / (sqrt(2 pi) gamma)) / mean nu.

    A zero denominator is flagged and the ratio reported as inf.
    """
    mu_masses = np.asarray(mu_masses, dtype=np.float64)
    nu_masses = np.asarray(nu_masses, dtype=np.float64)
    if mu_masses.shape != nu_masses.shape:
        raise ValueError("mu and nu arrays must align")
    mu_mean = float(mu_masses.mean())
    nu_mean = float(nu_masses.mean())
    scaled = mu_mean / (math.sqrt(2.0 * math.pi) * gamma)
    if nu_mean == 0.0:
        return ConsistencyResult(math.inf, mu_mean, nu_mean, mu_masses.size, True)
    return ConsistencyResult(scaled / nu_mean, mu_mean, nu_mean, mu_masses.size, False)


def mu_nu_consistency(
    fields: Iterable[OccupationField] | OccupationField,
    gamma: float,
    eps: float,
    region: Region | None,
    cfg: LatticeConfig,
) -> ConsistencyResult:
    """Compares mu/(sqrt(2 pi) gamma) with nu over (0, inf) on an ensemble;
    the two agree in the small-eps limit."""
    _validated(gamma, eps)
    mus: list[float] = []
    nus: list[float] = []
    for field in _as_fields(fields):
        m = chaos_measurements(field, gamma, eps, region, cfg, b_values=(0.0,))
        mus.append(m.mu_mass)
        nus.append(m.nu_masses[0])
    return consistency_from_masses(gamma, np.array(mus), np.array(nus))


# ---------------------------------------------------------- derived masks

def thick_points(
    field: OccupationField, gamma: float, eps: float, cfg: LatticeConfig
) -> ThickPointMask:
    """Cells with L/(eps * (log eps)^2) >= gamma^2 over the whole domain.

    The inequality is closed, so gamma = 0 marks every domain cell.
    """
    if not 0.0 <= gamma <= 2.0:
        raise ValueError("gamma must lie in [0, 2]")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    lt = local_time_grid(field, eps, cfg)
    alive = _build_frame(field.domain, cfg.h).alive
    thr = gamma * gamma * eps * math.log(eps) ** 2
    mask = alive & (lt >= thr)
    return ThickPointMask(
        gamma=gamma,
        eps=eps,
        mask=mask,
        area=float(cfg.h * cfg.h * np.count_nonzero(mask)),
    )


def good_event_mask(
    field: OccupationField,
    params: GoodEventParams,
    eps: float,
    cfg: LatticeConfig,
) -> GoodEventMasks:
    """Regularity masks over the cell grid.

    `g`: (1/r) L_{x,r} <= gamma_tilde^2 * (log r)^2 at every ladder radius
    r in [eps, eps0].  `g_prime`: |sqrt(L/eps) - gamma * log(1/eps)| <=
    m_window * sqrt|log eps| at the base scale.  Both masks also require
    |x - start| > eps0 and distance > eps0 from the boundary.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if eps > params.eps0:
        raise ValueError("eps must not exceed eps0")
    radii = ladder_radii(eps, params.eps0)
    if min(radii) < 2.0 * cfg.h:
        raise SubResolutionError("ladder radii must be at least twice the lattice spacing")

    alive = _build_frame(field.domain, cfg.h).alive
    away_boundary = _interior_mask(
        field.domain, field.origin.x, field.origin.y, cfg.h,
        field.nx, field.ny, params.eps0,
    )
    start = field.domain.start
    xs = _snap((field.origin.x - start.x) / cfg.h) + np.arange(field.nx)
    ys = _snap((field.origin.y - start.y) / cfg.h) + np.arange(field.ny)
    d2 = xs[:, None] ** 2 + ys[None, :] ** 2
    t0 = _snap(params.eps0 / cfg.h)
    away_start = d2 > t0 * t0
    cutoffs = alive & away_boundary & away_start

    g = cutoffs.copy()
    for r in radii:
        lt = local_time_grid(field, r, cfg)
        bound = params.gamma_tilde ** 2 * math.log(r) ** 2
        g &= lt / r <= bound

    lt_eps = local_time_grid(field, eps, cfg)
    center = params.gamma * (-math.log(eps))
    half = params.m_window * math.sqrt(abs(math.log(eps)))
    dev = np.abs(np.sqrt(lt_eps / eps) - center)
    g_prime = cutoffs & (dev <= half)
    return GoodEventMasks(g=g, g_prime=g_prime, radii=radii)


def top_mass_fraction(chaos: ChaosField, fraction: float = 0.01) -> float:
    """Share of the total mass carried by the heaviest `fraction` of cells."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    if chaos.n_cells == 0 or chaos.mass == 0.0:
        raise ValueError("field has no mass to rank")
    w = chaos.weights[chaos.region_mask]
    k = max(1, int(math.ceil(fraction * w.size)))
    top = np.partition(w, w.size - k)[w.size - k:]
    return float(top.sum() / chaos.mass)


# ------------------------------------------------------------------ output

_CSV_HEADER = "gamma,eps,cell_i,cell_j,x,y,weight"

# piecewise-linear dark-to-bright ramp; anchors chosen so log-mass order
# reads off as brightness order
_RAMP_T = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
_RAMP_R = np.array([0.05, 0.25, 0.80, 1.00, 1.00])
_RAMP_G = np.array([0.03, 0.05, 0.20, 0.60, 0.95])
_RAMP_B = np.array([0.20, 0.50, 0.25, 0.05, 0.75])
_COLORMAP_NAME = "ember"


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def render_heatmap(
    chaos: ChaosField,
    path: str | Path,
    overlay: OccupationField | None = None,
) -> Path:
    """Writes the weight grid as a log-scaled PPM (P6) image plus a JSON
    sidecar recording the color scale.

    Pixels are deterministic: row 0 is the top of the picture (largest y)
    and a constant field renders uniformly.  `overlay` tints the visited
    sites of a walk toward white.  An empty region yields a 1x1 sentinel
    image and a warning.
    """
    path = Path(path)
    meta: dict[str, object] = {
        "colormap": _COLORMAP_NAME,
        "gamma": chaos.gamma,
        "eps": chaos.eps,
        "overlay": overlay is not None,
    }
    if chaos.n_cells == 0:
        warnings.warn("empty region, writing sentinel image", RuntimeWarning, stacklevel=2)
        meta.update({"empty": True, "width": 1, "height": 1})
        _write_ppm(path, np.zeros((1, 1, 3), dtype=np.uint8))
        _sidecar_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
        return path

    logw = np.zeros(chaos.weights.shape, dtype=np.float64)
    sel = chaos.region_mask
    logw[sel] = np.log10(chaos.weights[sel])
    lo = float(logw[sel].min())
    hi = float(logw[sel].max())
    v = np.full(chaos.weights.shape, 0.5)
    if hi > lo:
        v = (logw - lo) / (hi - lo)
    rgb = np.stack(
        [np.interp(v, _RAMP_T, ramp) for ramp in (_RAMP_R, _RAMP_G, _RAMP_B)],
        axis=-1,
    )
    rgb[~sel] = 0.0
    if overlay is not None:
        if overlay.counts.shape != chaos.weights.shape:
            raise ValueError("overlay grid does not match the chaos grid")
        if (
            abs(overlay.origin.x - chaos.origin.x) > 1e-12
            or abs(overlay.origin.y - chaos.origin.y) > 1e-12
        ):
            raise ValueError("overlay origin does not match the chaos grid")
        trace = overlay.counts > 0
        rgb[trace] = 0.55 * rgb[trace] + 0.45
    img = np.rint(255.0 * rgb).astype(np.uint8)
    img = img.transpose(1, 0, 2)[::-1]
    _write_ppm(path, img)
    meta.update(
        {
            "empty": False,
            "width": chaos.weights.shape[0],
            "height": chaos.weights.shape[1],
            "log10_min": lo,
            "log10_max": hi,
            "background_rgb": [0, 0, 0],
        }
    )
    _sidecar_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path


def _write_ppm(path: Path, img: np.ndarray) -> None:
    height, width = img.shape[0], img.shape[1]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())


def write_chaos_csv(chaos: ChaosField, path: str | Path) -> Path:
    """One row per region cell: gamma,eps,cell_i,cell_j,x,y,weight."""
    path = Path(path)
    ii, jj = np.nonzero(chaos.region_mask)
    ww = chaos.weights[ii, jj]
    g = f"{chaos.gamma:.17g}"
    e = f"{chaos.eps:.17g}"
    ox, oy, h = chaos.origin.x, chaos.origin.y, chaos.h
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(_CSV_HEADER + "\n")
        for i, j, w in zip(ii.tolist(), jj.tolist(), ww.tolist()):
            fh.write(f"{g},{e},{i},{j},{ox + i * h:.17g},{oy + j * h:.17g},{w:.17g}\n")
    return path


def write_chaos_summary(
    chaos: ChaosField, field: OccupationField, path: str | Path
) -> Path:
    """Masses, parameters, and the seed lineage of the source walk."""
    path = Path(path)
    payload = {
        "gamma": chaos.gamma,
        "eps": chaos.eps,
        "normalization": chaos.normalization,
        "mass": chaos.mass,
        "n_cells": chaos.n_cells,
        "cell_area": chaos.h * chaos.h,
        "domain": domain_to_dict(field.domain),
        "cfg": cfg_to_dict(field.cfg),
        "seed": {
            "master_seed": field.seed.master_seed,
            "replica_index": field.seed.replica_index,
        },
        "step_count": field.step_count,
        "truncated": field.truncated,
    }
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path
