"""Killed lattice random walk engine.

Domains are rasterized onto h * Z^2; the walk steps to nearest neighbors and
dies on the first site outside the open domain. One step corresponds to
Brownian time h^2/2 (matching mean squared displacement). Occupation counts
over the full grid, circle local-time estimates, replica ensembles and a
small binary field format live here; all randomness flows through the
compiled generator in _kernels, seeded statelessly per replica.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import SubResolutionError, UnsupportedDomainError
from .geometry import CircleSpec, Disc, DomainSpec, Point2, Rectangle

OCC_MAGIC = b"OCCF"
OCC_VERSION = 1
# magic, version, reserved padding, nx, ny: 16 bytes
_OCC_HEADER = struct.Struct("<4sHHII")


@dataclass(frozen=True)
class LatticeConfig:
    """Mesh size, safety cap, and the half-width of the local-time annulus.

    ``annulus_half_width`` of None means "one lattice shell", i.e. h.
    """

    h: float
    max_steps: int = 1_000_000_000
    annulus_half_width: float | None = None

    def __post_init__(self) -> None:
        if self.h <= 0:
            raise ValueError("mesh h must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.annulus_half_width is not None and self.annulus_half_width < self.h / 2:
            raise ValueError("annulus half-width must be at least h/2")

    @property
    def half_width(self) -> float:
        return self.h if self.annulus_half_width is None else self.annulus_half_width


@dataclass(frozen=True)
class RunSeed:
    master_seed: int
    replica_index: int

    def __post_init__(self) -> None:
        if self.replica_index < 0:
            raise ValueError("replica_index must be nonnegative")


@dataclass(frozen=True)
class OccupationField:
    """Per-site visit counts of one killed walk, plus its exit bookkeeping.

    The grid covers the domain's rasterization with a one-site margin so the
    exit site is always in-grid; counts include the exit site, hence
    sum(counts) == step_count + 1 (a truncated walk ends on a live site and
    the identity still holds).
    """

    domain: DomainSpec
    cfg: LatticeConfig
    seed: RunSeed
    origin: Point2
    counts: np.ndarray
    exit_site: tuple[int, int]
    step_count: int
    truncated: bool

    @property
    def nx(self) -> int:
        return self.counts.shape[0]

    @property
    def ny(self) -> int:
        return self.counts.shape[1]

    def site_position(self, i: int, j: int) -> Point2:
        return Point2(self.origin.x + i * self.cfg.h, self.origin.y + j * self.cfg.h)

    @property
    def exit_position(self) -> Point2:
        return self.site_position(*self.exit_site)


@dataclass(frozen=True)
class LocalTimeProfile:
    center: Point2
    radii: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.radii) != len(self.values):
            raise ValueError("radii and values must align")
        if any(b >= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly decreasing")
        if any(v < 0 for v in self.values):
            raise ValueError("local times are nonnegative")


@dataclass(frozen=True)
class ExitSample:
    hit: bool
    local_time: float
    exit_site: tuple[int, int]
    exit_position: Point2
    truncated: bool


@dataclass(frozen=True)
class EnsembleResult:
    values: np.ndarray  # per replica, in replica order
    truncated_count: int


def make_radius_ladder(eps0: float, depth: int) -> tuple[float, ...]:
    """Radii eps0 * e^-p for p = 1..depth (the default geometric ladder)."""
    if eps0 <= 0 or depth < 1:
        raise ValueError("need eps0 > 0 and depth >= 1")
    return tuple(eps0 * math.exp(-p) for p in range(1, depth + 1))


# ---------------------------------------------------------------- rasterization

@dataclass(frozen=True)
class _Frame:
    origin: Point2
    alive: np.ndarray  # bool (nx, ny); margin layer is dead by construction


@lru_cache(maxsize=8)
def _build_frame(domain: DomainSpec, h: float) -> _Frame:
    if isinstance(domain, Disc):
        # lattice anchored at the center so the raster is exactly 8-fold
        # symmetric; site membership decided on integer squared radii
        m = int(math.ceil(domain.radius / h)) + 1
        ii = np.arange(-m, m + 1, dtype=np.int64)
        d2 = ii[:, None] ** 2 + ii[None, :] ** 2
        alive = d2 < (domain.radius / h) ** 2
        origin = Point2(domain.center.x - m * h, domain.center.y - m * h)
        return _Frame(origin, alive)
    if isinstance(domain, Rectangle):
        # vertex set of the closed rectangle snapped to the integer grid; a
        # unit square at h=1/400 yields 401 x 401 live vertices
        nx_live = int(round(domain.width / h)) + 1
        ny_live = int(round(domain.height / h)) + 1
        alive = np.zeros((nx_live + 2, ny_live + 2), dtype=bool)
        alive[1:-1, 1:-1] = True
        origin = Point2(domain.lower_left.x - h, domain.lower_left.y - h)
        return _Frame(origin, alive)
    raise UnsupportedDomainError(f"no rasterization for {type(domain).__name__}")


def _snap_start(frame: _Frame, domain: DomainSpec, h: float) -> tuple[int, int]:
    gx = int(round((domain.start.x - frame.origin.x) / h))
    gy = int(round((domain.start.y - frame.origin.y) / h))
    nx, ny = frame.alive.shape
    if not (0 <= gx < nx and 0 <= gy < ny) or not frame.alive[gx, gy]:
        raise ValueError("start site is not interior after snapping to the lattice")
    return gx, gy


# ---------------------------------------------------------------- single walk

def run_killed_walk(domain: DomainSpec, cfg: LatticeConfig, seed: RunSeed) -> OccupationField:
    frame = _build_frame(domain, cfg.h)
    gx, gy = _snap_start(frame, domain, cfg.h)
    counts = np.zeros(frame.alive.shape, dtype=np.uint32)
    state = _kernels.seed_state(
        np.uint64(seed.master_seed % (1 << 64)), np.uint64(seed.replica_index)
    )
    steps, ex, ey, truncated = _kernels.run_walk(
        frame.alive, counts, gx, gy, cfg.max_steps, state
    )
    return OccupationField(
        domain=domain,
        cfg=cfg,
        seed=seed,
        origin=frame.origin,
        counts=counts,
        exit_site=(int(ex), int(ey)),
        step_count=int(steps),
        truncated=bool(truncated),
    )


# ---------------------------------------------------------------- local time

def _circle_strictly_inside(domain: DomainSpec, circle: CircleSpec) -> bool:
    return domain.boundary_distance(circle.center) > circle.radius


def _snap(v: float) -> float:
    """Round to the nearest integer when within float noise of one.

    Band bounds and site offsets are compared in lattice units; when a circle
    is lattice-aligned (eps and w multiples of h, center on a site) whole
    shells of sites sit exactly on a band boundary, and raw float arithmetic
    decides their membership arbitrarily. Snapping makes the closed-bottom /
    open-top convention exact in that case; unaligned circles are unaffected
    because integer squared distances never meet a non-integer threshold.
    """
    r = round(v)
    return float(r) if abs(v - r) <= 1e-9 * max(1.0, abs(v)) else v


@lru_cache(maxsize=64)
def _ring_sites(
    origin_x: float, origin_y: float, h: float, nx: int, ny: int,
    cx: float, cy: float, eps: float, w: float,
) -> tuple[np.ndarray, np.ndarray]:
    xs = _snap((origin_x - cx) / h) + np.arange(nx)
    ys = _snap((origin_y - cy) / h) + np.arange(ny)
    d2 = xs[:, None] ** 2 + ys[None, :] ** 2
    t_lo = _snap(max(eps - w, 0.0) / h)
    t_hi = _snap((eps + w) / h)
    mask = (d2 >= t_lo * t_lo) & (d2 < t_hi * t_hi)
    ix, iy = np.nonzero(mask)
    return ix, iy


@lru_cache(maxsize=64)
def _disc_sites(
    origin_x: float, origin_y: float, h: float, nx: int, ny: int,
    cx: float, cy: float, eps: float,
) -> tuple[np.ndarray, np.ndarray]:
    xs = _snap((origin_x - cx) / h) + np.arange(nx)
    ys = _snap((origin_y - cy) / h) + np.arange(ny)
    d2 = xs[:, None] ** 2 + ys[None, :] ** 2
    t = _snap(eps / h)
    ix, iy = np.nonzero(d2 <= t * t)
    return ix, iy


def local_time_estimate(field: OccupationField, circle: CircleSpec, cfg: LatticeConfig) -> float:
    """Occupation of the annulus [eps-w, eps+w) around the circle, converted
    to Brownian time and divided by the window width 2w.

    Circles not strictly inside the domain score 0 (the continuum convention
    for local times straddling the boundary).
    """
    if not _circle_strictly_inside(field.domain, circle):
        return 0.0
    ix, iy = _ring_sites(
        field.origin.x, field.origin.y, cfg.h, field.nx, field.ny,
        circle.center.x, circle.center.y, circle.radius, cfg.half_width,
    )
    if ix.size == 0:
        warnings.warn("annulus contains no lattice sites", RuntimeWarning, stacklevel=2)
        return 0.0
    total = int(field.counts[ix, iy].sum(dtype=np.int64))
    return (cfg.h * cfg.h / 2.0) * total / (2.0 * cfg.half_width)


def local_time_profile(
    field: OccupationField, center: Point2, radii: Sequence[float], cfg: LatticeConfig
) -> LocalTimeProfile:
    rr = tuple(float(r) for r in radii)
    if any(r < 2.0 * cfg.h for r in rr):
        raise SubResolutionError("profile radii must be at least 2h")
    values = tuple(
        local_time_estimate(field, CircleSpec(center, r), cfg) for r in rr
    )
    return LocalTimeProfile(center, rr, values)


# ---------------------------------------------------------------- ensembles

def run_ensemble(
    domain: DomainSpec,
    cfg: LatticeConfig,
    n_replicas: int,
    master_seed: int,
    reducer: Callable[[OccupationField], float | np.ndarray],
    workers: int = 1,
) -> EnsembleResult:
    """Replica-indexed map over independent walks.

    The output array is ordered by replica index regardless of scheduling, so
    any downstream reduction commutes with the execution order.
    """
    if n_replicas < 1:
        raise ValueError("need at least one replica")
    _build_frame(domain, cfg.h)  # warm the shared raster before threading

    def one(idx: int) -> tuple[float | np.ndarray, bool]:
        field = run_killed_walk(domain, cfg, RunSeed(master_seed, idx))
        return reducer(field), field.truncated

    if workers <= 1:
        results = [one(i) for i in range(n_replicas)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(n_replicas)))
    values = np.asarray([r[0] for r in results], dtype=float)
    return EnsembleResult(values, sum(1 for r in results if r[1]))


def conditional_exit_sample(
    domain: DomainSpec, target: CircleSpec, cfg: LatticeConfig, seed: RunSeed
) -> ExitSample:
    """One killed walk, reported against a target circle: whether the walk
    reached the closed target disc, the local time it accumulated on the
    target circle, and where it left the domain."""
    if not _circle_strictly_inside(domain, target):
        raise ValueError("target circle must be strictly inside the domain")
    field = run_killed_walk(domain, cfg, seed)
    ix, iy = _disc_sites(
        field.origin.x, field.origin.y, cfg.h, field.nx, field.ny,
        target.center.x, target.center.y, target.radius,
    )
    hit = bool(field.counts[ix, iy].any())
    return ExitSample(
        hit=hit,
        local_time=local_time_estimate(field, target, cfg),
        exit_site=field.exit_site,
        exit_position=field.exit_position,
        truncated=field.truncated,
    )


# ---------------------------------------------------------------- serialization

def domain_to_dict(domain: DomainSpec) -> dict:
    if isinstance(domain, Disc):
        return {
            "kind": "disc",
            "center": [domain.center.x, domain.center.y],
            "radius": domain.radius,
            "start": [domain.start.x, domain.start.y],
        }
    if isinstance(domain, Rectangle):
        return {
            "kind": "rectangle",
            "lower_left": [domain.lower_left.x, domain.lower_left.y],
            "width": domain.width,
            "height": domain.height,
            "start": [domain.start.x, domain.start.y],
        }
    raise UnsupportedDomainError(f"cannot serialize {type(domain).__name__}")


def domain_from_dict(data: dict) -> DomainSpec:
    kind = data.get("kind")
    if kind == "disc":
        return Disc(
            center=Point2(*data["center"]),
            radius=float(data["radius"]),
            start=Point2(*data["start"]),
        )
    if kind == "rectangle":
        return Rectangle(
            lower_left=Point2(*data["lower_left"]),
            width=float(data["width"]),
            height=float(data["height"]),
            start=Point2(*data["start"]),
        )
    raise UnsupportedDomainError(f"unknown domain kind {kind!r}")


def cfg_to_dict(cfg: LatticeConfig) -> dict:
    return {
        "h": cfg.h,
        "max_steps": cfg.max_steps,
        "annulus_half_width": cfg.annulus_half_width,
    }


def cfg_from_dict(data: dict) -> LatticeConfig:
    return LatticeConfig(
        h=float(data["h"]),
        max_steps=int(data.get("max_steps", 1_000_000_000)),
        annulus_half_width=(
            None if data.get("annulus_half_width") is None
            else float(data["annulus_half_width"])
        ),
    )


def write_occupation_field(field: OccupationField, path: str | Path) -> None:
    """Binary counts grid plus a JSON sidecar at <path>.json."""
    path = Path(path)
    header = _OCC_HEADER.pack(OCC_MAGIC, OCC_VERSION, 0, field.nx, field.ny)
    path.write_bytes(header + field.counts.astype("<u4").tobytes(order="C"))
    sidecar = {
        "domain": domain_to_dict(field.domain),
        "cfg": cfg_to_dict(field.cfg),
        "seed": {
            "master_seed": field.seed.master_seed,
            "replica_index": field.seed.replica_index,
        },
        "origin": [field.origin.x, field.origin.y],
        "exit_site": list(field.exit_site),
        "step_count": field.step_count,
        "truncated": field.truncated,
    }
    Path(str(path) + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_occupation_field(path: str | Path) -> OccupationField:
    path = Path(path)
    blob = path.read_bytes()
    magic, version, _, nx, ny = _OCC_HEADER.unpack_from(blob, 0)
    if magic != OCC_MAGIC:
        raise ValueError("not an occupation field file")
    if version != OCC_VERSION:
        raise ValueError(f"unsupported field format version {version}")
    counts = np.frombuffer(
        blob, dtype="<u4", count=nx * ny, offset=_OCC_HEADER.size
    ).reshape(nx, ny).astype(np.uint32)
    sidecar = json.loads(Path(str(path) + ".json").read_text(encoding="utf-8"))
    return OccupationField(
        domain=domain_from_dict(sidecar["domain"]),
        cfg=cfg_from_dict(sidecar["cfg"]),
        seed=RunSeed(
            sidecar["seed"]["master_seed"], sidecar["seed"]["replica_index"]
        ),
        origin=Point2(*sidecar["origin"]),
        counts=counts,
        exit_site=tuple(sidecar["exit_site"]),
        step_count=int(sidecar["step_count"]),
        truncated=bool(sidecar["truncated"]),
    )
