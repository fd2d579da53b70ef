"""Desk-scale acceptance checks spanning every module.

Each criterion is one callable taking the shared AcceptanceConfig and
returning a CheckReport. Two reporting shapes are used:

* single-quantity checks record the measured value, the target, and an
  absolute tolerance directly;
* multi-part checks record load factors: observed[i] is the measured
  quantity divided by its threshold (or the normalized distance from the
  center of an admissible window), expected is all zeros and the tolerance
  is 1.0. Raw values live in extra.

Either way the verdict is recomputable offline from the stored numbers,
which is the report contract. Every statistical n and threshold lives in
AcceptanceConfig; the check bodies contain no tuning constants.

Seeds are derived from (master seed, check id), so running any subset of
checks, in any order, reproduces the numbers of the full suite. Artifact
paths are recorded as bare file names to keep reports byte-identical across
output directories.

Two checks compare finite-resolution measurements against small-scale
limits that are far from converged at any affordable resolution; they carry
their analysis in extra and are expected to stay red at the shipped
configuration. See the chaos-mass and wrapped-density checks below.
"""

from __future__ import annotations

import hashlib
import math
import tempfile
from dataclasses import dataclass, replace
from functools import lru_cache, partial
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate, stats

from .bessel import (
    bessel_i1,
    besq_increment_moments,
    besq_variance,
    l1_limit_check,
    l1_limit_constant,
    ray_knight_check,
    sample_besq0,
    survival_prob,
    transition_density,
    wrapped_normal_density,
    wrapped_normal_max_deviation,
)
from .chaos import (
    build_mu,
    chaos_measurements,
    chaos_measurements_many,
    consistency_from_masses,
    local_time_grid,
    nu_normalization,
    profile_from_masses,
    render_heatmap,
    thick_points,
    top_mass_fraction,
    write_chaos_csv,
)
from .geometry import (
    Annulus,
    CircleSpec,
    Disc,
    Point2,
    Rectangle,
    conformal_radius,
    expected_local_time_ring,
    first_moment_integral,
    green_disc,
    hit_prob_concentric,
)
from .verify import (
    CheckReport,
    canonical_fingerprint,
    derived_rng,
    evaluate_status,
    independence_check,
    ks_exponential,
    make_report,
    run_acceptance_suite,
    write_suite_json,
    write_suite_markdown,
)
from .walk import (
    LatticeConfig,
    RunSeed,
    conditional_exit_sample,
    local_time_estimate,
    run_ensemble,
    run_killed_walk,
)

_CENTER = Point2(0.0, 0.0)

# Limit constant of the mean chaos mass over the 0.2 < |x| < 0.8 annulus of
# the unit disc at gamma = 0.5, frozen from first_moment_integral; the check
# recomputes it and records the drift.
FIRST_MOMENT_CONSTANT = 1.4326493479691138

# Envelope constant |f_t - 1/(2 pi)| <= C1 max(1, 1/sqrt t) e^{-t/2},
# calibrated so the bound is tight at t = 0.1 and frozen. The calibration
# point is NOT where the envelope ratio peaks (that is t = 1, ratio
# 0.39514), so the bound check fails by construction; see ac10 below.
WRAPPED_ENVELOPE_C1 = 0.36648684251953978

# Quoted tail constant I1(1), frozen at six-figure print precision.
I1_AT_ONE = 0.565159

# Sup of the increment-moment ratio over the check grid, measured once at
# n = 4e5 per cell and frozen with headroom (grid sup ~ 4.0 at the smallest
# s and r, where the absorption atom dominates the deviation).
MOMENT_RATIO_BOUND = 4.5

# Declared wall-clock budgets per criterion, seconds. Stored in each
# report's extra for offline comparison against runtime_s; the runner does
# not kill overruns (checks are cooperative, single-threaded work).
BUDGET_S = {
    "ac01-ring-mean": 300.0,
    "ac02-hit-frequency": 300.0,
    "ac03-conditional-law": 600.0,
    "ac04-chaos-mass-mean": 1800.0,
    "ac05-sampler-exactness": 120.0,
    "ac06-tail-ratio": 60.0,
    "ac07-ray-knight": 1800.0,
    "ac08-profile-consistency": 2700.0,
    "ac09-figure-heatmaps": 120.0,
    "ac10-wrapped-density": 1.0,
    "ac11-moment-bound": 120.0,
    "ac12-determinism": 600.0,
}


@dataclass(frozen=True)
class AcceptanceConfig:
    """Every n, mesh, and threshold of the acceptance suite in one place."""

    master_seed: int = 20260823
    workers: int = 1
    out_dir: str | None = None  # artifact root; None means a fresh temp dir

    # ring mean
    ring_n: int = 10_000
    ring_h: float = 1.0 / 200.0
    ring_eps: float = 0.1
    ring_tol_rel: float = 0.05

    # concentric hitting + conditional law (shared ensemble)
    hit_n: int = 10_000
    hit_h: float = 1.0 / 200.0
    hit_start: float = 0.5
    hit_eps: float = 0.1
    hit_sigma: float = 3.0
    ks_threshold: float = 0.05
    indep_sigma: float = 3.0

    # chaos mass mean
    fm_gamma: float = 0.5
    fm_eps: float = math.exp(-4.0)
    fm_h: float = 1.0 / 400.0
    fm_n: int = 10_000
    fm_fine_n: int = 2_000
    fm_tol_rel: float = 0.15
    fm_r_in: float = 0.2
    fm_r_out: float = 0.8

    # sampler exactness
    chi2_n: int = 1_000_000
    chi2_r: float = 1.2
    chi2_s: float = 0.5
    chi2_bins: int = 24
    chi2_p_floor: float = 1e-3
    mass_tol: float = 1e-8
    mass_r_grid: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    mass_s_grid: tuple[float, ...] = (0.1, 0.3, 1.0, 3.0, 10.0)
    martingale_sigma: float = 3.0

    # tail ratio
    tail_ts: tuple[float, ...] = (10.0, 20.0, 40.0)
    tail_tol: float = 0.05
    shift_bs: tuple[float, ...] = (0.5, 1.0)
    shift_tol: float = 1e-6
    i1_tol: float = 1e-6

    # conditional-law transport across one e-fold of radii; the walk must
    # start outside the eta' disc for the conditional law to be the pure
    # inward transport (a start inside keeps recharging the inner rings)
    rk_n: int = 10_000
    rk_h: float = 1.0 / 400.0
    rk_eta_prime: float = math.exp(-2.0)
    rk_start: float = 0.2
    rk_ks: float = 0.05
    rk_sigma: float = 3.0
    rk_bins: int = 5
    rk_min_per_bin: int = 1000
    rk_synth_per_pair: int = 4

    # profile + consistency + thick area
    pr_gamma: float = 0.8
    pr_eps_ladder: tuple[float, ...] = (math.exp(-3.0), math.exp(-4.0), math.exp(-5.0))
    pr_main_eps: float = math.exp(-4.0)
    pr_b: float = 0.5
    pr_h: float = 1.0 / 400.0
    pr_n: int = 10_000
    pr_core: tuple[float, float] = (0.05, 0.5)
    pr_window: tuple[float, float] = (0.8, 1.25)
    cons_window: tuple[float, float] = (0.7, 1.4)
    thick_window: tuple[float, float] = (0.5, 2.0)

    # figure heatmaps
    fig_h: float = 1.0 / 400.0
    fig_eps: float = math.exp(-4.0)
    fig_gammas: tuple[float, ...] = (0.3, 0.8, 1.3, 1.8)
    fig_top_fraction: float = 0.01

    # wrapped density
    wd_t_lo: float = 0.1
    wd_t_hi: float = 10.0
    wd_t_points: int = 61  # odd count puts t = 1 exactly on the grid
    wd_angles: int = 64
    wd_series_tol: float = 1e-10
    wd_calib_t: float = 0.1

    # increment moment bound
    mb_ps: tuple[int, ...] = (1, 2)
    mb_ss: tuple[float, ...] = (0.04, 0.16, 0.64)
    mb_rs: tuple[float, ...] = (0.1, 1.0, 5.0)
    mb_n: int = 100_000
    mb_var_r: float = 1.0
    mb_var_s: float = 0.16
    mb_sigma: float = 3.0


def derived_seed(master_seed: int, tag: str) -> int:
    """64-bit seed for a named sub-run, independent across tags."""
    digest = hashlib.sha256(f"{master_seed}:{tag}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _window_load(x: float, lo: float, hi: float) -> float:
    """Distance of x from the window center in half-width units; <= 1 inside."""
    return abs(x - 0.5 * (lo + hi)) / (0.5 * (hi - lo))


# ------------------------------------------------------------ walk checks

def ac01_ring_mean(cfg: AcceptanceConfig) -> CheckReport:
    lat = LatticeConfig(h=cfg.ring_h)
    domain = Disc(_CENTER, 1.0, Point2(cfg.ring_eps, 0.0))
    circle = CircleSpec(_CENTER, cfg.ring_eps)
    target = expected_local_time_ring(cfg.ring_eps, 1.0)
    ens = run_ensemble(
        domain,
        lat,
        cfg.ring_n,
        derived_seed(cfg.master_seed, "ac01"),
        lambda f: local_time_estimate(f, circle, lat),
        workers=cfg.workers,
    )
    mean = float(ens.values.mean())
    stderr = float(ens.values.std(ddof=1) / math.sqrt(cfg.ring_n))
    return make_report(
        "ac01-ring-mean",
        "ensemble mean ring local time within 5% of 2 eps log(r/eps)",
        observed=mean,
        expected=target,
        tolerance=cfg.ring_tol_rel * target,
        extra={
            "n": cfg.ring_n,
            "stderr": stderr,
            "rel_err": mean / target - 1.0,
            "truncated": ens.truncated_count,
            "budget_s": BUDGET_S["ac01-ring-mean"],
        },
    )


@lru_cache(maxsize=4)
def _exit_ensemble(
    master_seed: int, n: int, h: float, start: float, eps: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shared walk ensemble for the hitting and conditional-law checks:
    per-replica (hit flag, target local time, exit angle)."""
    lat = LatticeConfig(h=h)
    domain = Disc(_CENTER, 1.0, Point2(start, 0.0))
    target = CircleSpec(_CENTER, eps)
    seed = derived_seed(master_seed, "ac02-ac03")
    hits = np.empty(n, dtype=bool)
    lts = np.empty(n, dtype=np.float64)
    angles = np.empty(n, dtype=np.float64)
    for i in range(n):
        s = conditional_exit_sample(domain, target, lat, RunSeed(seed, i))
        hits[i] = s.hit
        lts[i] = s.local_time
        angles[i] = math.atan2(s.exit_position.y, s.exit_position.x)
    return hits, lts, angles


def ac02_hit_frequency(cfg: AcceptanceConfig) -> CheckReport:
    hits, _, _ = _exit_ensemble(
        cfg.master_seed, cfg.hit_n, cfg.hit_h, cfg.hit_start, cfg.hit_eps
    )
    p0 = hit_prob_concentric(cfg.hit_start, cfg.hit_eps, 1.0)
    p_hat = float(hits.mean())
    sigma = math.sqrt(p0 * (1.0 - p0) / cfg.hit_n)
    return make_report(
        "ac02-hit-frequency",
        "concentric hit frequency within 3 sigma of log(rho/d)/log(rho/eps)",
        observed=p_hat,
        expected=p0,
        tolerance=cfg.hit_sigma * sigma,
        extra={
            "n": cfg.hit_n,
            "sigma": sigma,
            "n_hits": int(hits.sum()),
            "shared_ensemble": "ac02-ac03",
            "budget_s": BUDGET_S["ac02-hit-frequency"],
        },
    )


def ac03_conditional_law(cfg: AcceptanceConfig) -> CheckReport:
    hits, lts, angles = _exit_ensemble(
        cfg.master_seed, cfg.hit_n, cfg.hit_h, cfg.hit_start, cfg.hit_eps
    )
    mean0 = expected_local_time_ring(cfg.hit_eps, 1.0)
    cond = lts[hits]
    ks = ks_exponential(cond, mean0)
    ind = independence_check(angles[hits], cond)
    loads = [ks.distance / cfg.ks_threshold, ind.max_z / cfg.indep_sigma]
    return make_report(
        "ac03-conditional-law",
        "hit-conditioned local times exponential; independent of exit angle",
        observed=loads,
        expected=[0.0, 0.0],
        tolerance=1.0,
        extra={
            "n_conditioned": int(cond.size),
            "ks_distance": ks.distance,
            "ks_p_value": ks.p_value,
            "max_bin_z": ind.max_z,
            "exponential_mean": mean0,
            "shared_ensemble": "ac02-ac03",
            "budget_s": BUDGET_S["ac03-conditional-law"],
        },
    )


# ----------------------------------------------------------- chaos checks

def _finite_scale_chaos_mean(gamma: float, eps: float, r_lo: float, r_hi: float) -> float:
    """Mean chaos mass of a center-start unit-disc annulus at finite eps.

    Built from the exact ingredients at this scale: the ring is hit with
    probability log(1/|x|)/(t + log R(x)), and the conditioned local time is
    exponential with mean m = 2(t + log R(x)), which integrates the weight
    exp(gamma sqrt(L/eps)) in closed form. Unhit points contribute weight 1
    (the baseline term the small-eps limit drops)."""
    t = -math.log(eps)

    def integrand(r: float) -> float:
        big_r = 1.0 - r * r
        m = 2.0 * (t + math.log(big_r))
        a = gamma * math.sqrt(m) / 2.0
        psi = (
            math.exp(gamma * gamma * m / 4.0)
            * gamma
            * math.sqrt(math.pi * m)
            * (1.0 + math.erf(a))
            / 2.0
        )
        p_hit = math.log(1.0 / r) / (t + math.log(big_r))
        return r * (1.0 + p_hit * psi)

    val, _ = integrate.quad(integrand, r_lo, r_hi)
    return math.sqrt(t) * eps ** (gamma * gamma / 2.0) * 2.0 * math.pi * val


def ac04_chaos_mass_mean(cfg: AcceptanceConfig) -> CheckReport:
    gamma, eps = cfg.fm_gamma, cfg.fm_eps
    region = Annulus(_CENTER, cfg.fm_r_in, cfg.fm_r_out)
    domain = Disc(_CENTER, 1.0, _CENTER)
    limit = FIRST_MOMENT_CONSTANT
    quad = first_moment_integral(domain, gamma, region)

    def reducer(lat: LatticeConfig):
        return lambda f: chaos_measurements(f, gamma, eps, region, lat).mu_mass

    lat = LatticeConfig(h=cfg.fm_h)
    ens = run_ensemble(
        domain, lat, cfg.fm_n, derived_seed(cfg.master_seed, "ac04-main"),
        reducer(lat), workers=cfg.workers,
    )
    lat_fine = LatticeConfig(h=cfg.fm_h / 2.0)
    ens_fine = run_ensemble(
        domain, lat_fine, cfg.fm_fine_n, derived_seed(cfg.master_seed, "ac04-fine"),
        reducer(lat_fine), workers=cfg.workers,
    )
    mean = float(ens.values.mean())
    mean_fine = float(ens_fine.values.mean())
    loads = [
        abs(mean - limit) / (cfg.fm_tol_rel * limit),
        abs(mean_fine - limit) / abs(mean - limit),
    ]
    # The limit constant drops a baseline sqrt(t) e^{-gamma^2 t/2} Leb(A)
    # carried by never-hit points; the criterion is in regime only when that
    # floor fits inside the tolerance band. At eps = e^-4 it is 1.6x the
    # target itself (needs eps ~ e^-31), so this check reports the regime
    # honestly instead of a spurious implementation verdict.
    t = -math.log(eps)
    leb = math.pi * (cfg.fm_r_out ** 2 - cfg.fm_r_in ** 2)
    baseline = math.sqrt(t) * eps ** (gamma * gamma / 2.0) * leb
    prediction = _finite_scale_chaos_mean(gamma, eps, cfg.fm_r_in, cfg.fm_r_out)
    return make_report(
        "ac04-chaos-mass-mean",
        "ensemble mean chaos mass within 15% of the limit constant; finer mesh moves toward it",
        observed=loads,
        expected=[0.0, 0.0],
        tolerance=1.0,
        in_regime=baseline <= cfg.fm_tol_rel * limit,
        extra={
            "mean": mean,
            "stderr": float(ens.values.std(ddof=1) / math.sqrt(cfg.fm_n)),
            "mean_fine_mesh": mean_fine,
            "stderr_fine_mesh": float(
                ens_fine.values.std(ddof=1) / math.sqrt(cfg.fm_fine_n)
            ),
            "limit_constant": limit,
            "limit_recomputed": quad.value,
            "finite_scale_prediction": prediction,
            "mean_over_prediction": mean / prediction,
            "baseline_mass": baseline,
            "n": cfg.fm_n,
            "n_fine_mesh": cfg.fm_fine_n,
            "budget_s": BUDGET_S["ac04-chaos-mass-mean"],
        },
    )


def ac07_ray_knight(cfg: AcceptanceConfig) -> CheckReport:
    lat = LatticeConfig(h=cfg.rk_h)
    domain = Disc(_CENTER, 1.0, Point2(cfg.rk_start, 0.0))
    outer = CircleSpec(_CENTER, cfg.rk_eta_prime)
    inner = CircleSpec(_CENTER, cfg.rk_eta_prime / math.e)

    def reducer(f):
        return np.array(
            [local_time_estimate(f, outer, lat), local_time_estimate(f, inner, lat)]
        )

    ens = run_ensemble(
        domain, lat, cfg.rk_n, derived_seed(cfg.master_seed, "ac07"),
        reducer, workers=cfg.workers,
    )
    rng = derived_rng(cfg.master_seed, "ac07-draws")
    res = ray_knight_check(
        ens.values[:, 0],
        ens.values[:, 1],
        cfg.rk_eta_prime,
        rng,
        n_bins=cfg.rk_bins,
        min_per_bin=cfg.rk_min_per_bin,
        synth_per_pair=cfg.rk_synth_per_pair,
    )
    max_z = max((abs(b.mean_z) for b in res.bins), default=0.0)
    loads = [
        res.max_ks / cfg.rk_ks,
        max_z / cfg.rk_sigma,
        0.0 if res.zero_consistent else 2.0,
    ]
    return make_report(
        "ac07-ray-knight",
        "one-e-fold conditional law matches exact squared-process draws per bin",
        observed=loads,
        expected=[0.0, 0.0, 0.0],
        tolerance=1.0,
        extra={
            "max_ks": res.max_ks,
            "max_bin_z": max_z,
            "bins": [
                {
                    "n": b.n,
                    "start_mean": b.start_mean,
                    "ks": b.ks_distance,
                    "ks_p": b.ks_p_value,
                    "mean_z": b.mean_z,
                }
                for b in res.bins
            ],
            "merged_bins": res.merged_bins,
            "zero_pairs": res.zero_pairs,
            "zero_consistent": res.zero_consistent,
            "n": cfg.rk_n,
            "budget_s": BUDGET_S["ac07-ray-knight"],
        },
    )


def ac08_profile_consistency(cfg: AcceptanceConfig) -> CheckReport:
    gamma = cfg.pr_gamma
    lat = LatticeConfig(h=cfg.pr_h)
    domain = Disc(_CENTER, 1.0, _CENTER)
    core = Annulus(_CENTER, *cfg.pr_core)
    ladder = cfg.pr_eps_ladder
    main_idx = next(
        i for i, e in enumerate(ladder) if abs(e - cfg.pr_main_eps) <= 1e-12 * e
    )

    def reducer(f):
        out: list[float] = []
        for i, eps in enumerate(ladder):
            if i == main_idx:
                m_core, m_full = chaos_measurements_many(
                    f, gamma, eps, (core, None), lat, b_values=(0.0, cfg.pr_b)
                )
                out += [
                    m_core.nu_masses[0],
                    m_core.nu_masses[1],
                    m_core.mu_mass,
                    m_full.mu_mass,
                    m_full.thick_area,
                ]
            else:
                (m_core,) = chaos_measurements_many(
                    f, gamma, eps, (core,), lat, b_values=(0.0, cfg.pr_b)
                )
                out += [m_core.nu_masses[0], m_core.nu_masses[1]]
        return np.array(out)

    ens = run_ensemble(
        domain, lat, cfg.pr_n, derived_seed(cfg.master_seed, "ac08"),
        reducer, workers=cfg.workers,
    )
    vals = ens.values
    col = 0
    ratios: list[float] = []
    used: list[int] = []
    mu_core = mu_full = thick = nu0_main = None
    for i in range(len(ladder)):
        prof = profile_from_masses(
            gamma, (cfg.pr_b,), vals[:, col], vals[:, col + 1 : col + 2]
        )
        ratios.append(float(prof.ratios[0]))
        used.append(prof.n_used)
        if i == main_idx:
            nu0_main = vals[:, col]
            mu_core = vals[:, col + 2]
            mu_full = vals[:, col + 3]
            thick = vals[:, col + 4]
            col += 5
        else:
            col += 2
    resid = [abs(r - 1.0) for r in ratios]
    trend = max(
        resid[i + 1] / resid[i] if resid[i] > 0 else math.inf
        for i in range(len(resid) - 1)
    )
    cons = consistency_from_masses(gamma, mu_core, nu0_main)
    rescaled_thick = nu_normalization(gamma, ladder[main_idx]) * thick
    thick_ratio = float(
        mu_full.mean() / (math.sqrt(2.0 * math.pi) * gamma) / rescaled_thick.mean()
    )
    loads = [
        _window_load(ratios[main_idx], *cfg.pr_window),
        trend,
        _window_load(cons.ratio, *cfg.cons_window),
        _window_load(thick_ratio, *cfg.thick_window),
    ]
    return make_report(
        "ac08-profile-consistency",
        "exponential profile in window and tightening with eps; measure consistency; thick-area ratio",
        observed=loads,
        expected=[0.0, 0.0, 0.0, 0.0],
        tolerance=1.0,
        extra={
            "profile_ratios": ratios,
            "profile_n_used": used,
            "consistency_ratio": cons.ratio,
            "consistency_flagged": cons.flagged,
            "thick_ratio": thick_ratio,
            "eps_ladder": list(ladder),
            "core_annulus": list(cfg.pr_core),
            "n": cfg.pr_n,
            "truncated": ens.truncated_count,
            "budget_s": BUDGET_S["ac08-profile-consistency"],
        },
    )


def ac09_figure_heatmaps(cfg: AcceptanceConfig) -> CheckReport:
    lat = LatticeConfig(h=cfg.fig_h)
    domain = Rectangle(Point2(0.0, 0.0), 1.0, 1.0, Point2(0.5, 0.5))
    out = Path(cfg.out_dir) if cfg.out_dir else Path(tempfile.mkdtemp(prefix="walkchaos-fig-"))
    out.mkdir(parents=True, exist_ok=True)
    fld = run_killed_walk(domain, lat, RunSeed(derived_seed(cfg.master_seed, "ac09"), 0))
    fracs: list[float] = []
    names: list[str] = []
    for g in cfg.fig_gammas:
        chaos = build_mu(fld, g, cfg.fig_eps, None, lat)
        name = f"heatmap-gamma-{g:g}.ppm"
        render_heatmap(chaos, out / name)
        write_chaos_csv(chaos, out / f"weights-gamma-{g:g}.csv")
        fracs.append(top_mass_fraction(chaos, cfg.fig_top_fraction))
        names.append(name)
    # byte-level determinism: a second render of the first field must match
    chaos0 = build_mu(fld, cfg.fig_gammas[0], cfg.fig_eps, None, lat)
    render_heatmap(chaos0, out / "heatmap-repeat.ppm")
    same = (out / names[0]).read_bytes() == (out / "heatmap-repeat.ppm").read_bytes()
    mono = max(fracs[i] / fracs[i + 1] for i in range(len(fracs) - 1))
    loads = [mono, 0.0 if same else 2.0]
    return make_report(
        "ac09-figure-heatmaps",
        "four heatmaps from one walk are deterministic; top-1% mass strictly increases in gamma",
        observed=loads,
        expected=[0.0, 0.0],
        tolerance=1.0,
        extra={
            "top_mass_fractions": fracs,
            "gammas": list(cfg.fig_gammas),
            "files": names,
            "grid": [fld.nx, fld.ny],
            "step_count": fld.step_count,
            "budget_s": BUDGET_S["ac09-figure-heatmaps"],
        },
    )


# ---------------------------------------------------------- bessel checks

def _chi2_against_density(cfg: AcceptanceConfig, rng: np.random.Generator) -> dict:
    """Chi-square of exact draws against the radial transition density plus
    the absorption atom, with equal-mass continuous bins from cumulative
    quadrature."""
    r, s, n = cfg.chi2_r, cfg.chi2_s, cfg.chi2_n
    x0 = r * r
    draws = sample_besq0(x0, s, rng, size=n)
    atom_p = 1.0 - survival_prob(r, s)
    y_max = r + 9.0 * math.sqrt(s)
    grid = np.linspace(1e-9, y_max, 20_001)
    dens = np.array([transition_density(r, s, y) for y in grid])
    cum = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    total = cum[-1]
    targets = np.linspace(0.0, total, cfg.chi2_bins + 1)[1:-1]
    edges = np.concatenate(([0.0], np.interp(targets, cum, grid), [np.inf]))
    radial = np.sqrt(draws[draws > 0.0])
    counts = np.histogram(radial, bins=edges)[0]
    probs = np.diff(np.interp(edges, grid, cum, right=total)) / total
    probs = probs * (1.0 - atom_p)
    obs = np.concatenate(([np.count_nonzero(draws == 0.0)], counts)).astype(float)
    exp = np.concatenate(([atom_p], probs)) * n
    chi2 = float(((obs - exp) ** 2 / exp).sum())
    p = float(stats.chi2.sf(chi2, df=obs.size - 1))
    return {"chi2": chi2, "p": p, "n_bins": int(obs.size), "draws": draws}


def ac05_sampler_exactness(cfg: AcceptanceConfig) -> CheckReport:
    rng = derived_rng(cfg.master_seed, "ac05")
    fit = _chi2_against_density(cfg, rng)
    draws = fit.pop("draws")
    # density mass identity on the (r, s) grid
    max_gap = 0.0
    for r in cfg.mass_r_grid:
        for s in cfg.mass_s_grid:
            val, _ = integrate.quad(
                lambda y: transition_density(r, s, y),
                0.0,
                r + 12.0 * math.sqrt(s),
                points=[r],
                limit=200,
            )
            max_gap = max(max_gap, abs(val - survival_prob(r, s)))
    x0 = cfg.chi2_r ** 2
    sigma_mean = math.sqrt(besq_variance(cfg.chi2_r, cfg.chi2_s) / cfg.chi2_n)
    mart_gap = abs(float(draws.mean()) - x0)
    loads = [
        min(cfg.chi2_p_floor / max(fit["p"], 1e-300), 1e6),
        max_gap / cfg.mass_tol,
        mart_gap / (cfg.martingale_sigma * sigma_mean),
    ]
    return make_report(
        "ac05-sampler-exactness",
        "exact draws match the transition density, its mass identity, and the mean",
        observed=loads,
        expected=[0.0, 0.0, 0.0],
        tolerance=1.0,
        extra={
            **fit,
            "max_mass_gap": max_gap,
            "martingale_gap": mart_gap,
            "martingale_sigma_mean": sigma_mean,
            "n": cfg.chi2_n,
            "budget_s": BUDGET_S["ac05-sampler-exactness"],
        },
    )


def ac06_tail_ratio(cfg: AcceptanceConfig) -> CheckReport:
    ratios = l1_limit_check(1.0, 1.0, 0.0, cfg.tail_ts)
    resid = [abs(r - 1.0) for r in ratios]
    shift_gap = max(
        abs(l1_limit_constant(1.0, 1.0, b) * math.exp(b) - l1_limit_constant(1.0, 1.0, 0.0))
        for b in cfg.shift_bs
    )
    i1_gap = abs(bessel_i1(1.0) - I1_AT_ONE)
    loads = [
        resid[-1] / cfg.tail_tol,
        resid[-1] / resid[-2],
        shift_gap / cfg.shift_tol,
        i1_gap / cfg.i1_tol,
    ]
    return make_report(
        "ac06-tail-ratio",
        "normalized tail ratio near 1 and improving in t; shift identity; I1(1) value",
        observed=loads,
        expected=[0.0, 0.0, 0.0, 0.0],
        tolerance=1.0,
        extra={
            "ratios": ratios,
            "ts": list(cfg.tail_ts),
            "shift_gap": shift_gap,
            "i1_at_one": bessel_i1(1.0),
            "budget_s": BUDGET_S["ac06-tail-ratio"],
        },
    )


def ac10_wrapped_density(cfg: AcceptanceConfig) -> CheckReport:
    ts = np.geomspace(cfg.wd_t_lo, cfg.wd_t_hi, cfg.wd_t_points)
    thetas = np.linspace(0.0, 2.0 * math.pi, cfg.wd_angles, endpoint=False)
    max_gap = 0.0
    for t in ts:
        for th in thetas:
            w = wrapped_normal_density(float(th), 0.0, float(t))
            max_gap = max(max_gap, abs(w.gaussian_series - w.cosine_series))

    def envelope(t: float) -> float:
        return max(1.0, 1.0 / math.sqrt(t)) * math.exp(-t / 2.0)

    c1 = wrapped_normal_max_deviation(cfg.wd_calib_t) / envelope(cfg.wd_calib_t)
    sup_ratio = max(wrapped_normal_max_deviation(float(t)) / envelope(float(t)) for t in ts)
    loads = [max_gap / cfg.wd_series_tol, sup_ratio / c1]
    return make_report(
        "ac10-wrapped-density",
        "two series representations agree; deviation from uniform under the frozen envelope",
        observed=loads,
        expected=[0.0, 0.0],
        tolerance=1.0,
        extra={
            "max_series_gap": max_gap,
            "c1_calibrated": c1,
            "c1_frozen": WRAPPED_ENVELOPE_C1,
            "sup_envelope_ratio": sup_ratio,
            # The envelope ratio peaks at t = 1, not at the calibration
            # point, so any constant frozen at t = 0.1 is exceeded there;
            # the minimal admissible constant on this grid is sup_ratio.
            "minimal_admissible_c1": sup_ratio,
            "budget_s": BUDGET_S["ac10-wrapped-density"],
        },
    )


def ac11_moment_bound(cfg: AcceptanceConfig) -> CheckReport:
    rng = derived_rng(cfg.master_seed, "ac11")
    ratios: dict[str, float] = {}
    worst = 0.0
    for p in cfg.mb_ps:
        for s in cfg.mb_ss:
            for r in cfg.mb_rs:
                est = besq_increment_moments(r, s, p, rng, n=cfg.mb_n)
                ratios[f"p={p},s={s},r={r}"] = est.ratio
                worst = max(worst, est.ratio)
    var_est = besq_increment_moments(cfg.mb_var_r, cfg.mb_var_s, 2, rng, n=cfg.mb_n)
    var_exact = besq_variance(cfg.mb_var_r, cfg.mb_var_s)
    var_gap = abs(var_est.mean - var_exact)
    loads = [worst / MOMENT_RATIO_BOUND, var_gap / (cfg.mb_sigma * var_est.stderr)]
    return make_report(
        "ac11-moment-bound",
        "normalized increment moments under one constant; exact second-moment value",
        observed=loads,
        expected=[0.0, 0.0],
        tolerance=1.0,
        extra={
            "ratio_sup": worst,
            "bound": MOMENT_RATIO_BOUND,
            "ratios": ratios,
            "variance_mean": var_est.mean,
            "variance_exact": var_exact,
            "variance_stderr": var_est.stderr,
            "n_per_cell": cfg.mb_n,
            "budget_s": BUDGET_S["ac11-moment-bound"],
        },
    )


# ----------------------------------------------------- determinism check

def _invariant_battery(cfg: AcceptanceConfig) -> list[tuple[str, bool]]:
    """Fast deterministic re-assertions of each module's core invariants."""
    out: list[tuple[str, bool]] = []
    lat = LatticeConfig(h=1.0 / 32.0)
    dom = Disc(_CENTER, 0.5, Point2(0.1, 0.0))
    seed = derived_seed(cfg.master_seed, "ac12-walk")
    f1 = run_killed_walk(dom, lat, RunSeed(seed, 0))
    f2 = run_killed_walk(dom, lat, RunSeed(seed, 0))
    out.append(("walk-conservation", int(f1.counts.sum()) == f1.step_count + 1))
    out.append(
        ("walk-determinism", bool(np.array_equal(f1.counts, f2.counts)) and f1.exit_site == f2.exit_site)
    )
    out.append(
        ("walk-boundary-circle-zero",
         local_time_estimate(f1, CircleSpec(Point2(0.45, 0.0), 0.2), lat) == 0.0)
    )

    y, z = Point2(0.1, 0.05), Point2(-0.2, 0.1)
    g1, g2 = green_disc(dom, y, z), green_disc(dom, z, y)
    out.append(("geometry-green-symmetry", abs(g1 - g2) <= 1e-12 * abs(g1)))
    out.append(("geometry-conformal-radius-center", conformal_radius(dom, _CENTER) == 0.5))
    hp = hit_prob_concentric(0.5, 0.1, 1.0)
    out.append(
        ("geometry-hit-prob-closed-form",
         abs(hp - math.log(2.0) / math.log(10.0)) <= 1e-12)
    )

    mass, _ = integrate.quad(
        lambda v: transition_density(1.0, 0.7, v), 0.0, 12.0, points=[1.0], limit=200
    )
    out.append(("bessel-mass-identity", abs(mass - survival_prob(1.0, 0.7)) <= 1e-8))
    rng = derived_rng(cfg.master_seed, "ac12-bessel")
    out.append(("bessel-absorbed-start", sample_besq0(0.0, 1.0, rng) == 0.0))
    shift = abs(
        l1_limit_constant(0.8, 1.3, 0.9) * math.exp(0.9 * 1.3)
        - l1_limit_constant(0.8, 1.3, 0.0)
    )
    out.append(("bessel-shift-identity", shift <= 1e-12))
    w = wrapped_normal_density(0.3, 1.1, 0.45)
    out.append(("bessel-wrapped-agreement", abs(w.gaussian_series - w.cosine_series) <= 1e-12))

    eps = math.exp(-2.0)
    zero = replace(f1, counts=np.zeros_like(f1.counts))
    lt = local_time_grid(zero, eps, lat)
    out.append(("chaos-zero-field", float(np.abs(lt).max()) == 0.0))
    tp = thick_points(zero, 0.0, eps, lat)
    mu0 = build_mu(zero, 0.5, eps, None, lat)
    # gamma = 0 thick set is every domain cell; a zero field weights each
    # cell by exactly the normalization
    out.append(("chaos-thick-covers-domain", tp.area == lat.h * lat.h * mu0.n_cells))
    expected_mass = mu0.normalization * lat.h * lat.h * mu0.n_cells
    out.append(("chaos-flat-mass", abs(mu0.mass - expected_mass) <= 1e-12 * expected_mass))

    rep = make_report("probe", "battery probe", [0.5], [0.0], 1.0)
    out.append(
        ("verify-status-pure",
         rep.status == "pass"
         and evaluate_status(rep.observed, rep.expected, rep.tolerance) == rep.status)
    )
    rep2 = make_report("probe2", "battery probe", [2.0], [0.0], 1.0)
    out.append(("verify-fail-detected", rep2.status == "fail"))
    out.append(
        ("verify-fingerprint-order-free",
         canonical_fingerprint([rep, rep2]) == canonical_fingerprint([rep2, rep]))
    )
    a = derived_rng(cfg.master_seed, "ac12-probe").integers(0, 2 ** 63, 4)
    b = derived_rng(cfg.master_seed, "ac12-probe").integers(0, 2 ** 63, 4)
    out.append(("verify-derived-rng-stable", bool(np.array_equal(a, b))))
    return out


def ac12_determinism(cfg: AcceptanceConfig) -> CheckReport:
    battery = _invariant_battery(cfg)
    failed = [name for name, ok in battery if not ok]
    sub_ids = ("ac06-tail-ratio", "ac10-wrapped-density", "ac11-moment-bound")
    def run_once() -> str:
        reports = run_acceptance_suite(
            [(cid, partial(CHECKS[cid], cfg)) for cid in sub_ids]
        )
        return canonical_fingerprint(reports)

    fp1, fp2 = run_once(), run_once()
    loads = [float(len(failed)), 0.0 if fp1 == fp2 else 1.0]
    return make_report(
        "ac12-determinism",
        "module invariant battery passes; repeated seeded runs fingerprint identically",
        observed=loads,
        expected=[0.0, 0.0],
        tolerance=0.0,
        extra={
            "battery": {name: ok for name, ok in battery},
            "battery_failed": failed,
            "fingerprint_sha256": hashlib.sha256(fp1.encode("utf-8")).hexdigest()[:16],
            "fingerprints_equal": fp1 == fp2,
            "resampled_checks": list(sub_ids),
            "budget_s": BUDGET_S["ac12-determinism"],
        },
    )


# ------------------------------------------------------------- the suite

CHECKS: dict[str, Callable[[AcceptanceConfig], CheckReport]] = {
    "ac01-ring-mean": ac01_ring_mean,
    "ac02-hit-frequency": ac02_hit_frequency,
    "ac03-conditional-law": ac03_conditional_law,
    "ac04-chaos-mass-mean": ac04_chaos_mass_mean,
    "ac05-sampler-exactness": ac05_sampler_exactness,
    "ac06-tail-ratio": ac06_tail_ratio,
    "ac07-ray-knight": ac07_ray_knight,
    "ac08-profile-consistency": ac08_profile_consistency,
    "ac09-figure-heatmaps": ac09_figure_heatmaps,
    "ac10-wrapped-density": ac10_wrapped_density,
    "ac11-moment-bound": ac11_moment_bound,
    "ac12-determinism": ac12_determinism,
}

SUITES: dict[str, tuple[str, ...]] = {
    "walk": ("ac01-ring-mean", "ac02-hit-frequency", "ac03-conditional-law"),
    "bessel": (
        "ac05-sampler-exactness",
        "ac06-tail-ratio",
        "ac10-wrapped-density",
        "ac11-moment-bound",
    ),
    "chaos": ("ac04-chaos-mass-mean", "ac07-ray-knight", "ac08-profile-consistency"),
    "figure": ("ac09-figure-heatmaps",),
    "determinism": ("ac12-determinism",),
    "all": tuple(sorted(CHECKS)),
    "none": (),
}


def select_checks(suite: str) -> tuple[str, ...]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; one of {sorted(SUITES)}")
    return SUITES[suite]


def run_suite(
    cfg: AcceptanceConfig,
    suite: str = "all",
    out_dir: str | Path | None = None,
) -> list[CheckReport]:
    """Run the named suite, writing the JSON report and Markdown digest
    (and any per-check artifacts) under out_dir."""
    ids = select_checks(suite)
    out = Path(out_dir) if out_dir is not None else (
        Path(cfg.out_dir) if cfg.out_dir else Path(tempfile.mkdtemp(prefix="walkchaos-accept-"))
    )
    out.mkdir(parents=True, exist_ok=True)
    cfg = replace(cfg, out_dir=str(out))
    reports = run_acceptance_suite([(cid, partial(CHECKS[cid], cfg)) for cid in ids])
    write_suite_json(reports, out / "acceptance-report.json")
    write_suite_markdown(reports, out / "acceptance-report.md")
    return reports
