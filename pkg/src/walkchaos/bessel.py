"""Zero-dimensional Bessel machinery: the modified Bessel function I1, the
absorbed transition density, exact transition sampling, and the quantitative
limit checks built on them.

The zero-dimensional Bessel process R is the degenerate radial diffusion whose
square X = R^2 is a nonnegative martingale absorbed at 0. Its transition law
splits into an atom at 0 of mass e^{-r^2/(2s)} and a continuous part with
density q_s(r, y) = (r/s) e^{-(r^2+y^2)/(2s)} I1(r y / s) on (0, inf); the
exact sampler draws X_s given X_0 as a Poisson(x0/(2s)) mixture of
Gamma(N, 2s) variables, whose marginal reproduces q exactly (the I1 series is
the mixture expansion term by term).

Large-horizon checks run entirely in log-space: e^{gamma^2 t / 2} at t = 40
already overflows doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .errors import InsufficientSamplesError, QuadratureError
from .verify import ks_two_sample

# Branch switch for I1: power series below, scaled asymptotic expansion above.
# Both branches agree to ~1e-13 across [15, 25]; the tests sweep the seam.
I1_BRANCH_POINT = 20.0


def bessel_i1(u: float) -> float:
    """Modified Bessel function of the first kind, order one.

    Power series sum_{n>=0} (u/2)^{2n+1} / (n! (n+1)!) up to the branch
    point, then e^u/sqrt(2 pi u) times the divergent asymptotic series
    truncated at its smallest term. Relative accuracy ~1e-12 or better on
    both branches; raises OverflowError only past u ~ 709 (use
    bessel_i1_log there).
    """
    if u < 0:
        raise ValueError("u must be nonnegative")
    if u == 0.0:
        return 0.0
    if u <= I1_BRANCH_POINT:
        half = 0.5 * u
        term = half
        total = term
        n = 0
        while True:
            term *= half * half / ((n + 1) * (n + 2))
            total += term
            n += 1
            if term < total * 1e-17:
                return total
    return math.exp(bessel_i1_log(u))


def _i1_asymptotic_series(u: float) -> float:
    # 1 - 3/(8u) - 15/(128u^2) - 105/(1024u^3) - ..., i.e. the alternating
    # Hankel expansion with mu = 4: term_{k+1} = -term_k (mu-(2k+1)^2)/(8(k+1)u),
    # truncated at its smallest term (the series is divergent)
    total = 1.0
    term = 1.0
    k = 0
    while True:
        nxt = -term * (4.0 - (2 * k + 1) ** 2) / (8.0 * (k + 1) * u)
        if abs(nxt) >= abs(term) or abs(nxt) < 1e-18:
            return total + (0.0 if abs(nxt) >= abs(term) else nxt)
        total += nxt
        term = nxt
        k += 1


def bessel_i1_log(u: float) -> float:
    """log I1(u), finite for arbitrarily large u."""
    if u <= 0:
        raise ValueError("log I1 requires u > 0")
    if u <= I1_BRANCH_POINT:
        return math.log(bessel_i1(u))
    return u - 0.5 * math.log(2.0 * math.pi * u) + math.log(_i1_asymptotic_series(u))


def _i1_log_scaled(u: float) -> float:
    """log(I1(u) e^{-u}), stable on both branches."""
    return bessel_i1_log(u) - u


# ---------------------------------------------------------------- transition law

def transition_density_log(r: float, s: float, y: float) -> float:
    """log q_s(r, y) for the continuous part of the transition law."""
    if r <= 0 or s <= 0 or y <= 0:
        raise ValueError("r, s, y must all be positive")
    u = r * y / s
    return math.log(r / s) + _i1_log_scaled(u) - (y - r) ** 2 / (2.0 * s)


def transition_density(r: float, s: float, y: float) -> float:
    """Density of R_s at y, started from r, absorbed at 0.

    Integrates to the survival probability 1 - e^{-r^2/(2s)} over (0, inf);
    the missing mass is the atom at 0.
    """
    log_q = transition_density_log(r, s, y)
    if log_q < -745.0:
        return 0.0
    return math.exp(log_q)


def survival_prob(r: float, s: float) -> float:
    """Probability that the process has not been absorbed by time s."""
    if r < 0 or s <= 0:
        raise ValueError("need r >= 0 and s > 0")
    return -math.expm1(-r * r / (2.0 * s))


def sample_besq0(x0, s: float, rng: np.random.Generator, size: int | None = None):
    """Exact draw(s) of X_s for the squared process, given X_0 = x0.

    N ~ Poisson(x0/(2s)), then Gamma(N, scale 2s); N = 0 gives the absorbed
    value 0 (numpy's gamma returns exactly 0.0 at shape 0). ``x0`` may be an
    array for elementwise starts; ``size`` broadcasts a scalar start.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    x0_arr = np.asarray(x0, dtype=float)
    if np.any(x0_arr < 0):
        raise ValueError("x0 must be nonnegative")
    lam = x0_arr / (2.0 * s)
    n = rng.poisson(lam, size=size if size is not None else (x0_arr.shape or None))
    out = rng.gamma(n, 2.0 * s)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class BesselLaw:
    """Starting point (Bessel scale) and horizon of one process law."""

    r: float
    t: float

    def __post_init__(self) -> None:
        if self.r < 0:
            raise ValueError("start must be nonnegative")
        if self.t <= 0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class BesqPathSkeleton:
    """Squared-process values on an increasing time grid; absorbed paths stay
    at zero from the first zero on."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("times and values must be nonempty and equal length")
        if any(t1 <= t0 for t0, t1 in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if any(v < 0 for v in self.values):
            raise ValueError("squared values must be nonnegative")
        hit_zero = False
        for v in self.values:
            if hit_zero and v != 0.0:
                raise ValueError("absorbed path must stay at zero")
            hit_zero = hit_zero or v == 0.0


def sample_bessel_path(
    law: BesselLaw, grid: Sequence[float], rng: np.random.Generator
) -> BesqPathSkeleton:
    """One exact skeleton of X on the grid via Markov transition steps."""
    ts = [float(t) for t in grid]
    if not ts or ts[0] != 0.0:
        raise ValueError("grid must start at 0")
    if ts[-1] > law.t * (1 + 1e-12):
        raise ValueError("grid exceeds the law's horizon")
    values = [law.r ** 2]
    for t0, t1 in zip(ts, ts[1:]):
        if t1 <= t0:
            raise ValueError("grid must be strictly increasing")
        values.append(sample_besq0(values[-1], t1 - t0, rng))
    return BesqPathSkeleton(tuple(ts), tuple(values))


def _sample_paths_squared(
    x0: float, n_steps: int, step: float, n_paths: int, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized skeletons: (n_paths, n_steps+1) array of X at integer
    multiples of ``step``."""
    out = np.empty((n_paths, n_steps + 1))
    out[:, 0] = x0
    cur = np.full(n_paths, float(x0))
    for k in range(1, n_steps + 1):
        cur = sample_besq0(cur, step, rng)
        out[:, k] = cur
    return out


# ---------------------------------------------------------------- quadratures

class TailProb(NamedTuple):
    value: float
    log_value: float
    bound: float
    log_bound: float


class ExpMoment(NamedTuple):
    value: float
    log_value: float
    bound: float
    log_bound: float


def _log_quad(log_f, lo: float, hi: float, probe: np.ndarray) -> float:
    """log of integral of exp(log_f) over the finite [lo, hi], max-shifted.

    ``probe`` supplies abscissae where log_f is scanned for its rough maximum;
    the shifted integrand is then O(1) for the adaptive rule, and the peak
    location is passed as an explicit break point so a narrow peak deep inside
    a long interval cannot be stepped over.
    """
    finite = [log_f(float(x)) for x in probe]
    k = int(np.argmax(finite))
    m = finite[k]
    if m == -math.inf:
        return -math.inf

    def shifted(y: float) -> float:
        lf = log_f(y)
        return math.exp(lf - m) if lf - m > -745.0 else 0.0

    peak = float(probe[k])
    pts = [peak] if lo < peak < hi else None
    val, err = integrate.quad(
        shifted, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=400, points=pts
    )
    if val <= 0.0:
        return -math.inf
    if err > 1e-6 * val + 1e-12:
        raise QuadratureError(f"log-space quadrature error {err:.3g} too large")
    return m + math.log(val)


def tail_prob(r: float, t: float, lam: float) -> TailProb:
    """P_r[R_t >= lam] by quadrature, with the comparison bound shape
    sqrt(r) e^{lam r / t} (1/lam) e^{-lam^2/(2t)} (its constant C is
    calibrated by the caller, not here)."""
    if r <= 0 or t <= 0 or lam <= 0:
        raise ValueError("r, t, lam must be positive")
    # the integrand under the tail decays at least like a Gaussian of scale
    # sqrt(t); 45 scales out the truncated mass is ~e^-1000 relative
    hi = lam + 45.0 * math.sqrt(t) + r + 10.0
    probe = np.linspace(lam, hi, 512)
    log_val = _log_quad(lambda y: transition_density_log(r, t, y), lam, hi, probe)
    log_bound = 0.5 * math.log(r) + lam * r / t - math.log(lam) - lam * lam / (2.0 * t)
    value = math.exp(log_val) if log_val > -745.0 else 0.0
    bound = math.exp(log_bound) if log_bound < 709.0 else math.inf
    return TailProb(value, log_val, bound, log_bound)


def exp_moment(r: float, t: float, gamma: float, window: float | None = None) -> ExpMoment:
    """E_r[e^{gamma R_t}] restricted to the continuous part, optionally through
    the window |R_t - gamma t| <= M sqrt(t). Bound shape: sqrt(r) e^r
    (1/sqrt(t)) e^{gamma^2 t / 2}."""
    if r <= 0 or t <= 0 or gamma <= 0:
        raise ValueError("r, t, gamma must be positive")
    center = gamma * t + r
    if window is None:
        lo = 0.0
        hi = center + 45.0 * math.sqrt(t) + 10.0
    else:
        if window <= 0:
            raise ValueError("window must be positive")
        lo = max(0.0, gamma * t - window * math.sqrt(t))
        hi = gamma * t + window * math.sqrt(t)

    def log_f(y: float) -> float:
        if y <= 0.0:
            return -math.inf
        return gamma * y + transition_density_log(r, t, y)

    probe = np.linspace(max(lo, 1e-12), hi, 512)
    log_val = _log_quad(log_f, lo, hi, probe)
    log_bound = 0.5 * math.log(r) + r - 0.5 * math.log(t) + gamma * gamma * t / 2.0
    value = math.exp(log_val) if log_val < 709.0 else math.inf
    bound = math.exp(log_bound) if log_bound < 709.0 else math.inf
    return ExpMoment(value, log_val, bound, log_bound)


# ---------------------------------------------------------------- limit checks

def l1_limit_constant(r: float, gamma: float, b: float) -> float:
    """Constant r I1(gamma r) e^{-b gamma} / gamma of the tail asymptotic
    P_r[R_t >= gamma t + b] ~ const (1/t) e^{-gamma^2 t / 2}."""
    if r <= 0 or gamma <= 0:
        raise ValueError("r and gamma must be positive")
    return r * bessel_i1(gamma * r) * math.exp(-b * gamma) / gamma


def l1_limit_check(
    r: float, gamma: float, b: float, ts: Sequence[float]
) -> list[float]:
    """Normalized tail ratios t e^{gamma^2 t/2} P_r[R_t >= gamma t + b]
    divided by the limit constant; the contract is convergence to 1."""
    log_const = (
        math.log(r) + _i1_log_scaled(gamma * r) + gamma * r - b * gamma - math.log(gamma)
    )
    out = []
    for t in ts:
        tp = tail_prob(r, t, gamma * t + b)
        log_ratio = math.log(t) + gamma * gamma * t / 2.0 + tp.log_value - log_const
        out.append(math.exp(log_ratio))
    return out


def erf_mass(m: float) -> float:
    """Standard normal mass of [-m, m]."""
    if m <= 0:
        raise ValueError("m must be positive")
    return math.erf(m / math.sqrt(2.0))


def l2_limit_check(
    r: float, gamma: float, m_window: float, ts: Sequence[float]
) -> list[float]:
    """Windowed exponential-moment ratios
    (1/sqrt(2 pi)) sqrt(t) e^{-gamma^2 t/2} E_r[e^{gamma R_t}; window] over
    r I1(gamma r) erf_mass(M); converges to 1.

    Note the limit constant carries no 1/gamma: the window integral is
    Gaussian, so no exponential-rate factor appears (unlike the tail case).
    """
    log_const = math.log(r) + _i1_log_scaled(gamma * r) + gamma * r + math.log(erf_mass(m_window))
    out = []
    for t in ts:
        em = exp_moment(r, t, gamma, window=m_window)
        log_ratio = (
            -0.5 * math.log(2.0 * math.pi)
            + 0.5 * math.log(t)
            - gamma * gamma * t / 2.0
            + em.log_value
            - log_const
        )
        out.append(math.exp(log_ratio))
    return out


# ---------------------------------------------------------------- moment bounds

class MomentEstimate(NamedTuple):
    mean: float
    stderr: float
    n: int
    ratio: float  # mean / (s^{p/2} max(1, r^{2p}))


MIN_MOMENT_SAMPLES = 100_000


def besq_increment_moments(
    r: float,
    s: float,
    p: int,
    rng: np.random.Generator,
    n: int = MIN_MOMENT_SAMPLES,
) -> MomentEstimate:
    """MC estimate of E|X_s - r^2|^p from exact draws, with the normalization
    ratio against s^{p/2} max(1, r^{2p})."""
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    if p not in (1, 2, 3):
        raise ValueError("p must be 1, 2 or 3")
    if r < 0:
        raise ValueError("r must be nonnegative")
    if n < MIN_MOMENT_SAMPLES:
        raise InsufficientSamplesError(f"need at least {MIN_MOMENT_SAMPLES} draws")
    norm = s ** (p / 2.0) * max(1.0, r ** (2 * p))
    if r == 0.0:
        return MomentEstimate(0.0, 0.0, n, 0.0)
    draws = sample_besq0(r * r, s, rng, size=n)
    dev = np.abs(draws - r * r) ** p
    mean = float(dev.mean())
    stderr = float(dev.std(ddof=1) / math.sqrt(n))
    return MomentEstimate(mean, stderr, n, mean / norm)


def besq_variance(r: float, s: float) -> float:
    """Exact Var(X_s) = 4 s r^2 from the Poisson-Gamma mixture cumulants."""
    return 4.0 * s * r * r


# ---------------------------------------------------------------- path checks

class RayKnightBin(NamedTuple):
    n: int
    start_mean: float  # mean of the rescaled outer local times in the bin
    ks_distance: float
    ks_p_value: float
    mean_z: float  # paired martingale z-score within the bin


class RayKnightResult(NamedTuple):
    max_ks: float
    bins: tuple[RayKnightBin, ...]
    merged_bins: int
    zero_pairs: int
    zero_consistent: bool


def ray_knight_check(
    l_outer: Sequence[float],
    l_inner: Sequence[float],
    eta_prime: float,
    rng: np.random.Generator,
    n_bins: int = 5,
    min_per_bin: int = 1000,
    synth_per_pair: int = 1,
) -> RayKnightResult:
    """Conditional-law comparison across one e-fold of radii.

    Given per-walk local times at radii eta' and eta'/e, the rescaled inner
    values L_inner/(eta'/e) conditioned on L_outer = l should follow the
    squared-process transition over unit time started from l/eta'. Pairs are
    quantile-binned by the outer value; per bin, the empirical inner sample
    is KS-compared against fresh exact draws seeded from each pair's own
    start (avoiding within-bin start heterogeneity), plus a paired martingale
    mean check. Underfilled bins merge upward and are counted.

    ``synth_per_pair`` draws of the reference law per observed pair shrink
    the two-sample comparison noise without touching the empirical side.
    """
    if synth_per_pair < 1:
        raise ValueError("synth_per_pair must be at least 1")
    lo = np.asarray(l_outer, dtype=float)
    li = np.asarray(l_inner, dtype=float)
    if lo.shape != li.shape or lo.ndim != 1 or lo.size == 0:
        raise ValueError("need equal-length 1D local-time arrays")
    if eta_prime <= 0:
        raise ValueError("eta_prime must be positive")
    zero_mask = lo == 0.0
    zero_pairs = int(zero_mask.sum())
    zero_consistent = bool(np.all(li[zero_mask] == 0.0))
    x_start = lo[~zero_mask] / eta_prime
    x_inner = li[~zero_mask] / (eta_prime / math.e)
    if x_start.size < min_per_bin:
        raise InsufficientSamplesError(
            f"only {x_start.size} positive pairs, below the bin floor {min_per_bin}"
        )
    order = np.argsort(x_start, kind="stable")
    x_start = x_start[order]
    x_inner = x_inner[order]
    # equal-count quantile groups, then sweep groups below the floor into
    # their predecessor (the first into its successor)
    edges = list(np.linspace(0, x_start.size, n_bins + 1).astype(int))
    merged = 0
    k = 1
    while k < len(edges) - 1:
        if edges[k + 1] - edges[k] < min_per_bin or edges[k] - edges[k - 1] < min_per_bin:
            edges.pop(k)
            merged += 1
        else:
            k += 1
    bins: list[RayKnightBin] = []
    for a, b in zip(edges, edges[1:]):
        starts = x_start[a:b]
        inner = x_inner[a:b]
        synth = sample_besq0(np.tile(starts, synth_per_pair), 1.0, rng)
        ks = ks_two_sample(inner, synth)
        diffs = inner - starts
        se = diffs.std(ddof=1) / math.sqrt(diffs.size)
        mean_z = float(diffs.mean() / se) if se > 0 else 0.0
        bins.append(
            RayKnightBin(int(starts.size), float(starts.mean()), ks.distance, ks.p_value, mean_z)
        )
    max_ks = max((b.ks_distance for b in bins), default=0.0)
    return RayKnightResult(max_ks, tuple(bins), merged, zero_pairs, zero_consistent)


class EnvelopeCurve(NamedTuple):
    s0_values: tuple[float, ...]
    probabilities: tuple[float, ...]
    n_conditioned: int


def conditional_envelope_prob(
    r: float,
    t: int,
    gamma: float,
    b: float,
    gamma_tilde: float,
    b_tilde: float,
    s0_values: Sequence[int],
    rng: np.random.Generator,
    n_paths: int = 200_000,
) -> EnvelopeCurve:
    """P_r[forall s in [s0, t] cap N: R_s <= gamma~ s + b~ | R_t >= gamma t + b]
    estimated by rejection over exact integer-grid skeletons, for each s0.

    The conditional probability should rise toward 1 as s0 grows. Feasible
    only for small gamma^2 t (the conditioning event has probability
    ~ e^{-gamma^2 t / 2}).
    """
    if gamma_tilde <= gamma:
        raise ValueError("the envelope slope must exceed the conditioning slope")
    if t < 2 or any(not 1 <= s0 <= t for s0 in s0_values):
        raise ValueError("need integer horizon >= 2 and s0 values within [1, t]")
    paths = _sample_paths_squared(r * r, t, 1.0, n_paths, rng)
    radial = np.sqrt(paths)
    cond = radial[:, t] >= gamma * t + b
    n_cond = int(cond.sum())
    if n_cond < 100:
        raise InsufficientSamplesError(
            f"only {n_cond} paths satisfied the conditioning event"
        )
    sel = radial[cond]
    s_grid = np.arange(t + 1)
    envelope = gamma_tilde * s_grid + b_tilde
    probs = []
    for s0 in s0_values:
        inside = np.all(sel[:, s0 : t + 1] <= envelope[s0 : t + 1], axis=1)
        probs.append(float(inside.mean()))
    return EnvelopeCurve(tuple(float(s) for s in s0_values), tuple(probs), n_cond)


# ---------------------------------------------------------------- wrapped normal

class WrappedDensity(NamedTuple):
    value: float  # the cosine-series evaluation
    gaussian_series: float
    cosine_series: float


def wrapped_normal_density(theta: float, theta0: float, t: float) -> WrappedDensity:
    """Density at theta of a normal with variance t wrapped on the circle,
    centered theta0, by both classical representations.

    Gaussian-image series (1/sqrt(2 pi t)) sum_n e^{-(d + 2 pi n)^2/(2t)} and
    cosine series (1/2pi)(1 + 2 sum_p cos(p d) e^{-p^2 t/2}); truncation
    tails below 1e-14 on each. The two agree to ~1e-13; the cosine value is
    returned as the canonical one.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    delta = theta - theta0
    # gaussian images: |delta + 2 pi n| beyond sqrt(80 t) contribute < e^-40
    reach = (abs(delta) + math.sqrt(80.0 * t)) / (2.0 * math.pi)
    n_max = int(math.ceil(reach)) + 1
    g = 0.0
    for n in range(-n_max, n_max + 1):
        g += math.exp(-((delta + 2.0 * math.pi * n) ** 2) / (2.0 * t))
    g /= math.sqrt(2.0 * math.pi * t)
    # cosine modes: e^{-p^2 t/2} < e^-40 once p > sqrt(80/t)
    p_max = int(math.ceil(math.sqrt(80.0 / t)))
    c = 1.0
    for p in range(1, p_max + 1):
        c += 2.0 * math.cos(p * delta) * math.exp(-p * p * t / 2.0)
    c /= 2.0 * math.pi
    return WrappedDensity(c, g, c)


def wrapped_normal_max_deviation(t: float) -> float:
    """Exact sup over theta of |f_t - 1/(2 pi)|, attained at theta = theta0:
    (1/pi) sum_{p>=1} e^{-p^2 t / 2}."""
    if t <= 0:
        raise ValueError("t must be positive")
    p_max = int(math.ceil(math.sqrt(80.0 / t)))
    total = 0.0
    for p in range(1, p_max + 1):
        total += math.exp(-p * p * t / 2.0)
    return total / math.pi
