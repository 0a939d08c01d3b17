"""Two-sided pure-jump compound Poisson trajectories with positive-mean
jumps, Monte Carlo estimators for the capacity and containment functionals
of their argmin sets, and the normal-quantile helper used for the level
part of confidence rectangles.

A trajectory is zero at the origin, accumulates right-side jumps at Poisson
arrival times t > 0 and left-side jumps as left limits at t < 0, so it is
right-continuous and its argmin set is almost surely a finite union of
compact intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from stepargmin.argmin import argmin_set, contained_in_open, hits, largmin, sargmin
from stepargmin.rng import child_seed, run_chunks, substream
from stepargmin.stepfun import StepFunction1D

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


class InvalidSpecError(ValueError):
    """Raised for rates or jump laws outside the supported family."""


class TooManyRedrawsError(RuntimeError):
    """Raised when boundary redraws exceed 1% of the requested replications."""


class EmptySamplesError(ValueError):
    pass


class OutOfDomainError(ValueError):
    pass


@dataclass(frozen=True)
class JumpLaw:
    """Jump distribution descriptor.

    Families: point(c), two_point(v1, v2, p) with P(v1) = p,
    gaussian(mean, sd), shifted_exp(shift, scale), empirical(samples...).
    """

    family: str
    params: tuple

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.family not in ("point", "two_point", "gaussian", "shifted_exp", "empirical"):
            raise InvalidSpecError(f"unknown jump family {self.family!r}")
        n_expected = {"point": 1, "two_point": 3, "gaussian": 2, "shifted_exp": 2}
        if self.family in n_expected and len(params) != n_expected[self.family]:
            raise InvalidSpecError(f"{self.family} takes {n_expected[self.family]} parameters")
        if self.family == "two_point" and not 0.0 <= params[2] <= 1.0:
            raise InvalidSpecError("two_point probability must lie in [0, 1]")
        if self.family == "gaussian" and params[1] < 0:
            raise InvalidSpecError("gaussian sd must be nonnegative")
        if self.family == "shifted_exp" and params[1] <= 0:
            raise InvalidSpecError("shifted_exp scale must be positive")
        if self.family == "empirical" and not params:
            raise InvalidSpecError("empirical law needs at least one sample")

    def mean(self):
        p = self.params
        if self.family == "point":
            return p[0]
        if self.family == "two_point":
            return p[2] * p[0] + (1.0 - p[2]) * p[1]
        if self.family == "gaussian":
            return p[0]
        if self.family == "shifted_exp":
            return p[0] + p[1]
        return float(np.mean(p))

    def sample(self, rng, n):
        p = self.params
        if self.family == "point":
            return np.full(n, p[0])
        if self.family == "two_point":
            return np.where(rng.random(n) < p[2], p[0], p[1])
        if self.family == "gaussian":
            return p[0] + p[1] * rng.standard_normal(n)
        if self.family == "shifted_exp":
            return p[0] + p[1] * rng.standard_exponential(n)
        return rng.choice(np.asarray(p), size=n, replace=True)

    def to_token(self):
        return f"{self.family}({', '.join(repr(v) for v in self.params)})"


def jump_law_from_token(token):
    token = token.strip()
    if "(" not in token or not token.endswith(")"):
        raise InvalidSpecError(f"bad jump law token: {token!r}")
    family, rest = token.split("(", 1)
    params = [float(t) for t in rest[:-1].split(",") if t.strip()]
    return JumpLaw(family.strip(), tuple(params))


@dataclass(frozen=True)
class CompoundPoissonSpec:
    """Rates, jump laws, and the adaptive-window policy of a two-sided
    compound Poisson process.  Positive jump means force the trajectory
    upward on both sides, so the argmin set is almost surely compact."""

    rate_right: float
    rate_left: float
    jump_right: JumpLaw
    jump_left: JumpLaw
    window_initial: float = 8.0
    window_growth: float = 2.0
    max_window: float = 64.0

    def __post_init__(self):
        if self.rate_right <= 0 or self.rate_left <= 0:
            raise InvalidSpecError("rates must be strictly positive")
        if self.jump_right.mean() <= 0 or self.jump_left.mean() <= 0:
            raise InvalidSpecError("jump laws must have strictly positive mean")
        if self.window_initial <= 0:
            raise InvalidSpecError("window_initial must be positive")
        if self.window_growth <= 1:
            raise InvalidSpecError("window_growth must exceed 1")
        if self.max_window < self.window_initial:
            raise InvalidSpecError("max_window must be at least window_initial")

    def to_text(self):
        lines = [
            f"rate_right = {self.rate_right!r}",
            f"rate_left = {self.rate_left!r}",
            f"jump_right = {self.jump_right.to_token()}",
            f"jump_left = {self.jump_left.to_token()}",
            f"window_initial = {self.window_initial!r}",
            f"window_growth = {self.window_growth!r}",
            f"max_window = {self.max_window!r}",
        ]
        return "\n".join(lines) + "\n"


def spec_from_text(text):
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpecError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        entries[key] = value
    required = ["rate_right", "rate_left", "jump_right", "jump_left"]
    for key in required:
        if key not in entries:
            raise InvalidSpecError(f"missing required key {key!r}")
    kwargs = dict(
        rate_right=float(entries["rate_right"]),
        rate_left=float(entries["rate_left"]),
        jump_right=jump_law_from_token(entries["jump_right"]),
        jump_left=jump_law_from_token(entries["jump_left"]),
    )
    for key in ("window_initial", "window_growth", "max_window"):
        if key in entries:
            kwargs[key] = float(entries[key])
    return CompoundPoissonSpec(**kwargs)


@dataclass(frozen=True)
class MinimizerSample:
    xi_min: float
    xi_max: float
    boundary_touched: bool = False
    redraws: int = 0


@dataclass(frozen=True)
class FunctionalEstimate:
    value: float
    std_error: float
    replications: int


def _proportion(flags, n):
    value = float(np.sum(flags)) / n
    return FunctionalEstimate(value, math.sqrt(value * (1.0 - value) / n), n)


_GAP_BLOCK = 64


def _arrivals_and_jumps(rate, law, horizon, gap_rng, jump_rng):
    # Gaps come in fixed-size blocks so the drawn sequence is a prefix of one
    # infinite stream regardless of how far the horizon reaches.
    gaps = gap_rng.standard_exponential(_GAP_BLOCK) / rate
    times = np.cumsum(gaps)
    while times[-1] <= horizon:
        more = gap_rng.standard_exponential(_GAP_BLOCK) / rate
        times = np.concatenate([times, times[-1] + np.cumsum(more)])
    times = times[times <= horizon]
    count = times.size
    jumps = law.sample(jump_rng, _GAP_BLOCK)
    while jumps.size < count:
        jumps = np.concatenate([jumps, law.sample(jump_rng, _GAP_BLOCK)])
    return times, jumps[:count]


def _dedupe(times, jumps):
    if times.size < 2 or np.all(np.diff(times) > 0):
        return times, jumps
    uniq, inverse = np.unique(times, return_inverse=True)
    summed = np.zeros(uniq.size)
    np.add.at(summed, inverse, jumps)
    return uniq, summed


def _build_trajectory(spec, seed):
    """Full-horizon trajectory on [-max_window, max_window] as breakpoint
    and value arrays.  Pure in (spec, seed)."""
    horizon = spec.max_window
    t_r, j_r = _arrivals_and_jumps(
        spec.rate_right, spec.jump_right, horizon, substream(seed, 0), substream(seed, 2)
    )
    t_l, j_l = _arrivals_and_jumps(
        spec.rate_left, spec.jump_left, horizon, substream(seed, 1), substream(seed, 3)
    )
    t_r, j_r = _dedupe(t_r, j_r)
    t_l, j_l = _dedupe(t_l, j_l)
    cum_r = np.cumsum(j_r)
    cum_l = np.cumsum(j_l)
    breaks = np.concatenate([-t_l[::-1], t_r])
    # left cells hold the partial sums of jumps strictly beyond the cell,
    # the center cell spanning zero holds 0, right cells the running sums
    values = np.concatenate([cum_l[::-1], [0.0], cum_r])
    return breaks, values


def _window_grid(spec):
    grid = []
    w = spec.window_initial
    while w < spec.max_window:
        grid.append(w)
        w *= spec.window_growth
    grid.append(spec.max_window)
    return grid


def _truncate(breaks, values, window):
    i0 = np.searchsorted(breaks, -window, side="left")
    i1 = np.searchsorted(breaks, window, side="right")
    return StepFunction1D(breaks[i0:i1], values[i0 : i1 + 1])


def _simulate(spec, seed):
    """Returns (trajectory, argmin BoxUnion, boundary_flag).

    The argmin set is computed on the full generated horizon; the reported
    window is the smallest policy window strictly containing it.  Growing
    window_initial therefore never changes the argmin set of an accepted
    draw.
    """
    breaks, values = _build_trajectory(spec, seed)
    a_full = argmin_set(StepFunction1D(breaks, values))
    strict_inside = None
    if a_full.bounded:
        lo = min(b.lo[0] for b in a_full.boxes)
        hi = max(b.hi[0] for b in a_full.boxes)
        for w in _window_grid(spec):
            if -w < lo and hi < w:
                strict_inside = w
                break
    if strict_inside is None:
        return _truncate(breaks, values, spec.max_window), a_full, True
    return _truncate(breaks, values, strict_inside), a_full, False


def simulate_trajectory(spec, seed):
    """One trajectory plus a boundary flag; the flag reports that even the
    maximal window failed to contain the argmin set strictly."""
    trajectory, _, boundary = _simulate(spec, seed)
    return trajectory, boundary


_MAX_ATTEMPTS = 10_000


def _draw_accepted(spec, master_seed, rep):
    """Redraw on boundary contact with fresh substreams; returns
    (argmin BoxUnion, redraw count)."""
    for attempt in range(_MAX_ATTEMPTS):
        seed = child_seed(master_seed, rep, attempt)
        _, a, boundary = _simulate(spec, seed)
        if not boundary:
            return a, attempt
    raise TooManyRedrawsError(f"replication {rep} exhausted {_MAX_ATTEMPTS} attempts")


def _extremes_worker(args, lo, hi):
    spec, master_seed = args
    out = []
    for rep in range(lo, hi):
        a, redraws = _draw_accepted(spec, master_seed, rep)
        lo_pt = sargmin(a)[0]
        hi_pt = largmin(a)[0]
        out.append((lo_pt, hi_pt, redraws))
    return out


def _predicate_worker(args, lo, hi):
    spec, master_seed, mode, target = args
    out = []
    for rep in range(lo, hi):
        a, redraws = _draw_accepted(spec, master_seed, rep)
        if mode == "hits":
            flag = hits(a, target)
        else:
            flag = contained_in_open(a, target)
        out.append((flag, redraws))
    return out


def _check_redraws(total_redraws, replications):
    if total_redraws > 0.01 * replications:
        raise TooManyRedrawsError(
            f"{total_redraws} boundary redraws exceed 1% of {replications} replications"
        )


def sample_extreme_minimizers(spec, replications, seed, workers=1):
    """Smallest and largest minimizer per replication; boundary draws are
    discarded and redrawn, with the redraw count carried on each sample."""
    if replications < 1:
        raise ValueError("replications must be at least 1")
    rows = run_chunks(_extremes_worker, (spec, seed), replications, workers)
    _check_redraws(sum(r[2] for r in rows), replications)
    return [
        MinimizerSample(xi_min=lo, xi_max=hi, boundary_touched=False, redraws=red)
        for lo, hi, red in rows
    ]


def estimate_capacity(spec, e, replications, seed, workers=1):
    """Monte Carlo estimate of P(argmin set hits the closed union e)."""
    rows = run_chunks(_predicate_worker, (spec, seed, "hits", e), replications, workers)
    _check_redraws(sum(r[1] for r in rows), replications)
    return _proportion(np.array([r[0] for r in rows], dtype=bool), replications)


def estimate_containment(spec, g, replications, seed, workers=1):
    """Monte Carlo estimate of P(argmin set lies inside the open union g)."""
    rows = run_chunks(_predicate_worker, (spec, seed, "within", g), replications, workers)
    _check_redraws(sum(r[1] for r in rows), replications)
    return _proportion(np.array([r[0] for r in rows], dtype=bool), replications)


def samples_to_csv(samples):
    lines = ["rep,xi_min,xi_max,redraws"]
    for rep, s in enumerate(samples):
        lines.append(f"{rep},{s.xi_min!r},{s.xi_max!r},{s.redraws}")
    return "\n".join(lines) + "\n"


def choose_interval_bounds(samples, gamma):
    """Bounds (a, b) with empirical P(xi_min > a and xi_max < b) >= gamma.

    Bonferroni split on the two tails: each side gives up at most half of
    1 - gamma, taken at an order statistic nudged outward so atoms cannot
    sit on the strict-inequality boundary.
    """
    if not samples:
        raise EmptySamplesError("no minimizer samples")
    if not 0.0 < gamma < 1.0:
        raise OutOfDomainError("gamma must lie in (0, 1)")
    m = len(samples)
    lo_sorted = np.sort(np.array([s.xi_min for s in samples]))
    hi_sorted = np.sort(np.array([s.xi_max for s in samples]))
    r = max(1, math.floor(((1.0 - gamma) / 2.0) * m))
    a_stat = float(lo_sorted[r - 1])
    b_stat = float(hi_sorted[m - r])
    a = a_stat - 1e-9 * max(1.0, abs(a_stat))
    b = b_stat + 1e-9 * max(1.0, abs(b_stat))
    return a, b


def normal_cdf(z):
    return 0.5 * math.erfc(-z / _SQRT2)


def normal_pdf(z):
    try:
        return math.exp(-0.5 * z * z) / _SQRT2PI
    except OverflowError:
        return 0.0


# rational initial guess for the normal quantile (relative error ~1e-9),
# polished below by Halley steps against the erfc-based CDF
_ICDF_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ICDF_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ICDF_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ICDF_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)


def _icdf_initial(p):
    a, b, c, d = _ICDF_A, _ICDF_B, _ICDF_C, _ICDF_D
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    if p > 1.0 - p_low:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
        ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
    )


def inverse_normal_cdf(p):
    """Standard normal quantile with |cdf(z) - p| below 1e-9."""
    if not 0.0 < p < 1.0:
        raise OutOfDomainError("p must lie strictly between 0 and 1")
    if p == 0.5:
        return 0.0
    z = _icdf_initial(p)
    for _ in range(2):
        density = normal_pdf(z)
        if density <= 0.0:
            break
        err = normal_cdf(z) - p
        u = err / density
        z = z - u / (1.0 + z * u / 2.0)
    return z
