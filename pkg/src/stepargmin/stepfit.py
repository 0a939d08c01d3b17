"""Least-squares fitting of k-jump step functions, the rescaled local
criterion processes around a reference breakpoint vector, synthetic
regression data, and the plug-in limit-process parameters.

Fitted regression functions use left-closed segments: level a[0] on
x <= t[0], a[j] on (t[j-1], t[j]], a[k] on x > t[k-1].  Breakpoint
candidates are the distinct observed x values except the largest, which
keeps every segment nonempty and makes the minimizer exact over a finite
set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from stepargmin.cpoisson import CompoundPoissonSpec, InvalidSpecError, JumpLaw
from stepargmin.stepfun import GridFunction, StepFunction1D


class EmptySegmentError(ValueError):
    pass


class TooFewDistinctXError(ValueError):
    pass


class CollapsedOrderError(ValueError):
    """Raised when a reference breakpoint vector is not strictly increasing."""


class NonpositiveJumpMeanError(ValueError):
    """Raised when the induced limit jump law would not drift upward."""


class DatasetFormatError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


def _readonly(values):
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _readonly(self.x)
        y = _readonly(self.y)
        if x.ndim != 1 or y.ndim != 1 or x.size != y.size:
            raise ValueError("x and y must be one-dimensional of equal length")
        if x.size < 2:
            raise ValueError("need at least two observations")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("observations must be finite")
        if np.all(x == x[0]):
            raise ValueError("x must not be constant")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.size


@dataclass(frozen=True)
class StepModel:
    t: tuple
    a: tuple

    def __post_init__(self):
        t = tuple(float(v) for v in self.t)
        a = tuple(float(v) for v in self.a)
        if len(a) != len(t) + 1:
            raise ValueError("need one more level than breakpoints")
        if any(t[i] >= t[i + 1] for i in range(len(t) - 1)):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "a", a)

    @property
    def k(self):
        return len(self.t)

    def values_at(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(np.asarray(self.t), x, side="left")
        return np.asarray(self.a)[idx]


def sse(data, model):
    """Unnormalized squared loss: the sum over observations of the squared
    residual against the step model."""
    resid = data.y - model.values_at(data.x)
    return float(np.sum(resid * resid))


def optimal_levels(data, t):
    """Per-segment means of y, the exact inner least-squares minimizer for
    fixed breakpoints."""
    t_arr = np.asarray(tuple(float(v) for v in t))
    if t_arr.size > 1 and not np.all(np.diff(t_arr) > 0):
        raise ValueError("breakpoints must be strictly increasing")
    idx = np.searchsorted(t_arr, data.x, side="left")
    levels = []
    for j in range(t_arr.size + 1):
        sel = idx == j
        if not np.any(sel):
            raise EmptySegmentError(f"segment {j + 1} contains no observations")
        levels.append(float(np.mean(data.y[sel])))
    return tuple(levels)


@dataclass(frozen=True)
class FitResult:
    tau: tuple
    alpha: tuple
    sse: float
    segment_counts: tuple
    sigma_hat: tuple

    def to_text(self):
        def join(vals):
            return ", ".join(repr(float(v)) for v in vals)

        lines = [
            f"tau = {join(self.tau)}",
            f"alpha = {join(self.alpha)}",
            f"sse = {float(self.sse)!r}",
            f"segment_counts = {', '.join(str(int(c)) for c in self.segment_counts)}",
            f"sigma_hat = {join(self.sigma_hat)}",
        ]
        return "\n".join(lines) + "\n"


def _blocks(data):
    order = np.argsort(data.x, kind="stable")
    xs = data.x[order]
    ys = data.y[order]
    vals, starts = np.unique(xs, return_index=True)
    cum_n = np.append(starts, xs.size).astype(np.int64)
    cum_s = np.concatenate(([0.0], np.cumsum(np.add.reduceat(ys, starts))))
    cum_q = np.concatenate(([0.0], np.cumsum(np.add.reduceat(ys * ys, starts))))
    return vals, ys, cum_n, cum_s, cum_q


def _cost_row(s, cum_n, cum_s, cum_q):
    # within-segment squared deviation of blocks s..c for every c >= s,
    # from prefix sums; the same expression is reused for tie extraction so
    # equality tests are exact
    n = cum_n[s + 1 :] - cum_n[s]
    tot = cum_s[s + 1 :] - cum_s[s]
    sq = cum_q[s + 1 :] - cum_q[s]
    return sq - (tot * tot) / n


def fit_step(data, k):
    """Exact least-squares k-jump fit by dynamic programming over prefix
    segment costs, ties broken toward the lexicographically smallest
    breakpoint vector."""
    k = int(k)
    if k < 0:
        raise ValueError("k must be nonnegative")
    vals, ys_sorted, cum_n, cum_s, cum_q = _blocks(data)
    m = vals.size
    if m < k + 1:
        raise TooFewDistinctXError(f"need at least {k + 1} distinct x values, have {m}")

    # suffix[j][s]: optimal cost of covering blocks s.. with the last k+1-j
    # segments; suffix[k] is the single-trailing-segment cost
    tail_n = cum_n[m] - cum_n[:m]
    tail_s = cum_s[m] - cum_s[:m]
    tail_q = cum_q[m] - cum_q[:m]
    suffix = {k: tail_q - (tail_s * tail_s) / tail_n}
    if k >= 2:
        with np.errstate(divide="ignore", invalid="ignore"):
            n_mat = cum_n[None, 1:] - cum_n[:-1, None]
            s_mat = cum_s[None, 1:] - cum_s[:-1, None]
            q_mat = cum_q[None, 1:] - cum_q[:-1, None]
            cost_mat = q_mat - (s_mat * s_mat) / n_mat
        cost_mat[n_mat <= 0] = np.inf
        for j in range(k - 1, 0, -1):
            cmax = m - 1 - (k - j)
            cand = cost_mat[:, : cmax + 1] + suffix[j + 1][None, 1 : cmax + 2]
            suffix[j] = np.min(cand, axis=1)

    tau_idx = []
    s = 0
    for j in range(k):
        cmax = m - 1 - (k - j)
        row = _cost_row(s, cum_n, cum_s, cum_q)[: cmax - s + 1]
        cand = row + suffix[j + 1][s + 1 : cmax + 2]
        best = cand.min()
        c = s + int(np.flatnonzero(cand == best)[0])
        tau_idx.append(c)
        s = c + 1

    tau = tuple(float(vals[c]) for c in tau_idx)
    alpha = optimal_levels(data, tau)
    model = StepModel(tau, alpha)
    edges = [0] + [c + 1 for c in tau_idx] + [m]
    counts = []
    sigma = []
    n = data.n
    for lo, hi in zip(edges[:-1], edges[1:]):
        rows = slice(int(cum_n[lo]), int(cum_n[hi]))
        seg_y = ys_sorted[rows]
        counts.append(int(seg_y.size))
        var = float(np.var(seg_y))
        sigma.append(math.sqrt(var / (seg_y.size / n)))
    return FitResult(
        tau=tau,
        alpha=alpha,
        sse=sse(data, model),
        segment_counts=tuple(counts),
        sigma_hat=tuple(sigma),
    )


@dataclass(frozen=True)
class RescaledProcess:
    """Local criterion landscape around a reference breakpoint vector:
    joint grid function over the rescaled shifts plus its per-coordinate
    sections through the origin."""

    joint: GridFunction
    sections: tuple
    window: tuple
    clipped: bool


def _default_windows(tau_ref, scale):
    k = len(tau_ref)
    shrink = 1.0 - 1e-9
    windows = []
    for j in range(k):
        lo = -math.inf if j == 0 else -scale * (tau_ref[j] - tau_ref[j - 1]) / 2.0 * shrink
        hi = math.inf if j == k - 1 else scale * (tau_ref[j + 1] - tau_ref[j]) / 2.0 * shrink
        windows.append((lo, hi))
    return windows


def rescaled_process(data, tau_ref, alpha_ref, scale, window=None):
    """Difference of squared losses when breakpoint j is shifted to
    tau_ref[j] + t[j]/scale at fixed levels, as a function of t.

    Within the returned window the shifted breakpoints stay ordered, so the
    loss difference decomposes into per-coordinate reclassification sums;
    the joint grid is their broadcast sum and equals zero at the origin
    exactly.  Requested windows are clipped to the region where the
    ordering cannot collapse.
    """
    tau_ref = tuple(float(v) for v in tau_ref)
    alpha_ref = tuple(float(v) for v in alpha_ref)
    k = len(tau_ref)
    if k == 0:
        raise ValueError("need at least one reference breakpoint")
    if k > 3:
        raise ValueError("joint grid supports at most three breakpoints")
    if len(alpha_ref) != k + 1:
        raise ValueError("need one more level than breakpoints")
    if any(tau_ref[i] >= tau_ref[i + 1] for i in range(k - 1)):
        raise CollapsedOrderError("reference breakpoints must be strictly increasing")
    if scale <= 0:
        raise ValueError("scale must be positive")

    defaults = _default_windows(tau_ref, scale)
    clipped = False
    windows = []
    if window is None:
        windows = defaults
    else:
        if len(window) != k:
            raise ValueError("window needs one (lo, hi) pair per breakpoint")
        for (lo, hi), (dlo, dhi) in zip(window, defaults):
            lo2, hi2 = max(float(lo), dlo), min(float(hi), dhi)
            if (lo2, hi2) != (float(lo), float(hi)):
                clipped = True
            if not lo2 < 0.0 < hi2:
                raise ValueError("each window must contain the origin")
            windows.append((lo2, hi2))

    sections = []
    for j in range(k):
        lo, hi = windows[j]
        shifts = scale * (data.x - tau_ref[j])
        gain = (data.y - alpha_ref[j]) ** 2 - (data.y - alpha_ref[j + 1]) ** 2
        sel = (shifts > lo) & (shifts <= hi)
        bps, inverse = np.unique(shifts[sel], return_inverse=True)
        weights = np.zeros(bps.size)
        np.add.at(weights, inverse, gain[sel])
        values = np.zeros(bps.size + 1)
        idx0 = int(np.searchsorted(bps, 0.0, side="right"))
        if idx0 < bps.size:
            values[idx0 + 1 :] = np.cumsum(weights[idx0:])
        if idx0 > 0:
            values[:idx0] = -np.cumsum(weights[:idx0][::-1])[::-1]
        sections.append(StepFunction1D(bps, values))

    shape = tuple(sec.values.size for sec in sections)
    cells = np.zeros(shape)
    for j, sec in enumerate(sections):
        reshape = [1] * k
        reshape[j] = shape[j]
        cells = cells + sec.values.reshape(reshape)
    joint = GridFunction(tuple(sec.breakpoints for sec in sections), cells)
    return RescaledProcess(
        joint=joint, sections=tuple(sections), window=tuple(windows), clipped=clipped
    )


@dataclass(frozen=True)
class XLaw:
    """Covariate distribution: uniform(lo, hi) or gaussian(mean, sd)."""

    family: str
    params: tuple

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.family == "uniform":
            if len(params) != 2 or params[0] >= params[1]:
                raise InvalidSpecError("uniform law needs lo < hi")
        elif self.family == "gaussian":
            if len(params) != 2 or params[1] <= 0:
                raise InvalidSpecError("gaussian law needs a positive sd")
        else:
            raise InvalidSpecError(f"unknown covariate family {self.family!r}")

    def sample(self, rng, n):
        if self.family == "uniform":
            lo, hi = self.params
            return lo + (hi - lo) * rng.random(n)
        mean, sd = self.params
        return mean + sd * rng.standard_normal(n)

    def density(self, x):
        if self.family == "uniform":
            lo, hi = self.params
            return 1.0 / (hi - lo) if lo < x < hi else 0.0
        mean, sd = self.params
        z = (x - mean) / sd
        return math.exp(-0.5 * z * z) / (sd * math.sqrt(2.0 * math.pi))

    def cdf(self, x):
        if x == math.inf:
            return 1.0
        if x == -math.inf:
            return 0.0
        if self.family == "uniform":
            lo, hi = self.params
            return min(1.0, max(0.0, (x - lo) / (hi - lo)))
        mean, sd = self.params
        return 0.5 * math.erfc(-(x - mean) / (sd * math.sqrt(2.0)))

    def to_token(self):
        return f"{self.family}({', '.join(repr(v) for v in self.params)})"


@dataclass(frozen=True)
class NoiseLaw:
    """Centered error distribution: gaussian(0, sd) or a centered
    two_point(v1, v2, p) with P(v1) = p."""

    family: str
    params: tuple

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.family == "gaussian":
            if len(params) != 2 or params[0] != 0.0 or params[1] < 0:
                raise InvalidSpecError("gaussian noise must be gaussian(0, sd>=0)")
        elif self.family == "two_point":
            if len(params) != 3 or not 0.0 < params[2] < 1.0:
                raise InvalidSpecError("two_point noise needs probability in (0, 1)")
            mean = params[2] * params[0] + (1.0 - params[2]) * params[1]
            scale = max(1.0, abs(params[0]), abs(params[1]))
            if abs(mean) > 1e-12 * scale:
                raise InvalidSpecError("two_point noise must be centered")
        else:
            raise InvalidSpecError(f"unknown noise family {self.family!r}")

    @property
    def sd(self):
        return math.sqrt(self.variance())

    def variance(self):
        if self.family == "gaussian":
            return self.params[1] ** 2
        v1, v2, p = self.params
        return p * v1 * v1 + (1.0 - p) * v2 * v2

    def sample(self, rng, n):
        if self.family == "gaussian":
            return self.params[1] * rng.standard_normal(n)
        v1, v2, p = self.params
        return np.where(rng.random(n) < p, v1, v2)

    def to_token(self):
        return f"{self.family}({', '.join(repr(v) for v in self.params)})"


@dataclass(frozen=True)
class RegressionModelSpec:
    """True regression function as piecewise polynomials between the jump
    locations, plus the covariate and noise laws and the target parameters
    of its best k-jump step approximation.

    The function must genuinely jump at every breakpoint and the covariate
    law must put mass around each one.
    """

    segments: tuple
    x_law: XLaw
    noise: NoiseLaw
    true_tau: tuple
    true_alpha: tuple

    def __post_init__(self):
        segments = tuple(tuple(float(c) for c in seg) for seg in self.segments)
        tau = tuple(float(v) for v in self.true_tau)
        alpha = tuple(float(v) for v in self.true_alpha)
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "true_tau", tau)
        object.__setattr__(self, "true_alpha", alpha)
        k = len(tau)
        if k < 1:
            raise InvalidSpecError("need at least one jump location")
        if len(segments) != k + 1 or len(alpha) != k + 1:
            raise InvalidSpecError("need k+1 segments and k+1 levels for k jumps")
        if any(tau[i] >= tau[i + 1] for i in range(k - 1)):
            raise InvalidSpecError("jump locations must be strictly increasing")
        for j in range(k):
            left = float(npoly.polyval(tau[j], segments[j]))
            right = float(npoly.polyval(tau[j], segments[j + 1]))
            if left == right:
                raise InvalidSpecError(f"regression function must jump at location {j + 1}")
            if self.x_law.density(tau[j]) <= 0.0:
                raise InvalidSpecError(f"covariate density vanishes at location {j + 1}")

    @property
    def k(self):
        return len(self.true_tau)

    def regression_values(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(np.asarray(self.true_tau), x, side="left")
        out = np.empty_like(x)
        for j, seg in enumerate(self.segments):
            sel = idx == j
            if np.any(sel):
                out[sel] = npoly.polyval(x[sel], seg)
        return out

    def side_values(self, j):
        """(limit from the left, limit from the right) at jump j (1-based)."""
        tau = self.true_tau[j - 1]
        left = float(npoly.polyval(tau, self.segments[j - 1]))
        right = float(npoly.polyval(tau, self.segments[j]))
        return left, right


def pure_step_model(tau, alpha, x_law, noise):
    """Model whose regression function is itself the k-jump step function
    with the given breakpoints and levels."""
    return RegressionModelSpec(
        segments=tuple((float(a),) for a in alpha),
        x_law=x_law,
        noise=noise,
        true_tau=tuple(tau),
        true_alpha=tuple(alpha),
    )


def synthesize(model, n, seed):
    """Draw n observations: covariates first, then noise, so the stream
    layout is fixed for a given seed."""
    if n < 2:
        raise ValueError("need n >= 2")
    rng = np.random.default_rng(int(seed) & ((1 << 64) - 1))
    x = model.x_law.sample(rng, n)
    eps = model.noise.sample(rng, n)
    y = model.regression_values(x) + eps
    return Dataset(x, y)


def _derived_jump_laws(model, j):
    jj = j - 1
    a_lo = model.true_alpha[jj]
    a_hi = model.true_alpha[jj + 1]
    m_minus, m_plus = model.side_values(j)
    delta_right = (m_plus - a_lo) ** 2 - (m_plus - a_hi) ** 2
    delta_left = (m_minus - a_hi) ** 2 - (m_minus - a_lo) ** 2
    if delta_right <= 0 or delta_left <= 0:
        raise NonpositiveJumpMeanError(
            f"induced jump means at location {j} are not strictly positive"
        )
    gap = a_hi - a_lo
    noise = model.noise
    if noise.family == "gaussian":
        sd = 2.0 * abs(gap) * noise.params[1]
        if sd == 0.0:
            return JumpLaw("point", (delta_right,)), JumpLaw("point", (delta_left,))
        # the squared terms of the noise cancel in the loss difference, so
        # gaussian noise induces exactly gaussian jumps
        return (
            JumpLaw("gaussian", (delta_right, sd)),
            JumpLaw("gaussian", (delta_left, sd)),
        )
    v1, v2, p = noise.params
    right = JumpLaw("two_point", (delta_right + 2 * v1 * gap, delta_right + 2 * v2 * gap, p))
    left = JumpLaw("two_point", (delta_left - 2 * v1 * gap, delta_left - 2 * v2 * gap, p))
    return right, left


def derive_limit_spec(model, j, window_initial=None, window_growth=2.0, max_window=None):
    """Plug-in limit process for the rescaled breakpoint deviation at jump
    j (1-based): arrival rate equal to the covariate density at the jump,
    jump laws equal to the loss increments of reclassifying one observation
    drawn from the matching side."""
    if not 1 <= j <= model.k:
        raise ValueError("jump index out of range")
    rate = model.x_law.density(model.true_tau[j - 1])
    if rate <= 0:
        raise InvalidSpecError("covariate density must be positive at the jump")
    right, left = _derived_jump_laws(model, j)
    ratio_sq = 0.0
    for law in (right, left):
        if law.family == "gaussian":
            ratio_sq = max(ratio_sq, (law.params[1] / law.params[0]) ** 2)
    if max_window is None:
        max_window = max(64.0, 16.0 * ratio_sq) / rate
    if window_initial is None:
        window_initial = min(8.0 / rate, max_window)
    return CompoundPoissonSpec(
        rate_right=rate,
        rate_left=rate,
        jump_right=right,
        jump_left=left,
        window_initial=window_initial,
        window_growth=window_growth,
        max_window=max_window,
    )


def dataset_from_csv(text):
    """Parse `x,y` CSV with a header row; errors carry the offending line."""
    lines = text.splitlines()
    if not lines or lines[0].strip().lower().replace(" ", "") != "x,y":
        raise DatasetFormatError("line 1: expected header 'x,y'", line=1)
    xs = []
    ys = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DatasetFormatError(f"line {lineno}: expected two comma-separated fields", line=lineno)
        try:
            xs.append(float(parts[0]))
            ys.append(float(parts[1]))
        except ValueError as exc:
            raise DatasetFormatError(f"line {lineno}: {exc}", line=lineno) from exc
    if len(xs) < 2:
        raise DatasetFormatError("need at least two data rows", line=len(lines))
    return Dataset(xs, ys)


def dataset_to_csv(data):
    lines = ["x,y"]
    for xv, yv in zip(data.x, data.y):
        lines.append(f"{float(xv)!r},{float(yv)!r}")
    return "\n".join(lines) + "\n"
