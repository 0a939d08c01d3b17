"""Monte Carlo harnesses: hitting/containment probability bounds for the
rescaled breakpoint deviations against their limit processes, tail tables,
joint-versus-product independence checks, confidence-rectangle coverage,
and the rescaled-argmin membership report.

Every harness is a pure function of (config, master seed); replication
streams are indexed so worker count never changes a number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from stepargmin.argmin import (
    Box,
    BoxUnion,
    OpenBox,
    OpenBoxUnion,
    argmin_set,
    contained_in_open,
    hits,
    point_box,
)
from stepargmin.cpoisson import (
    OutOfDomainError,
    _draw_accepted,
    choose_interval_bounds,
    inverse_normal_cdf,
    normal_cdf,
    sample_extreme_minimizers,
)
from stepargmin.rng import child_seed, run_chunks
from stepargmin.stepfit import (
    NoiseLaw,
    RegressionModelSpec,
    XLaw,
    derive_limit_spec,
    fit_step,
    rescaled_process,
    synthesize,
)

_TAG_DATA = 1
_TAG_LIMIT = 2
_TAG_COVER = 3
_TAG_BOOT = 4
_TAG_MEMBER = 5


class ConfigError(ValueError):
    pass


class BadBoundsError(ValueError):
    pass


def _fmt(v):
    return repr(float(v))


def gamma_of(rho, k):
    """Per-factor confidence level (1 - rho)^(1/(2k+1)) splitting a joint
    level across k breakpoint intervals and k+1 level intervals."""
    if not 0.0 < rho < 1.0:
        raise OutOfDomainError("rho must lie in (0, 1)")
    k = int(k)
    if k < 1:
        raise OutOfDomainError("k must be at least 1")
    return (1.0 - rho) ** (1.0 / (2 * k + 1))


@dataclass(frozen=True)
class RectInterval:
    lo: float
    hi: float
    closed: bool

    def contains(self, v):
        if self.closed:
            return self.lo <= v <= self.hi
        return self.lo < v < self.hi

    @property
    def width(self):
        return self.hi - self.lo


def build_rectangle(fit, n, bounds_tau, bounds_alpha):
    """Confidence rectangle: open intervals (tau_j - b/n, tau_j - a/n) per
    breakpoint, closed intervals [alpha_i - v/sqrt(n), alpha_i - u/sqrt(n)]
    per level."""
    k = len(fit.tau)
    if len(bounds_tau) != k or len(bounds_alpha) != k + 1:
        raise BadBoundsError("bounds must match the parameter counts")
    out = []
    for j, (a, b) in enumerate(bounds_tau):
        if not a < b:
            raise BadBoundsError(f"breakpoint bounds {j + 1}: need a < b")
        out.append(RectInterval(fit.tau[j] - b / n, fit.tau[j] - a / n, closed=False))
    root = math.sqrt(n)
    for i, (u, v) in enumerate(bounds_alpha):
        if not u < v:
            raise BadBoundsError(f"level bounds {i + 1}: need u < v")
        out.append(RectInterval(fit.alpha[i] - v / root, fit.alpha[i] - u / root, closed=True))
    return out


@dataclass(frozen=True)
class ClosedSetTuple:
    """One row of the closed-set menu: a closed union per breakpoint and an
    optional box for the scaled level deviations (None means everything)."""

    name: str
    fsets: tuple
    aux: tuple = None


@dataclass(frozen=True)
class OpenSetTuple:
    name: str
    gsets: tuple
    aux: tuple = None


@dataclass(frozen=True)
class VerificationConfig:
    model: RegressionModelSpec
    k: int
    n_grid: tuple
    replications_data: int
    replications_limit: int
    rho: float
    closed_sets: tuple
    open_sets: tuple
    master_seed: int
    mc_slack: float = 2.0
    rhs_mode: str = "derived"
    bootstrap_n: int = 0
    tail_grid: tuple = (0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
    tail_threshold: float = 0.05
    coverage_n: int = 500
    coverage_replications: int = 1000
    coverage_tolerance: float = 0.03

    def __post_init__(self):
        if self.k != self.model.k:
            raise ConfigError("k must match the model")
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or any(a >= b for a, b in zip(grid, grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        object.__setattr__(self, "n_grid", grid)
        if self.replications_data < 1000 or self.replications_limit < 1000:
            raise ConfigError("replication counts must be at least 1000")
        if not 0.0 < self.rho < 1.0:
            raise ConfigError("rho must lie in (0, 1)")
        if self.rhs_mode not in ("derived", "empirical-bootstrap"):
            raise ConfigError("rhs_mode must be 'derived' or 'empirical-bootstrap'")
        if self.rhs_mode == "empirical-bootstrap" and self.bootstrap_n <= max(self.n_grid):
            raise ConfigError("bootstrap_n must exceed the largest n in n_grid")
        for st in self.closed_sets:
            if len(st.fsets) != self.k:
                raise ConfigError(f"closed tuple {st.name!r} needs {self.k} sets")
            if st.aux is not None and len(st.aux) != self.k + 1:
                raise ConfigError(f"closed tuple {st.name!r} aux needs {self.k + 1} intervals")
        for st in self.open_sets:
            if len(st.gsets) != self.k:
                raise ConfigError(f"open tuple {st.name!r} needs {self.k} sets")
            if st.aux is not None and len(st.aux) != self.k + 1:
                raise ConfigError(f"open tuple {st.name!r} aux needs {self.k + 1} intervals")


def _fit_worker(args, lo, hi):
    model, k, n, master, tag = args
    out = []
    for rep in range(lo, hi):
        data = synthesize(model, n, child_seed(master, tag, n, rep))
        fit = fit_step(data, k)
        out.append((fit.tau, fit.alpha, fit.sigma_hat))
    return out


def _fit_arrays(model, k, n, master, tag, reps, workers):
    rows = run_chunks(_fit_worker, (model, k, n, master, tag), reps, workers)
    tau_true = np.asarray(model.true_tau)
    alpha_true = np.asarray(model.true_alpha)
    taus = np.array([row[0] for row in rows])
    alphas = np.array([row[1] for row in rows])
    sigmas = np.array([row[2] for row in rows])
    xi = n * (taus - tau_true[None, :])
    aux = math.sqrt(n) * (alphas - alpha_true[None, :])
    return xi, aux, sigmas


def _limit_worker(args, lo, hi):
    spec, seed, closed_menu, open_menu = args
    out = []
    for rep in range(lo, hi):
        a, _ = _draw_accepted(spec, seed, rep)
        flags = [hits(a, f) for f in closed_menu]
        flags.extend(contained_in_open(a, g) for g in open_menu)
        out.append(flags)
    return out


def _points_in_closed(values, union):
    out = np.zeros(values.shape, dtype=bool)
    for box in union.boxes:
        out |= (values >= box.lo[0]) & (values <= box.hi[0])
    return out


def _points_in_open(values, union):
    out = np.zeros(values.shape, dtype=bool)
    for box in union.boxes:
        out |= (values > box.lo[0]) & (values < box.hi[0])
    return out


def _aux_flags(aux, box):
    if box is None:
        return np.ones(aux.shape[0], dtype=bool)
    flags = np.ones(aux.shape[0], dtype=bool)
    for i, (lo, hi) in enumerate(box):
        flags &= (aux[:, i] >= lo) & (aux[:, i] <= hi)
    return flags


def _binom_se(p, n):
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def _product_with_se(means, ses):
    prod = 1.0
    for mval in means:
        prod *= mval
    var = 0.0
    for j, (mval, sval) in enumerate(zip(means, ses)):
        rest = 1.0
        for l, other in enumerate(means):
            if l != j:
                rest *= other
        var += (sval * rest) ** 2
    return prod, math.sqrt(var)


def alpha_limit_sigmas(model):
    """Asymptotic scales of the rescaled level estimates when the true
    regression function is constant on each segment; None when a closed
    form is not available and a plug-in must be used instead."""
    if any(len(seg) > 1 for seg in model.segments):
        return None
    noise_var = model.noise.variance()
    edges = (-math.inf,) + model.true_tau + (math.inf,)
    sigmas = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mass = model.x_law.cdf(hi) - model.x_law.cdf(lo)
        if mass <= 0:
            return None
        sigmas.append(math.sqrt(noise_var / mass))
    return tuple(sigmas)


def _aux_box_prob(box, sigmas):
    if box is None:
        return 1.0
    prob = 1.0
    for (lo, hi), sd in zip(box, sigmas):
        if sd == 0.0:
            prob *= 1.0 if lo <= 0.0 <= hi else 0.0
            continue
        upper = 1.0 if hi == math.inf else normal_cdf(hi / sd)
        lower = 0.0 if lo == -math.inf else normal_cdf(lo / sd)
        prob *= upper - lower
    return prob


@dataclass(frozen=True)
class InequalityRow:
    n: int
    kind: str
    name: str
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    passed: object = None


@dataclass(frozen=True)
class InequalityReport:
    rows: tuple
    mc_slack: float
    slack_violations: int
    passed: bool

    def to_csv(self):
        lines = ["n,kind,name,lhs,lhs_se,rhs,rhs_se,verdict"]
        for r in self.rows:
            verdict = "" if r.passed is None else ("pass" if r.passed else "fail")
            lines.append(
                f"{r.n},{r.kind},{r.name},{_fmt(r.lhs)},{_fmt(r.lhs_se)},"
                f"{_fmt(r.rhs)},{_fmt(r.rhs_se)},{verdict}"
            )
        return "\n".join(lines) + "\n"


def _limit_functionals(config, workers):
    """Per breakpoint j: estimates of the hit probability for each closed
    tuple's j-th set and of the containment probability for each open
    tuple's j-th set, from one shared replication stream."""
    reps = config.replications_limit
    out_mu = []
    out_nu = []
    for j in range(1, config.k + 1):
        spec = derive_limit_spec(config.model, j)
        closed_menu = tuple(st.fsets[j - 1] for st in config.closed_sets)
        open_menu = tuple(st.gsets[j - 1] for st in config.open_sets)
        seed = child_seed(config.master_seed, _TAG_LIMIT, j)
        flags = np.array(
            run_chunks(_limit_worker, (spec, seed, closed_menu, open_menu), reps, workers),
            dtype=bool,
        ).reshape(reps, len(closed_menu) + len(open_menu))
        mu = [
            (float(np.mean(flags[:, m])), _binom_se(float(np.mean(flags[:, m])), reps))
            for m in range(len(closed_menu))
        ]
        nu = [
            (
                float(np.mean(flags[:, len(closed_menu) + m])),
                _binom_se(float(np.mean(flags[:, len(closed_menu) + m])), reps),
            )
            for m in range(len(open_menu))
        ]
        out_mu.append(mu)
        out_nu.append(nu)
    return out_mu, out_nu


def _bootstrap_functionals(config, workers):
    """Alternative right-hand sides from the empirical law of the rescaled
    deviations at a much larger sample size."""
    reps = config.replications_limit
    xi, _, _ = _fit_arrays(
        config.model, config.k, config.bootstrap_n, config.master_seed, _TAG_BOOT, reps, workers
    )
    out_mu = []
    out_nu = []
    for j in range(config.k):
        mu = []
        for st in config.closed_sets:
            p = float(np.mean(_points_in_closed(xi[:, j], st.fsets[j])))
            mu.append((p, _binom_se(p, reps)))
        nu = []
        for st in config.open_sets:
            p = float(np.mean(_points_in_open(xi[:, j], st.gsets[j])))
            nu.append((p, _binom_se(p, reps)))
        out_mu.append(mu)
        out_nu.append(nu)
    return out_mu, out_nu


def _sigmas_for(config, fit_sigmas_at_largest):
    exact = alpha_limit_sigmas(config.model)
    if exact is not None:
        return exact
    return tuple(float(v) for v in np.mean(fit_sigmas_at_largest, axis=0))


def verify_limit_bounds(config, workers=1):
    """Empirical check that hitting/containment functionals of the limit
    argmin sets bound the deviation probabilities of the fitted breakpoints:
    closed-set rows must not exceed the capacity side, open-set rows must
    not fall below the containment side, judged at the largest sample size
    with a standard-error slack."""
    reps = config.replications_data
    fits = {
        n: _fit_arrays(config.model, config.k, n, config.master_seed, _TAG_DATA, reps, workers)
        for n in config.n_grid
    }
    n_max = max(config.n_grid)
    sigmas = _sigmas_for(config, fits[n_max][2])
    if config.rhs_mode == "derived":
        mu, nu = _limit_functionals(config, workers)
    else:
        mu, nu = _bootstrap_functionals(config, workers)

    rows = []
    violations = 0
    for n in config.n_grid:
        xi, aux, _ = fits[n]
        for m, st in enumerate(config.closed_sets):
            flags = _aux_flags(aux, st.aux)
            for j in range(config.k):
                flags &= _points_in_closed(xi[:, j], st.fsets[j])
            lhs = float(np.mean(flags))
            lhs_se = _binom_se(lhs, reps)
            prod, prod_se = _product_with_se(
                [mu[j][m][0] for j in range(config.k)], [mu[j][m][1] for j in range(config.k)]
            )
            p_aux = _aux_box_prob(st.aux, sigmas)
            rhs, rhs_se = prod * p_aux, prod_se * p_aux
            passed = None
            if n == n_max:
                comb = math.sqrt(lhs_se**2 + rhs_se**2)
                passed = lhs <= rhs + config.mc_slack * comb
                violations += 0 if passed else 1
            rows.append(InequalityRow(n, "closed", st.name, lhs, lhs_se, rhs, rhs_se, passed))
        for m, st in enumerate(config.open_sets):
            flags = _aux_flags(aux, st.aux)
            for j in range(config.k):
                flags &= _points_in_open(xi[:, j], st.gsets[j])
            lhs = float(np.mean(flags))
            lhs_se = _binom_se(lhs, reps)
            prod, prod_se = _product_with_se(
                [nu[j][m][0] for j in range(config.k)], [nu[j][m][1] for j in range(config.k)]
            )
            p_aux = _aux_box_prob(st.aux, sigmas)
            rhs, rhs_se = prod * p_aux, prod_se * p_aux
            passed = None
            if n == n_max:
                comb = math.sqrt(lhs_se**2 + rhs_se**2)
                passed = lhs >= rhs - config.mc_slack * comb
                violations += 0 if passed else 1
            rows.append(InequalityRow(n, "open", st.name, lhs, lhs_se, rhs, rhs_se, passed))
    return InequalityReport(
        rows=tuple(rows),
        mc_slack=config.mc_slack,
        slack_violations=violations,
        passed=violations == 0,
    )


@dataclass(frozen=True)
class TailTable:
    rows: tuple
    threshold: float
    verdicts: tuple

    @property
    def passed(self):
        return all(v[2] for v in self.verdicts)

    def to_csv(self):
        lines = ["n,a,tail_prob"]
        for n, a, p in self.rows:
            lines.append(f"{n},{_fmt(a)},{_fmt(p)}")
        return "\n".join(lines) + "\n"


def tail_probability_table(config, workers=1):
    """Empirical survival probabilities of the sup-norm of the rescaled
    breakpoint deviations over the configured threshold grid."""
    reps = config.replications_data
    rows = []
    verdicts = []
    for n in config.n_grid:
        xi, _, _ = _fit_arrays(
            config.model, config.k, n, config.master_seed, _TAG_DATA, reps, workers
        )
        sup = np.max(np.abs(xi), axis=1)
        for a in config.tail_grid:
            rows.append((n, float(a), float(np.mean(sup > a))))
        largest = float(np.mean(sup > config.tail_grid[-1]))
        verdicts.append((n, largest, largest <= config.tail_threshold))
    return TailTable(rows=tuple(rows), threshold=config.tail_threshold, verdicts=tuple(verdicts))


@dataclass(frozen=True)
class ProductFormRow:
    name: str
    kind: str
    joint: float
    joint_se: float
    product: float
    product_se: float

    @property
    def discrepancy(self):
        return abs(self.joint - self.product)


@dataclass(frozen=True)
class ProductFormTable:
    n: int
    rows: tuple

    @property
    def max_discrepancy(self):
        return max((r.discrepancy for r in self.rows), default=0.0)

    def to_csv(self):
        lines = ["name,kind,joint,joint_se,product,product_se,discrepancy"]
        for r in self.rows:
            lines.append(
                f"{r.name},{r.kind},{_fmt(r.joint)},{_fmt(r.joint_se)},"
                f"{_fmt(r.product)},{_fmt(r.product_se)},{_fmt(r.discrepancy)}"
            )
        return "\n".join(lines) + "\n"


def product_form_check(config, workers=1):
    """Joint probability versus the product of its marginals at the largest
    sample size, over the configured set menu; the same replication set
    feeds both sides."""
    if config.k < 2:
        raise ConfigError("product-form check needs k >= 2")
    reps = config.replications_data
    n = max(config.n_grid)
    xi, aux, _ = _fit_arrays(
        config.model, config.k, n, config.master_seed, _TAG_DATA, reps, workers
    )
    rows = []
    for st in config.closed_sets:
        margins = [_points_in_closed(xi[:, j], st.fsets[j]) for j in range(config.k)]
        margins.append(_aux_flags(aux, st.aux))
        rows.append(_product_row(st.name, "closed", margins, reps))
    for st in config.open_sets:
        margins = [_points_in_open(xi[:, j], st.gsets[j]) for j in range(config.k)]
        margins.append(_aux_flags(aux, st.aux))
        rows.append(_product_row(st.name, "open", margins, reps))
    return ProductFormTable(n=n, rows=tuple(rows))


def _product_row(name, kind, margins, reps):
    joint_flags = margins[0].copy()
    for m in margins[1:]:
        joint_flags &= m
    joint = float(np.mean(joint_flags))
    means = [float(np.mean(m)) for m in margins]
    ses = [_binom_se(p, reps) for p in means]
    product, product_se = _product_with_se(means, ses)
    return ProductFormRow(name, kind, joint, _binom_se(joint, reps), product, product_se)


@dataclass(frozen=True)
class CoverageReport:
    coverage: float
    target: float
    replications: int
    mean_widths: tuple
    covered: tuple
    bounds_tau: tuple
    gamma: float

    def passed(self, tolerance):
        return self.coverage >= self.target - tolerance

    def rows_csv(self):
        lines = ["rep,covered"]
        for rep, c in enumerate(self.covered):
            lines.append(f"{rep},{int(c)}")
        return "\n".join(lines) + "\n"

    def summary_text(self):
        lines = [
            f"coverage = {_fmt(self.coverage)}",
            f"target = {_fmt(self.target)}",
            f"replications = {self.replications}",
            f"gamma = {_fmt(self.gamma)}",
            f"mean_widths = {', '.join(_fmt(w) for w in self.mean_widths)}",
        ]
        return "\n".join(lines) + "\n"


def _coverage_worker(args, lo, hi):
    model, k, n, master, bounds_tau, z_lo, z_hi = args
    out = []
    for rep in range(lo, hi):
        data = synthesize(model, n, child_seed(master, _TAG_COVER, rep))
        fit = fit_step(data, k)
        bounds_alpha = []
        for i in range(k + 1):
            u = fit.sigma_hat[i] * z_lo
            v = fit.sigma_hat[i] * z_hi
            if u == v:
                # degenerate plug-in scale: widen by a relative nudge so the
                # rectangle stays a valid interval
                kappa = 1e-9 * max(1.0, abs(fit.alpha[i]))
                u, v = u - kappa, v + kappa
            bounds_alpha.append((u, v))
        rect = build_rectangle(fit, n, bounds_tau, bounds_alpha)
        truth = tuple(model.true_tau) + tuple(model.true_alpha)
        covered = all(iv.contains(t) for iv, t in zip(rect, truth))
        widths = tuple(iv.width for iv in rect)
        out.append((covered, widths))
    return out


def coverage_experiment(config, workers=1):
    """Coverage of the confidence rectangle built from limit-process
    extreme-minimizer bounds and plug-in normal quantiles."""
    k = config.k
    gamma = gamma_of(config.rho, k)
    z_lo = inverse_normal_cdf((1.0 - gamma) / 2.0)
    z_hi = inverse_normal_cdf((gamma + 1.0) / 2.0)
    bounds_tau = []
    for j in range(1, k + 1):
        spec = derive_limit_spec(config.model, j)
        samples = sample_extreme_minimizers(
            spec, config.replications_limit, child_seed(config.master_seed, _TAG_LIMIT, j), workers
        )
        bounds_tau.append(choose_interval_bounds(samples, gamma))
    args = (config.model, k, config.coverage_n, config.master_seed, tuple(bounds_tau), z_lo, z_hi)
    rows = run_chunks(_coverage_worker, args, config.coverage_replications, workers)
    covered = tuple(bool(r[0]) for r in rows)
    widths = np.array([r[1] for r in rows])
    return CoverageReport(
        coverage=float(np.mean(covered)),
        target=1.0 - config.rho,
        replications=config.coverage_replications,
        mean_widths=tuple(float(w) for w in np.mean(widths, axis=0)),
        covered=covered,
        bounds_tau=tuple(bounds_tau),
        gamma=gamma,
    )


@dataclass(frozen=True)
class MembershipReport:
    n: int
    replications: int
    fraction_inside: float
    rows: tuple

    @property
    def all_inside(self):
        return self.fraction_inside == 1.0

    def to_csv(self):
        lines = ["rep,inside," + ",".join(f"t{j + 1}" for j in range(len(self.rows[0][2])))]
        for rep, inside, point in self.rows:
            lines.append(f"{rep},{int(inside)}," + ",".join(_fmt(v) for v in point))
        return "\n".join(lines) + "\n"


def _membership_worker(args, lo, hi):
    model, k, n, master = args
    out = []
    for rep in range(lo, hi):
        data = synthesize(model, n, child_seed(master, _TAG_MEMBER, rep))
        fit = fit_step(data, k)
        local = rescaled_process(data, model.true_tau, fit.alpha, n)
        point = tuple(n * (fit.tau[j] - model.true_tau[j]) for j in range(k))
        in_window = all(lo_w < p < hi_w for (lo_w, hi_w), p in zip(local.window, point))
        inside = in_window and hits(argmin_set(local.joint), point_box(point))
        out.append((rep, bool(inside), point))
    return out


def membership_report(model, k, n, replications, master_seed, workers=1):
    """Checks per replication that the rescaled deviation of the fitted
    breakpoints lies in the argmin set of the local criterion landscape
    built at the true breakpoints with the fitted levels."""
    rows = run_chunks(_membership_worker, (model, k, n, master_seed), replications, workers)
    inside = np.array([r[1] for r in rows], dtype=bool)
    return MembershipReport(
        n=n,
        replications=replications,
        fraction_inside=float(np.mean(inside)),
        rows=tuple(rows),
    )


# --- configuration files -------------------------------------------------
#
# Structured text, one `key = value` per line, '#' comments.  Set menus:
#   set closed <name> = <F_1> | ... | <F_k> [@ <B_1> | ... | <B_{k+1}>]
#   set open   <name> = <G_1> | ... | <G_k> [@ ...]
# where each F is closed intervals `[lo,hi]` joined by ';', each G open
# intervals `(lo,hi)` joined by ';', and each B a closed interval or the
# word `full`.

_REQUIRED_KEYS = (
    "master_seed",
    "k",
    "n_grid",
    "replications_data",
    "replications_limit",
    "rho",
    "model.tau",
    "model.alpha",
    "model.x_law",
    "model.noise",
)


def _parse_closed_interval(token):
    token = token.strip()
    if not (token.startswith("[") and token.endswith("]")):
        raise ConfigError(f"expected closed interval '[lo,hi]', got {token!r}")
    lo_s, hi_s = token[1:-1].split(",")
    return float(lo_s), float(hi_s)


def _parse_open_interval(token):
    token = token.strip()
    if not (token.startswith("(") and token.endswith(")")):
        raise ConfigError(f"expected open interval '(lo,hi)', got {token!r}")
    lo_s, hi_s = token[1:-1].split(",")
    return float(lo_s), float(hi_s)


def parse_closed_set_1d(text):
    boxes = []
    for token in text.split(";"):
        if token.strip():
            lo, hi = _parse_closed_interval(token)
            boxes.append(Box((lo,), (hi,)))
    return BoxUnion(1, tuple(boxes))


def parse_open_set_1d(text):
    boxes = []
    for token in text.split(";"):
        if token.strip():
            lo, hi = _parse_open_interval(token)
            boxes.append(OpenBox((lo,), (hi,)))
    return OpenBoxUnion(1, tuple(boxes))


def _parse_aux(text, k):
    text = text.strip()
    if text == "full":
        return None
    parts = [p for p in text.split("|") if p.strip()]
    if len(parts) != k + 1:
        raise ConfigError(f"aux box needs {k + 1} intervals or 'full'")
    return tuple(_parse_closed_interval(p) for p in parts)


def _parse_set_line(kind, name, body, k):
    if "@" in body:
        sets_part, aux_part = body.split("@", 1)
        aux = _parse_aux(aux_part, k)
    else:
        sets_part, aux = body, None
    parts = [p for p in sets_part.split("|") if p.strip()]
    if len(parts) != k:
        raise ConfigError(f"set {name!r} needs {k} component sets, got {len(parts)}")
    if kind == "closed":
        return ClosedSetTuple(name, tuple(parse_closed_set_1d(p) for p in parts), aux)
    return OpenSetTuple(name, tuple(parse_open_set_1d(p) for p in parts), aux)


def _parse_floats_csv(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _parse_law_token(token, cls):
    token = token.strip()
    if "(" not in token or not token.endswith(")"):
        raise ConfigError(f"bad law token {token!r}")
    family, rest = token.split("(", 1)
    params = _parse_floats_csv(rest[:-1])
    return cls(family.strip(), params)


def _parse_segments(token):
    segs = []
    for part in token.split(";"):
        part = part.strip()
        if not part:
            continue
        if not (part.startswith("poly(") and part.endswith(")")):
            raise ConfigError(f"segment must look like 'poly(c0, c1, ...)', got {part!r}")
        segs.append(_parse_floats_csv(part[len("poly(") : -1]))
    return tuple(segs)


def parse_verification_config(text):
    entries = {}
    set_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("set "):
            rest = line[4:].strip()
            head, _, body = rest.partition("=")
            head_parts = head.split()
            if len(head_parts) != 2 or head_parts[0] not in ("closed", "open") or not body:
                raise ConfigError(f"line {lineno}: bad set line")
            set_lines.append((head_parts[0], head_parts[1], body.strip()))
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        entries[key] = value

    for key in _REQUIRED_KEYS:
        if key not in entries:
            raise ConfigError(f"missing required key {key!r}")

    k = int(entries["k"])
    tau = _parse_floats_csv(entries["model.tau"])
    alpha = _parse_floats_csv(entries["model.alpha"])
    x_law = _parse_law_token(entries["model.x_law"], XLaw)
    noise = _parse_law_token(entries["model.noise"], NoiseLaw)
    if "model.segments" in entries:
        segments = _parse_segments(entries["model.segments"])
    else:
        segments = tuple((a,) for a in alpha)
    model = RegressionModelSpec(
        segments=segments, x_law=x_law, noise=noise, true_tau=tau, true_alpha=alpha
    )

    closed_sets = []
    open_sets = []
    for kind, name, body in set_lines:
        parsed = _parse_set_line(kind, name, body, k)
        if kind == "closed":
            closed_sets.append(parsed)
        else:
            open_sets.append(parsed)

    kwargs = dict(
        model=model,
        k=k,
        n_grid=tuple(int(v) for v in _parse_floats_csv(entries["n_grid"])),
        replications_data=int(entries["replications_data"]),
        replications_limit=int(entries["replications_limit"]),
        rho=float(entries["rho"]),
        closed_sets=tuple(closed_sets),
        open_sets=tuple(open_sets),
        master_seed=int(entries["master_seed"]),
    )
    if "mc_slack" in entries:
        kwargs["mc_slack"] = float(entries["mc_slack"])
    if "rhs_mode" in entries:
        kwargs["rhs_mode"] = entries["rhs_mode"]
    if "bootstrap_n" in entries:
        kwargs["bootstrap_n"] = int(entries["bootstrap_n"])
    if "tail_grid" in entries:
        kwargs["tail_grid"] = _parse_floats_csv(entries["tail_grid"])
    if "tail_threshold" in entries:
        kwargs["tail_threshold"] = float(entries["tail_threshold"])
    if "coverage_n" in entries:
        kwargs["coverage_n"] = int(entries["coverage_n"])
    if "coverage_replications" in entries:
        kwargs["coverage_replications"] = int(entries["coverage_replications"])
    if "coverage_tolerance" in entries:
        kwargs["coverage_tolerance"] = float(entries["coverage_tolerance"])
    return VerificationConfig(**kwargs)
