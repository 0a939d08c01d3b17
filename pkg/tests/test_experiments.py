import dataclasses
import math
from decimal import Decimal, getcontext

import pytest

from stepargmin.argmin import INF, Box, BoxUnion, OpenBox, OpenBoxUnion
from stepargmin.cpoisson import OutOfDomainError
from stepargmin.experiments import (
    BadBoundsError,
    ClosedSetTuple,
    ConfigError,
    OpenSetTuple,
    VerificationConfig,
    alpha_limit_sigmas,
    build_rectangle,
    coverage_experiment,
    gamma_of,
    membership_report,
    parse_verification_config,
    product_form_check,
    tail_probability_table,
    verify_limit_bounds,
)
from stepargmin.stepfit import Dataset, NoiseLaw, XLaw, fit_step, pure_step_model

UNIFORM01 = XLaw("uniform", (0.0, 1.0))


def closed_1d(lo, hi):
    return BoxUnion(1, (Box((lo,), (hi,)),))


def open_1d(lo, hi):
    return OpenBoxUnion(1, (OpenBox((lo,), (hi,)),))


def k1_config(**overrides):
    model = pure_step_model((0.5,), (0.0, 1.0), UNIFORM01, NoiseLaw("gaussian", (0.0, 0.25)))
    kwargs = dict(
        model=model,
        k=1,
        n_grid=(50, 100),
        replications_data=1000,
        replications_limit=1000,
        rho=0.1,
        closed_sets=(
            ClosedSetTuple("all", (closed_1d(-INF, INF),), None),
            ClosedSetTuple("lower0", (closed_1d(-INF, 0.0),), None),
        ),
        open_sets=(
            OpenSetTuple("all", (open_1d(-INF, INF),), None),
            OpenSetTuple("win6", (open_1d(-6.0, 6.0),), None),
        ),
        master_seed=2029,
        coverage_n=100,
        coverage_replications=1000,
    )
    kwargs.update(overrides)
    return VerificationConfig(**kwargs)


class TestGammaOf:
    def test_reference_values(self):
        getcontext().prec = 50
        ref1 = Decimal(1.0 - 0.05).ln() / 3
        assert abs(gamma_of(0.05, 1) - float(ref1.exp())) <= 1e-12
        ref2 = Decimal(1.0 - 0.1).ln() / 5
        assert abs(gamma_of(0.1, 2) - float(ref2.exp())) <= 1e-12

    def test_limit_toward_one(self):
        assert 1.0 - 1e-9 < gamma_of(1e-9, 1) < 1.0

    def test_domain(self):
        with pytest.raises(OutOfDomainError):
            gamma_of(0.0, 1)
        with pytest.raises(OutOfDomainError):
            gamma_of(1.0, 1)
        with pytest.raises(OutOfDomainError):
            gamma_of(0.5, 0)


class TestBuildRectangle:
    def _fit(self):
        fit = fit_step(Dataset([1, 2, 3, 4], [0, 0, 1, 1]), 1)
        return dataclasses.replace(fit, tau=(0.5,), alpha=(1.0, 1.0))

    def test_breakpoint_interval(self):
        rect = build_rectangle(self._fit(), 100, [(-2.0, 3.0)], [(-1.0, 1.0), (-1.0, 1.0)])
        assert (rect[0].lo, rect[0].hi, rect[0].closed) == (0.47, 0.52, False)

    def test_level_interval(self):
        rect = build_rectangle(self._fit(), 100, [(-2.0, 3.0)], [(-1.96, 1.96), (-1.96, 1.96)])
        assert rect[1].closed
        assert rect[1].lo == pytest.approx(0.804)
        assert rect[1].hi == pytest.approx(1.196)

    def test_degenerate_bounds_rejected(self):
        with pytest.raises(BadBoundsError):
            build_rectangle(self._fit(), 100, [(1.0, 1.0)], [(-1.0, 1.0), (-1.0, 1.0)])
        with pytest.raises(BadBoundsError):
            build_rectangle(self._fit(), 100, [(-2.0, 3.0)], [(0.0, 0.0), (-1.0, 1.0)])

    def test_open_versus_closed_membership(self):
        rect = build_rectangle(self._fit(), 100, [(-2.0, 3.0)], [(-1.0, 1.0), (-1.0, 1.0)])
        assert not rect[0].contains(0.47)
        assert rect[1].contains(rect[1].lo)


class TestVerify:
    def test_full_space_rows_are_one(self):
        cfg = k1_config(
            closed_sets=(ClosedSetTuple("all", (closed_1d(-INF, INF),), None),),
            open_sets=(OpenSetTuple("all", (open_1d(-INF, INF),), None),),
        )
        report = verify_limit_bounds(cfg)
        assert report.passed
        for row in report.rows:
            assert row.lhs == 1.0 and row.rhs == 1.0

    def test_bounds_hold_with_slack(self):
        report = verify_limit_bounds(k1_config())
        assert report.passed and report.slack_violations == 0

    def test_deterministic(self):
        cfg = k1_config()
        assert verify_limit_bounds(cfg) == verify_limit_bounds(cfg)

    def test_worker_count_invariance(self):
        cfg = k1_config()
        assert verify_limit_bounds(cfg, workers=1) == verify_limit_bounds(cfg, workers=2)

    def test_bootstrap_mode_runs(self):
        cfg = k1_config(rhs_mode="empirical-bootstrap", bootstrap_n=400)
        report = verify_limit_bounds(cfg)
        assert any(r.kind == "closed" for r in report.rows)

    def test_bootstrap_requires_larger_n(self):
        with pytest.raises(ConfigError):
            k1_config(rhs_mode="empirical-bootstrap", bootstrap_n=50)

    def test_containment_rhs_never_exceeds_capacity_rhs(self):
        # same interval closed and open, one shared limit replication stream
        cfg = k1_config(
            closed_sets=(ClosedSetTuple("band", (closed_1d(-2.0, 2.0),), None),),
            open_sets=(OpenSetTuple("band", (open_1d(-2.0, 2.0),), None),),
        )
        report = verify_limit_bounds(cfg)
        by_kind = {(r.kind, r.n): r.rhs for r in report.rows}
        for n in cfg.n_grid:
            assert by_kind[("open", n)] <= by_kind[("closed", n)]


class TestTails:
    def test_monotone_and_unit_at_zero(self):
        cfg = k1_config(tail_grid=(0.0, 2.0, 8.0, 32.0), tail_threshold=0.2)
        table = tail_probability_table(cfg)
        for n in cfg.n_grid:
            probs = [p for nn, a, p in table.rows if nn == n]
            assert probs[0] == 1.0
            assert all(a >= b for a, b in zip(probs, probs[1:]))
        assert table.passed


class TestCoverage:
    def test_target_reached(self):
        report = coverage_experiment(k1_config())
        assert report.target == pytest.approx(0.9)
        assert report.coverage >= 0.87
        assert report.passed(0.03)

    def test_deterministic(self):
        cfg = k1_config()
        assert coverage_experiment(cfg) == coverage_experiment(cfg)

    def test_rectangles_widen_as_rho_drops(self):
        wide = coverage_experiment(k1_config(rho=0.05))
        narrow = coverage_experiment(k1_config(rho=0.5))
        assert all(w > n for w, n in zip(wide.mean_widths, narrow.mean_widths))

    def test_coverage_nests_on_shared_seed(self):
        wide = coverage_experiment(k1_config(rho=0.05))
        narrow = coverage_experiment(k1_config(rho=0.5))
        assert all(w or not n for w, n in zip(wide.covered, narrow.covered))
        assert wide.coverage >= narrow.coverage

    def test_noiseless_degenerate_scale(self):
        cfg = k1_config(
            model=pure_step_model((0.5,), (0.0, 1.0), UNIFORM01, NoiseLaw("gaussian", (0.0, 0.0)))
        )
        report = coverage_experiment(cfg)
        assert report.coverage >= 0.9


class TestProductForm:
    def _cfg(self):
        model = pure_step_model(
            (1.0 / 3.0, 2.0 / 3.0), (0.0, 1.0, 0.0), UNIFORM01, NoiseLaw("gaussian", (0.0, 0.2))
        )
        return VerificationConfig(
            model=model,
            k=2,
            n_grid=(120,),
            replications_data=1000,
            replications_limit=1000,
            rho=0.1,
            closed_sets=(
                ClosedSetTuple("lower", (closed_1d(-INF, 0.0), closed_1d(-INF, 0.0)), None),
            ),
            open_sets=(),
            master_seed=555,
        )

    def test_requires_k_at_least_two(self):
        with pytest.raises(ConfigError):
            product_form_check(k1_config())

    def test_joint_close_to_product(self):
        table = product_form_check(self._cfg())
        assert table.n == 120
        row = table.rows[0]
        se = math.sqrt(row.joint_se**2 + row.product_se**2)
        assert row.discrepancy <= 0.05 + 2 * se

    def test_deterministic(self):
        cfg = self._cfg()
        assert product_form_check(cfg) == product_form_check(cfg)


class TestMembershipReport:
    def test_always_inside(self):
        model = pure_step_model((0.5,), (0.0, 1.0), UNIFORM01, NoiseLaw("gaussian", (0.0, 0.25)))
        report = membership_report(model, 1, 150, 60, 91)
        assert report.all_inside
        assert report.fraction_inside == 1.0

    def test_worker_invariance(self):
        model = pure_step_model((0.5,), (0.0, 1.0), UNIFORM01, NoiseLaw("gaussian", (0.0, 0.25)))
        a = membership_report(model, 1, 100, 40, 91, workers=1)
        b = membership_report(model, 1, 100, 40, 91, workers=2)
        assert a == b


class TestAlphaSigmas:
    def test_pure_step_closed_form(self):
        model = pure_step_model((0.5,), (0.0, 1.0), UNIFORM01, NoiseLaw("gaussian", (0.0, 0.25)))
        sig = alpha_limit_sigmas(model)
        assert sig == pytest.approx((0.25 / math.sqrt(0.5), 0.25 / math.sqrt(0.5)))

    def test_polynomial_segments_fall_back(self):
        from stepargmin.stepfit import RegressionModelSpec

        model = RegressionModelSpec(
            segments=((0.0, 1.0), (2.0,)),
            x_law=UNIFORM01,
            noise=NoiseLaw("gaussian", (0.0, 0.1)),
            true_tau=(0.5,),
            true_alpha=(0.25, 2.0),
        )
        assert alpha_limit_sigmas(model) is None


CONFIG_TEXT = """
master_seed = 777
k = 1
n_grid = 50, 100
replications_data = 1000
replications_limit = 1000
rho = 0.1
mc_slack = 2.0
coverage_n = 80
coverage_replications = 1000
coverage_tolerance = 0.05
model.tau = 0.5
model.alpha = 0, 1
model.x_law = uniform(0, 1)
model.noise = gaussian(0, 0.25)
set closed lower = [-inf,0]
set closed band = [-1,1] ; [3,4] @ [-2,2] | [-2,2]
set open win = (-4,4)
"""


class TestConfigParsing:
    def test_full_parse(self):
        cfg = parse_verification_config(CONFIG_TEXT)
        assert cfg.master_seed == 777
        assert cfg.n_grid == (50, 100)
        assert cfg.model.true_alpha == (0.0, 1.0)
        assert len(cfg.closed_sets) == 2
        band = cfg.closed_sets[1]
        assert band.fsets[0].boxes == (Box((-1.0,), (1.0,)), Box((3.0,), (4.0,)))
        assert band.aux == ((-2.0, 2.0), (-2.0, 2.0))
        assert cfg.open_sets[0].gsets[0].boxes[0].lo == (-4.0,)

    def test_missing_key_named(self):
        text = "\n".join(
            ln for ln in CONFIG_TEXT.splitlines() if not ln.startswith("replications_data")
        )
        with pytest.raises(ConfigError, match="replications_data"):
            parse_verification_config(text)

    def test_bad_set_line(self):
        with pytest.raises(ConfigError):
            parse_verification_config(CONFIG_TEXT + "\nset diagonal thing = [-1,1]\n")

    def test_replication_floor(self):
        with pytest.raises(ConfigError):
            k1_config(replications_data=10)

    def test_n_grid_must_increase(self):
        with pytest.raises(ConfigError):
            k1_config(n_grid=(100, 100))
