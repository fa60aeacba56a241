"""Experiment drivers: max principle, stability ratios, sublevel decay."""

import numpy as np
import pytest

from hessianlab.errors import InputError
from hessianlab.geometry import MetricField, ScalarField, TorusGrid, make_field
from hessianlab.inequalities import (
    check_max_principle,
    laplacian_gradient_ratio,
    lp_norm,
    stability_records_csv,
    stability_sweep,
    sublevel_volume_decay,
)
from hessianlab.solver import SolverConfig, solve_exponential


def flat(n=2, N=16):
    grid = TorusGrid(n, N)
    return grid, MetricField.flat(grid)


class TestCheckMaxPrinciple:
    def test_constant_pair_zero_margin(self):
        grid, _ = flat(2, 8)
        u = ScalarField(grid, -0.4 * np.ones(grid.shape))
        H = ScalarField(grid, 0.4 * np.ones(grid.shape))
        rep = check_max_principle(u, H, 1e-9)
        assert rep.ok
        assert rep.upper_margin == pytest.approx(0.0, abs=1e-12)
        assert rep.lower_margin == pytest.approx(0.0, abs=1e-12)

    def test_solver_output_passes(self):
        grid, omega = flat(2, 8)
        H = make_field(grid, [((1, 0, 0, 0), 0.5, 0.0)])
        u, rep = solve_exponential(H, omega, 1, SolverConfig(t_steps=1))
        assert rep.converged
        assert check_max_principle(u, H, 1e-7).ok

    def test_corrupted_output_fails(self):
        grid, omega = flat(2, 8)
        H = ScalarField.zeros(grid)
        u, _ = solve_exponential(H, omega, 1)
        bad = ScalarField(grid, u.data + 1.0)
        assert not check_max_principle(bad, H, 1e-7).ok


class TestLaplacianGradientRatio:
    def test_zero_field(self):
        grid, _ = flat(2, 8)
        assert laplacian_gradient_ratio(ScalarField.zeros(grid)) == 0.0

    def test_cosine_eighth(self):
        grid, _ = flat(2, 16)
        u = make_field(grid, [((1, 0, 0, 0), 1.0, 0.0)])
        got = laplacian_gradient_ratio(u)
        assert abs(got - 0.125) < 0.5 * grid.h**2

    def test_amplitude_scaling_decreases_ratio(self):
        grid, _ = flat(2, 16)
        r1 = laplacian_gradient_ratio(make_field(grid, [((1, 0, 0, 0), 1.0, 0.0)]))
        r2 = laplacian_gradient_ratio(make_field(grid, [((1, 0, 0, 0), 2.0, 0.0)]))
        assert r2 < r1


class TestSublevelVolumeDecay:
    def test_zero_field_all_zero(self):
        grid, omega = flat(2, 8)
        rep = sublevel_volume_decay(ScalarField.zeros(grid), [0.5, 1.0], omega, 1)
        assert all(frac == 0.0 for _, frac, _ in rep.rows)
        assert rep.bounded

    def test_cosine_sublevel_measure(self):
        # phi = cos(x1) - 1: {phi < -1} = {cos x1 < 0}, measure 1/2 +- h
        grid, omega = flat(2, 16)
        zero = (0, 0, 0, 0)
        phi = make_field(grid, [((1, 0, 0, 0), 1.0, 0.0), (zero, -1.0, 0.0)])
        rep = sublevel_volume_decay(phi, [1.0], omega, 1)
        t, frac, tf = rep.rows[0]
        assert abs(frac - 0.5) <= grid.h

    def test_beyond_inf_is_empty(self):
        grid, omega = flat(2, 16)
        zero = (0, 0, 0, 0)
        phi = make_field(grid, [((1, 0, 0, 0), 1.0, 0.0), (zero, -1.0, 0.0)])
        rep = sublevel_volume_decay(phi, [2.5], omega, 1)  # t > -inf phi = 2
        assert rep.rows[0][1] == 0.0

    def test_decay_product_bounded(self):
        grid, omega = flat(2, 16)
        zero = (0, 0, 0, 0)
        phi = make_field(grid, [((1, 0, 0, 0), 1.0, 0.0), (zero, -1.0, 0.0)])
        rep = sublevel_volume_decay(phi, [0.1, 0.3, 1.0, 1.9], omega, 1)
        assert rep.bounded

    def test_requires_normalization(self):
        grid, omega = flat(2, 8)
        phi = ScalarField(grid, np.ones(grid.shape))
        with pytest.raises(InputError):
            sublevel_volume_decay(phi, [1.0], omega, 1)

    def test_requires_subharmonic(self):
        grid, omega = flat(2, 16)
        phi = make_field(grid, [((1, 0, 0, 0), 12.0, 0.0)])
        phi = ScalarField(grid, phi.data - phi.data.max())
        with pytest.raises(InputError):
            sublevel_volume_decay(phi, [1.0], omega, 1)


class TestLpNorm:
    def test_constant_field(self):
        grid, _ = flat(2, 8)
        u = ScalarField(grid, 2.0 * np.ones(grid.shape))
        want = 2.0 * (2 * np.pi) ** (4 / 3)  # (int 2^3 dV)^{1/3}
        assert lp_norm(u, 3) == pytest.approx(want, rel=1e-12)


@pytest.fixture(scope="module")
def sweep():
    grid, omega = flat(2, 8)
    zero = (0, 0, 0, 0)
    f = make_field(grid, [(zero, 1.0, 0.0), ((1, 0, 0, 0), 0.3, 0.0)])
    psi = make_field(grid, [((0, 0, 1, 0), 1.0, 0.0)])
    return stability_sweep(
        f, psi, [0.0, 1e-1, 1e-2], p=4.0, a=1.0 / 3, omega=omega, m=1,
        cfg=SolverConfig(t_steps=1), eps_schedule=(1.0, 0.3, 0.1, 0.03),
    )


class TestStabilitySweep:
    def test_zero_delta_zero_ratio(self, sweep):
        assert sweep[0].delta == 0.0
        assert sweep[0].lhs == 0.0
        assert sweep[0].ratio == 0.0

    def test_records_positive_for_positive_delta(self, sweep):
        for rec in sweep[1:]:
            assert rec.lhs > 0 and rec.rhs > 0 and rec.ratio > 0

    def test_ratios_bounded(self, sweep):
        ratios = [r.ratio for r in sweep if r.ratio > 0]
        assert max(ratios) / min(ratios) <= 100.0

    def test_legal_flag(self, sweep):
        assert all(r.legal for r in sweep)

    def test_illegal_exponent_recorded_not_rejected(self):
        grid, omega = flat(2, 8)
        zero = (0, 0, 0, 0)
        f = make_field(grid, [(zero, 1.0, 0.0)])
        psi = make_field(grid, [((1, 0, 0, 0), 1.0, 0.0)])
        records = stability_sweep(
            f, psi, [1e-1], p=4.0, a=1.0, omega=omega, m=1,
            cfg=SolverConfig(t_steps=1), eps_schedule=(1.0, 0.3),
        )
        assert not records[0].legal

    def test_perturbation_must_stay_positive(self):
        grid, omega = flat(2, 8)
        zero = (0, 0, 0, 0)
        f = make_field(grid, [(zero, 1.0, 0.0)])
        psi = make_field(grid, [((1, 0, 0, 0), 20.0, 0.0)])
        with pytest.raises(InputError):
            stability_sweep(f, psi, [0.1], p=4.0, a=0.3, omega=omega, m=1,
                            cfg=SolverConfig(t_steps=1), eps_schedule=(1.0, 0.3))

    def test_csv_output(self, sweep, tmp_path):
        path = tmp_path / "records.csv"
        stability_records_csv(sweep, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "delta,p,a,lhs,rhs,ratio,legal"
        assert len(lines) == len(sweep) + 1


class TestMonotoneComparisonOfDensities:
    def test_f_le_g_orders_auxiliary_solutions(self):
        # fixed eps: log sigma(v) = eps v + log f; f <= g gives v_f >= v_g
        grid, omega = flat(2, 8)
        from hessianlab.solver import solve_normalized

        zero = (0, 0, 0, 0)
        f = make_field(grid, [(zero, 1.0, 0.0), ((1, 0, 0, 0), 0.2, 0.0)])
        g = ScalarField(grid, f.data * 1.5)
        sched = [1.0, 0.3]
        cfg = SolverConfig(t_steps=1)
        uf, _, rf = solve_normalized(f, omega, 1, sched, cfg)
        ug, _, rg = solve_normalized(g, omega, 1, sched, cfg)
        assert rf.converged and rg.converged
        # compare the raw auxiliary iterates: v = u + sup v; sup v = log(c)/eps
        vf = uf.data + np.log(rf.c_estimates[-1]) / sched[-1]
        vg = ug.data + np.log(rg.c_estimates[-1]) / sched[-1]
        assert np.min(vf - vg) >= -10 * cfg.newton_tol
