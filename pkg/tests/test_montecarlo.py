import math

import pytest

from lcmdiv.datasets import simulation_plan
from lcmdiv.errors import DomainError
from lcmdiv.montecarlo import dale_band, emit_power_curves, run_simulation


class TestDaleBand:
    def test_reference_endpoints(self):
        lo, hi = dale_band(0.05)
        assert lo == pytest.approx(0.035746, abs=1e-4)
        assert hi == pytest.approx(0.069479, abs=1e-4)

    def test_closed_form(self):
        # lo = 1 / (1 + odds * e^0.35), hi with e^-0.35, odds = (1-a)/a.
        for alpha in (0.01, 0.05, 0.1):
            odds = (1 - alpha) / alpha
            lo, hi = dale_band(alpha)
            assert lo == pytest.approx(1.0 / (1.0 + odds * math.exp(0.35)), rel=1e-12)
            assert hi == pytest.approx(1.0 / (1.0 + odds * math.exp(-0.35)), rel=1e-12)

    def test_nominal_level_inside_own_band(self):
        for alpha in (0.01, 0.05, 0.2, 0.5):
            lo, hi = dale_band(alpha)
            assert lo < alpha < hi

    def test_domain(self):
        with pytest.raises(DomainError):
            dale_band(0.0)
        with pytest.raises(DomainError):
            dale_band(1.0)


@pytest.fixture(scope="module")
def smoke_table():
    plan = simulation_plan(
        sample_sizes=(200,),
        a_values=(0.0, 2.0 / 3.0),
        lambda8_grid=(0.0, 2.0),
        replications=8,
        seed=77,
    )
    return run_simulation(plan)


class TestRunSimulation:
    def test_single_replication_deterministic(self):
        plan = simulation_plan(
            sample_sizes=(200,), a_values=(2.0 / 3.0,), lambda8_grid=(0.0,),
            replications=1, seed=5,
        )
        t1 = run_simulation(plan)
        t2 = run_simulation(plan)
        c1, c2 = t1.cells[0], t2.cells[0]
        assert c1.rate in (0.0, 1.0)
        assert (c1.rate, c1.rejections, c1.dof) == (c2.rate, c2.rejections, c2.dof)

    def test_cells_cover_grid(self, smoke_table):
        plan = smoke_table.plan
        assert len(smoke_table.cells) == len(plan.sample_sizes) * len(plan.a_values) * len(
            plan.lambda8_grid
        )
        for cell in smoke_table.cells:
            assert cell.n_effective + cell.fit_failures == plan.replications
            assert 0.0 <= cell.rate <= 1.0
            lo, hi = cell.binomial_ci
            assert 0.0 <= lo <= cell.rate <= hi <= 1.0

    def test_alternative_rejects_more_than_null(self, smoke_table):
        null_cell = smoke_table.cell(200, 2.0 / 3.0, 0.0)
        alt_cell = smoke_table.cell(200, 2.0 / 3.0, 2.0)
        assert alt_cell.rate >= null_cell.rate

    def test_rank_policy_dof(self, smoke_table):
        for cell in smoke_table.cells:
            assert cell.dof == 32 - 12 - 1

    def test_nominal_policy_dof(self):
        from dataclasses import replace

        plan = replace(
            simulation_plan(
                sample_sizes=(200,), a_values=(2.0 / 3.0,), lambda8_grid=(0.0,),
                replications=3, seed=5,
            ),
            dof_policy="nominal",
        )
        table = run_simulation(plan)
        assert table.cells[0].dof == 32 - 13 - 1

    def test_parallel_matches_serial(self):
        plan = simulation_plan(
            sample_sizes=(200,), a_values=(2.0 / 3.0,), lambda8_grid=(0.0,),
            replications=6, seed=9,
        )
        serial = run_simulation(plan, n_jobs=1)
        parallel = run_simulation(plan, n_jobs=2)
        for cs, cp in zip(serial.cells, parallel.cells):
            assert (cs.rate, cs.rejections, cs.fit_failures) == (cp.rate, cp.rejections, cp.fit_failures)

    def test_plan_validation(self):
        plan = simulation_plan()
        from dataclasses import replace

        with pytest.raises(DomainError):
            replace(plan, replications=0)
        with pytest.raises(DomainError):
            replace(plan, alpha=1.5)
        with pytest.raises(DomainError):
            replace(plan, dof_policy="taped")


class TestPowerCurveFiles:
    def test_row_count_matches_grid(self, smoke_table, tmp_path):
        paths = emit_power_curves(smoke_table, tmp_path)
        assert len(paths) == 1
        lines = open(paths[0]).read().strip().splitlines()
        assert len(lines) == 1 + len(smoke_table.plan.lambda8_grid)
        assert lines[0].startswith("lambda8,")

    def test_empty_a_list_gives_header_only(self, tmp_path):
        plan = simulation_plan(
            sample_sizes=(200,), a_values=(), lambda8_grid=(0.0,), replications=1, seed=4
        )
        table = run_simulation(plan)
        paths = emit_power_curves(table, tmp_path)
        lines = open(paths[0]).read().strip().splitlines()
        assert lines[0] == "lambda8"
        assert len(lines) == 1 + 1  # header plus one coefficient row (no rate columns)

    def test_table_rows_shape(self, smoke_table):
        rows = smoke_table.rows()
        assert rows[0][0] == "N"
        assert len(rows) == 1 + len(smoke_table.cells)


@pytest.mark.extended
class TestExtendedCalibration:
    def test_null_size_in_band(self):
        plan = simulation_plan(
            sample_sizes=(1000,), a_values=(2.0 / 3.0,), lambda8_grid=(0.0,),
            replications=1000, seed=20140915,
        )
        cell = run_simulation(plan).cells[0]
        lo, hi = dale_band(plan.alpha)
        assert lo <= cell.rate <= hi

    def test_power_ordering_across_family(self):
        # Rejection rates fall as the index grows, up to twice the binomial
        # standard error.
        plan = simulation_plan(
            sample_sizes=(200,), a_values=(-0.5, 0.0, 2.0 / 3.0, 1.0),
            lambda8_grid=(1.0,), replications=400, seed=31,
        )
        table = run_simulation(plan)
        rates = [table.cell(200, a, 1.0).rate for a in plan.a_values]
        n_eff = table.cells[0].n_effective
        for lo_rate, hi_rate in zip(rates[1:], rates[:-1]):
            se = math.sqrt(max(hi_rate * (1 - hi_rate), 1e-6) / n_eff)
            assert hi_rate >= lo_rate - 2 * se

    def test_power_monotone_in_coefficient_at_large_n(self):
        plan = simulation_plan(
            sample_sizes=(1000,), a_values=(2.0 / 3.0,),
            lambda8_grid=(0.7, 0.9, 1.0, 1.3), replications=300, seed=13,
        )
        table = run_simulation(plan)
        rates = [table.cell(1000, 2.0 / 3.0, l8).rate for l8 in plan.lambda8_grid]
        n_eff = table.cells[0].n_effective
        for lo_rate, hi_rate in zip(rates[:-1], rates[1:]):
            se = math.sqrt(max(lo_rate * (1 - lo_rate), 1e-6) / n_eff)
            assert hi_rate >= lo_rate - 2 * se
