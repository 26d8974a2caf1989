import csv
import math

import numpy as np
import pytest

from urnsir.fields import Kernel, ScalarField
from urnsir.model import ModelSpec
from urnsir.reports import (
    Report,
    ReportRecord,
    clt_report,
    construction_report,
    covariance_anchor_report,
    covariance_decay_report,
    dynkin_report,
    lln_report,
    oracle_report,
    write_report_csv,
)

ZERO = ScalarField.constant(0.0)
SEED = 404


def flat(n=100, lam=1.5, psi=1.0, phi=0.4, T=2.0):
    return ModelSpec(
        lam=Kernel.constant(lam),
        psi=ScalarField.constant(psi),
        phi=ScalarField.constant(phi),
        N=n,
        T=T,
    )


def no_infection(n=30):
    return ModelSpec(
        lam=Kernel.constant(0.0),
        psi=ScalarField.constant(1.0),
        phi=ScalarField.constant(0.5),
        N=n,
        T=1.0,
    )


class TestLln:
    def test_slope_near_minus_half(self):
        rep = lln_report(
            flat(), SEED, ns=(50, 100, 200), t=1.0, replicas=150, threads=2
        )
        assert rep.passed
        slope = [r for r in rep.records if r.statistic == "slope"][0]
        assert abs(slope.value + 0.5) <= slope.bound
        # one rms and one mean-abs record per ladder point, plus the slope
        assert len(rep.records) == 2 * 3 + 1

    def test_zero_test_function_degenerates_cleanly(self):
        rep = lln_report(flat(), SEED, f=ZERO, ns=(10, 20), t=0.5, replicas=5)
        assert rep.passed
        slope = [r for r in rep.records if r.statistic == "slope"][0]
        assert math.isnan(slope.value)

    def test_time_validation(self):
        with pytest.raises(ValueError):
            lln_report(flat(T=1.0), SEED, t=1.5)

    def test_thread_count_does_not_change_records(self):
        kw = dict(ns=(30, 60), t=0.5, replicas=40)
        a = lln_report(flat(), SEED, threads=1, **kw)
        b = lln_report(flat(), SEED, threads=3, **kw)
        assert a.records == b.records


class TestCovarianceDecay:
    def test_excess_stays_bounded(self):
        rep = covariance_decay_report(
            flat(), SEED, ns=(20, 40, 80), t=0.5, replicas=2000,
            pairs_per_n=60, threads=2,
        )
        assert rep.passed
        stats_per_n = {r.statistic for r in rep.records}
        assert stats_per_n == {
            "n_mean_abs_cov", "n_max_abs_cov", "n_signed_mean_cov",
            "n_noise_floor", "n_excess",
        }
        assert len(rep.records) == 5 * 3

    def test_anchor_all_pairs_in_band(self):
        rep = covariance_anchor_report(
            flat(n=3), SEED, t=0.5, replicas=4000, threads=2
        )
        assert rep.passed
        assert len(rep.records) == 3  # pairs (1,2), (1,3), (2,3)
        assert all(r.bound > 0 for r in rep.records)
        assert all(abs(r.value) <= r.bound for r in rep.records)


class TestClt:
    def test_variances_and_normality(self):
        rep = clt_report(
            flat(n=400), SEED, t=0.5, replicas=250, m_grid=16,
            rel_tol=0.15, threads=2,
        )
        assert rep.passed
        by_name = {r.statistic: r for r in rep.records}
        assert abs(by_name["var_eta_ratio"].value - 1.0) <= 0.15
        assert abs(by_name["var_beta_ratio"].value - 1.0) <= 0.15
        assert by_name["ks_pvalue"].value > 0.01
        assert abs(by_name["var_eta0"].value - by_name["var_eta0_theory"].value
                   ) <= by_name["var_eta0"].bound

    def test_zero_test_function_degenerates_cleanly(self):
        rep = clt_report(flat(n=50), SEED, f=ZERO, g=ZERO, t=0.5, replicas=20)
        assert rep.passed
        assert rep.records[0].statistic == "degenerate"

    def test_time_validation(self):
        with pytest.raises(ValueError):
            clt_report(flat(T=1.0), SEED, t=0.0)


class TestDynkin:
    def test_variance_matches_quadratic_variation(self):
        rep = dynkin_report(flat(n=150), SEED, t=0.5, replicas=200, threads=2)
        assert rep.passed
        by_name = {r.statistic: r for r in rep.records}
        assert 0.85 <= by_name["var_over_qv"].value <= 1.15
        assert abs(by_name["mean_residual"].value) <= by_name["mean_residual"].bound
        assert by_name["raw_residual_z"].bound == 3.0

    def test_no_infection_flux_degenerates_cleanly(self):
        rep = dynkin_report(no_infection(), SEED, t=1.0, replicas=50)
        assert rep.passed
        assert rep.records[0].statistic == "degenerate"

    def test_thread_count_does_not_change_records(self):
        a = dynkin_report(flat(n=60), SEED, t=0.5, replicas=60, threads=1)
        b = dynkin_report(flat(n=60), SEED, t=0.5, replicas=60, threads=3)
        assert a.records == b.records


class TestOracleAndConstruction:
    def test_frequencies_match_exact_chain(self):
        rep = oracle_report(
            flat(n=3, T=1.0), SEED, times=(0.5,), replicas=20_000, threads=2
        )
        assert rep.passed
        frac = [r for r in rep.records if r.statistic == "fraction_in_band"][0]
        assert frac.value >= frac.bound
        # 27 per-state deltas plus the pooled fraction
        assert len(rep.records) == 27 + 1

    def test_unreachable_fraction_fails(self):
        rep = oracle_report(
            flat(n=2, T=1.0), SEED, times=(0.5,), replicas=2000,
            min_fraction=1.01,
        )
        assert not rep.passed
        assert rep.summary() == "[FAIL] oracle"

    def test_construction_marginals_agree(self):
        rep = construction_report(
            flat(n=3, T=1.0), SEED, t=0.5, replicas=8000, threads=2
        )
        assert rep.passed
        assert len(rep.records) == 3 * 3
        assert rep.summary() == "[PASS] construction"


def test_report_csv_round_trip(tmp_path):
    rep = Report(
        kind="demo",
        passed=True,
        records=(
            ReportRecord("demo", 5, 1.0, "alpha", 0.25, 0.5, 7),
            ReportRecord("demo", 5, 1.0, "beta", -1.0, None, 7),
        ),
        lines=("line",),
    )
    path = tmp_path / "report.csv"
    write_report_csv(rep, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["kind", "N", "t", "statistic", "value", "bound", "seed"]
    assert rows[1] == ["demo", "5", "1", "alpha", "0.25", "0.5", "7"]
    assert rows[2][5] == ""  # missing bound stays empty, not "None"
