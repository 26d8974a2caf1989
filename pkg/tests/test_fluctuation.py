import csv

import numpy as np
import pytest

from urnsir.fields import Kernel, ScalarField
from urnsir.fluctuation import (
    CovarianceTrajectory,
    PanelSeries,
    build_operator_panel,
    evolve_covariance,
    initial_covariance,
    noise_matrix,
    pair_covariance,
    propagate,
    weight_drift,
    write_covariance_csv,
    write_pair_csv,
)
from urnsir.homogeneous import classic_clt_covariance
from urnsir.model import ModelSpec

ONE = ScalarField.constant(1.0)


def hetero_spec(T=1.0):
    return ModelSpec(
        lam=Kernel.separable(
            ScalarField.affine(0.8, 0.6), ScalarField.affine(1.2, -0.5)
        ),
        psi=ScalarField.affine(0.7, 0.4),
        phi=ScalarField.affine(0.2, 0.3),
        N=10,
        T=T,
    )


def flat_spec(lam0=1.7, phi0=0.3, T=1.0):
    return ModelSpec(
        lam=Kernel.constant(lam0),
        psi=ScalarField.constant(1.0),
        phi=ScalarField.constant(phi0),
        N=10,
        T=T,
    )


class TestPanels:
    def test_panel_shapes_and_values(self):
        spec = hetero_spec()
        series = PanelSeries(spec, 6, 0.1, 1.0)
        panel = series.panel(0.0)
        assert panel.m == 6
        rho1 = series.density.rho1[0]
        rho0 = series.density.rho0[0]
        np.testing.assert_allclose(panel.b2, panel.psi * rho1, atol=1e-15)
        np.testing.assert_allclose(
            panel.alpha2, rho0 * panel.kappa1, atol=1e-15
        )
        np.testing.assert_allclose(
            panel.kappa1, spec.lam.node_average(rho1), atol=1e-15
        )

    def test_off_grid_time_raises(self):
        series = PanelSeries(hetero_spec(), 4, 0.1, 1.0)
        with pytest.raises(ValueError):
            build_operator_panel(series.spec, series.density, 0.123)

    def test_weight_drift_blocks(self):
        panel = PanelSeries(hetero_spec(), 3, 0.1, 1.0).panel(0.0)
        s = weight_drift(panel)
        m = 3
        a0t = panel.a0.T
        np.testing.assert_array_equal(s[:m, :m], a0t - np.diag(panel.psi))
        np.testing.assert_array_equal(s[:m, m:], np.diag(panel.kappa1))
        np.testing.assert_array_equal(s[m:, :m], -a0t)
        np.testing.assert_array_equal(s[m:, m:], -np.diag(panel.kappa1))

    def test_noise_cross_block_cancels_infection_part(self):
        # the infection noise enters eta and beta with opposite signs, so
        # the cross block must be the negated beta block entry for entry
        panel = PanelSeries(hetero_spec(), 5, 0.1, 1.0).panel(0.5)
        q = noise_matrix(panel)
        m = 5
        np.testing.assert_array_equal(q[:m, m:], -q[m:, m:])
        np.testing.assert_array_equal(q[m:, :m], -q[m:, m:])
        assert np.all(np.diag(q[:m, :m]) >= np.diag(q[m:, m:]) - 1e-15)
        np.testing.assert_array_equal(q, q.T)

    def test_noise_is_psd(self):
        panel = PanelSeries(hetero_spec(), 5, 0.1, 1.0).panel(1.0)
        eigs = np.linalg.eigvalsh(noise_matrix(panel))
        assert eigs.min() > -1e-12


class TestPropagator:
    def test_identity_at_equal_times(self):
        series = PanelSeries(hetero_spec(), 4, 0.05, 1.0)
        np.testing.assert_array_equal(propagate(series, 0.5, 0.5), np.eye(8))

    def test_cocycle_property(self):
        series = PanelSeries(hetero_spec(), 6, 0.02, 1.0)
        full = propagate(series, 0.0, 1.0)
        split = propagate(series, 0.5, 1.0) @ propagate(series, 0.0, 0.5)
        assert np.max(np.abs(full - split)) < 1e-10

    def test_backward_propagation_rejected(self):
        series = PanelSeries(hetero_spec(), 4, 0.05, 1.0)
        with pytest.raises(ValueError):
            propagate(series, 0.5, 0.2)

    def test_noise_free_evolution_is_flow_conjugation(self):
        # the two integrations only agree to integrator order; the defect
        # shrinks like dt^4
        series = PanelSeries(hetero_spec(), 5, 0.005, 1.0)
        traj = evolve_covariance(series, include_noise=False)
        flow = propagate(series, 0.0, 1.0)
        c0 = initial_covariance(series.spec, 5)
        expect = flow @ c0 @ flow.T
        assert np.max(np.abs(traj.at(1.0) - expect)) < 1e-9


class TestCovariance:
    def test_initial_structure(self):
        spec = hetero_spec()
        c0 = initial_covariance(spec, 4)
        phi = spec.phi.at_sites(4)
        d = np.diag(4 * phi * (1 - phi))
        np.testing.assert_array_equal(c0[:4, :4], d)
        np.testing.assert_array_equal(c0[:4, 4:], -d)
        np.testing.assert_array_equal(c0[4:, 4:], d)
        # beta_0 = -eta_0 makes the block matrix singular but PSD
        eigs = np.linalg.eigvalsh(c0)
        assert eigs.min() > -1e-12

    def test_initial_pairing_half_half(self):
        # phi = 1/2, f = g = 1: Var eta = Var beta = 1/4, Cov = -1/4
        spec = flat_spec(phi0=0.5)
        c0 = initial_covariance(spec, 8)
        v = pair_covariance(c0, ONE, ONE, 8)
        np.testing.assert_allclose(
            v, [[0.25, -0.25], [-0.25, 0.25]], atol=1e-14
        )

    def test_pure_recovery_matches_independent_urns(self):
        # lambda = 0: urns decouple and Var eta_t(f) is the node average of
        # f^2 p_t (1 - p_t) with p_t = phi e^(-psi t)
        spec = ModelSpec(
            lam=Kernel.constant(0.0),
            psi=ScalarField.affine(0.5, 1.0),
            phi=ScalarField.table([0.1, 0.6, 0.3, 0.8]),
            N=8,
            T=1.0,
        )
        m = 16
        series = PanelSeries(spec, m, 1e-3, 1.0)
        traj = evolve_covariance(series)
        f = ScalarField.affine(0.5, 1.0)
        fv = f.at_sites(m)
        u = np.arange(1, m + 1) / m
        p_t = spec.phi(u) * np.exp(-spec.psi(u) * 1.0)
        var_expect = float(np.mean(fv**2 * p_t * (1 - p_t)))
        v = pair_covariance(traj.at(1.0), f, f, m)
        assert abs(v[0, 0] - var_expect) < 1e-6
        # susceptibles frozen: Var beta stays at its initial value
        q0 = float(np.mean(fv**2 * spec.phi(u) * (1 - spec.phi(u))))
        assert abs(v[1, 1] - q0) < 1e-10
        # Cov(eta_t, beta_t) = -node avg of f^2 p_t (1 - phi)
        cov_expect = -float(np.mean(fv**2 * p_t * (1 - spec.phi(u))))
        assert abs(v[0, 1] - cov_expect) < 1e-6

    def test_homogeneous_reduction_matches_closed_system(self):
        lam0, phi0 = 1.7, 0.3
        spec = flat_spec(lam0=lam0, phi0=phi0, T=1.0)
        series = PanelSeries(spec, 16, 1e-3, 1.0)
        traj = evolve_covariance(series)
        ref = classic_clt_covariance(lam0, phi0, 1.0, 1e-3)
        for t in (0.0, 0.5, 1.0):
            ours = pair_covariance(traj.at(t), ONE, ONE, 16)
            theirs = ref.covariance[ref.at(t)]
            assert np.max(np.abs(ours - theirs)) < 1e-8

    def test_trajectory_symmetry_and_psd_enforced(self):
        series = PanelSeries(hetero_spec(), 8, 1e-2, 1.0)
        traj = evolve_covariance(series)
        for c in traj.covariances:
            assert np.max(np.abs(c - c.T)) < 1e-8
            assert np.linalg.eigvalsh(c).min() > -1e-8
        bad = np.eye(4)
        bad[0, 1] = 1e6
        with pytest.raises(ValueError):
            CovarianceTrajectory(times=[0.0], covariances=[bad], m=2)
        with pytest.raises(ValueError):
            CovarianceTrajectory(
                times=[0.0], covariances=[-np.eye(4)], m=2
            )

    def test_store_every_and_at(self):
        series = PanelSeries(hetero_spec(), 4, 0.1, 1.0)
        traj = evolve_covariance(series, store_every=5)
        np.testing.assert_allclose(traj.times, [0.0, 0.5, 1.0], atol=1e-12)
        with pytest.raises(ValueError):
            traj.at(0.3)

    def test_bad_initial_shape_rejected(self):
        series = PanelSeries(hetero_spec(), 4, 0.1, 1.0)
        with pytest.raises(ValueError):
            evolve_covariance(series, c0=np.eye(3))


class TestOutputs:
    def test_covariance_csv_schema(self, tmp_path):
        series = PanelSeries(hetero_spec(), 3, 0.25, 0.5)
        traj = evolve_covariance(series, store_every=2)
        path = tmp_path / "cov.csv"
        write_covariance_csv(traj, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["time", "block", "row_u", "col_u", "value"]
        assert len(rows) == 1 + traj.times.size * 3 * 9
        blocks = {r[1] for r in rows[1:]}
        assert blocks == {"ee", "eb", "bb"}
        # spot check one entry against the matrix
        last = traj.covariances[-1]
        row = rows[-1]
        assert float(row[4]) == pytest.approx(last[5, 5], rel=1e-10)

    def test_pair_csv_schema(self, tmp_path):
        series = PanelSeries(flat_spec(), 4, 0.25, 0.5)
        traj = evolve_covariance(series, store_every=1)
        path = tmp_path / "pairs.csv"
        write_pair_csv(traj, ONE, ONE, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["time", "var_eta_f", "cov_eta_beta", "var_beta_g"]
        assert len(rows) == 1 + traj.times.size
        v = pair_covariance(traj.at(0.5), ONE, ONE, 4)
        assert float(rows[-1][1]) == pytest.approx(v[0, 0], rel=1e-10)
        assert float(rows[-1][2]) == pytest.approx(v[0, 1], rel=1e-10)
        assert float(rows[-1][3]) == pytest.approx(v[1, 1], rel=1e-10)
