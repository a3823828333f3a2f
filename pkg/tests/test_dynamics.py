import math

import numpy as np
import pytest

from catlink import qcore as qc
from catlink.dynamics import (IntegrationError, TimeDependentHamiltonian, evolve,
                              evolve_constant, fit_exponential_decay, integrate_rk45,
                              liouvillian)


def _zero_h(dim, t1=1.0):
    return TimeDependentHamiltonian(qc.QOperator((dim,), np.zeros((dim, dim))),
                                    (), (0.0, t1))


class TestEvolve:
    def test_free_evolution_is_stationary(self):
        rho0 = qc.to_density_matrix(qc.coherent_state(0.7, 8))
        traj = evolve(_zero_h(8), [], rho0, n_samples=5)
        for state in traj.states:
            assert np.allclose(state.data, rho0.data, atol=1e-10)

    def test_amplitude_damping_matches_analytic(self):
        kappa, dim = 2.5, 6
        rho0 = qc.to_density_matrix(qc.fock_state(1, dim))
        traj = evolve(_zero_h(dim, 1.2), [(qc.annihilation(dim), kappa)], rho0,
                      n_samples=13, observables={"n": qc.number_operator(dim)})
        expected = np.exp(-kappa * traj.times)
        assert np.max(np.abs(traj.expectations["n"] - expected)) < 1e-6

    def test_kerr_eigenstate_is_stationary(self):
        # coherent states are instantaneous eigenstates of the driven Kerr
        # Hamiltonian at E_p = K alpha^2
        kerr, alpha, dim = 1.0, math.sqrt(2), 20
        a = qc.annihilation(dim)
        h0 = -kerr * (a.dag() @ a.dag() @ a @ a) \
            + kerr * alpha**2 * (a.dag() @ a.dag() + a @ a)
        h = TimeDependentHamiltonian(h0, (), (0.0, 5.0 / kerr))
        traj = evolve(h, [], qc.coherent_state(alpha, dim), n_samples=3)
        fid = qc.state_fidelity(traj.final_state, qc.coherent_state(alpha, dim))
        assert fid >= 1.0 - 1e-6

    def test_trace_preservation_and_positivity(self):
        kappa, dim = 0.8, 10
        a = qc.annihilation(dim)
        h0 = 0.5 * (a + a.dag())
        h = TimeDependentHamiltonian(qc.QOperator((dim,), h0.data), (), (0.0, 3.0))
        rho0 = qc.to_density_matrix(qc.cat_state(1.0, "even", dim))
        traj = evolve(h, [(a, kappa)], rho0, n_samples=7)
        for state in traj.states:
            assert abs(state.norm() - 1.0) < 1e-8
            assert np.linalg.eigvalsh(state.data).min() > -1e-7

    def test_unitary_limit_preserves_purity(self):
        dim = 10
        a = qc.annihilation(dim)
        h0 = 0.3 * (a + a.dag()) + 0.1 * (a.dag() @ a)
        h = TimeDependentHamiltonian(qc.QOperator((dim,), h0.data), (), (0.0, 4.0))
        rho0 = qc.to_density_matrix(qc.fock_state(1, dim))
        traj = evolve(h, [], rho0, n_samples=5)
        assert abs(traj.final_state.purity() - 1.0) < 1e-8

    def test_tolerance_convergence(self):
        kappa, dim = 0.5, 8
        a = qc.annihilation(dim)
        drive = (qc.QOperator((dim,), (a + a.dag()).data),
                 lambda t: 0.4 * math.sin(2.0 * t))
        h = TimeDependentHamiltonian(qc.QOperator((dim,), 0.2 * (a.dag() @ a).data),
                                     (drive,), (0.0, 3.0))
        rho0 = qc.to_density_matrix(qc.fock_state(0, dim))
        target = qc.coherent_state(0.3, dim)
        fids = []
        for rtol in (1e-8, 5e-9):
            traj = evolve(h, [(a, kappa)], rho0, n_samples=2, rel_tol=rtol)
            fids.append(qc.state_fidelity(traj.final_state, target))
        assert abs(fids[0] - fids[1]) < 1e-8

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            evolve(_zero_h(4), [(qc.annihilation(4), -1.0)],
                   qc.to_density_matrix(qc.fock_state(0, 4)))

    def test_step_underflow_reports_time(self):
        # a discontinuous, rapidly exploding coefficient starves the step size
        def rhs(t, y):
            return y / max(1.0 - t, 0.0) ** 2 if t < 1.0 else y * np.inf

        with pytest.raises(IntegrationError) as err:
            integrate_rk45(rhs, np.ones(1, dtype=complex), [0.0, 2.0],
                           rel_tol=1e-10, max_steps=5000)
        assert err.value.t >= 0.0


class TestConstantLiouvillian:
    def test_matches_rk45(self):
        kerr, kappa, alpha, dim = 1.0, 1e-2, 1.2, 14
        a = qc.annihilation(dim)
        h0 = (-kerr * (a.dag() @ a.dag() @ a @ a)
              + kerr * alpha**2 * (a.dag() @ a.dag() + a @ a))
        rho0 = qc.to_density_matrix(qc.cat_state(alpha, "even", dim))
        t1 = 2.0
        traj = evolve(TimeDependentHamiltonian(h0, (), (0.0, t1)),
                      [(a, kappa)], rho0, n_samples=2, rel_tol=1e-9)
        rhos = evolve_constant(h0.data, [(a.data, kappa)], rho0.data, [0.0, t1])
        assert np.max(np.abs(rhos[-1] - traj.final_state.data)) < 1e-7

    def test_liouvillian_traceless_action(self):
        dim = 4
        a = qc.annihilation(dim)
        lv = liouvillian((a.dag() @ a).data, [(a.data, 0.3)])
        rho = qc.to_density_matrix(qc.coherent_state(0.5, dim)).data
        drho = (lv @ rho.reshape(-1, order="F")).reshape(dim, dim, order="F")
        assert abs(np.trace(drho)) < 1e-12


class TestDecayFit:
    def test_exact_exponential(self):
        t = np.linspace(0, 2, 40)
        fit = fit_exponential_decay(t, np.exp(-3.0 * t))
        assert fit.rate == pytest.approx(3.0, abs=1e-6)

    def test_constant_series(self):
        t = np.linspace(0, 2, 20)
        fit = fit_exponential_decay(t, np.full(20, 0.7))
        assert abs(fit.rate) < 1e-9

    def test_noisy_recovery_within_three_percent(self):
        rng = np.random.default_rng(42)
        kappa = 1.7
        t = np.linspace(0, 1.5 / kappa, 60)
        clean = np.exp(-kappa * t)
        noisy = clean * (1.0 + 0.01 * rng.standard_normal(t.size))
        fit = fit_exponential_decay(t, noisy)
        assert fit.rate == pytest.approx(kappa, rel=0.03)

    def test_rejects_nonpositive_values(self):
        t = np.linspace(0, 1, 10)
        with pytest.raises(ValueError):
            fit_exponential_decay(t, np.linspace(1, -0.1, 10))

    def test_rejects_short_series(self):
        with pytest.raises(ValueError):
            fit_exponential_decay([0, 1, 2], [1.0, 0.5, 0.25])


class TestTrajectory:
    def test_csv_export(self, tmp_path):
        dim = 4
        traj = evolve(_zero_h(dim), [(qc.annihilation(dim), 1.0)],
                      qc.to_density_matrix(qc.fock_state(1, dim)), n_samples=5,
                      observables={"n": qc.number_operator(dim)})
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "time_s,n"
        assert len(lines) == 6
