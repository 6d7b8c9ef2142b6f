import numpy as np
import pytest

from nhrelax import dynamics, models, oracle
from nhrelax.errors import TooLarge, UnsupportedModel
from nhrelax.models import ModelSpec
from nhrelax.ndlinalg import solve_steady_sylvester


def hn(L, kappa, Gamma, lam=0.0):
    return ModelSpec("HN", "fermion", L, w=1.0, kappa=kappa,
                     lambda_loss=lam, Gamma=Gamma)


class TestJordanWigner:
    def test_anticommutators(self):
        c = oracle.jordan_wigner_annihilators(3)
        dim = 8
        for i in range(3):
            for j in range(3):
                acom = c[i] @ c[j].conj().T + c[j].conj().T @ c[i]
                assert np.allclose(acom, np.eye(dim) if i == j else 0.0)
                assert np.allclose(c[i] @ c[j] + c[j] @ c[i], 0.0)


class TestBuildFockLindblad:
    def test_operator_counts(self):
        # L = 1: no bonds, one local loss + one pump
        fl1 = oracle.build_fock_lindblad(hn(1, 0.0, 0.1, lam=0.5))
        assert len(fl1.jump_ops) == 2
        # L = 2: one correlated bond, two local losses, two pumps
        fl2 = oracle.build_fock_lindblad(hn(2, 0.5, 0.1, lam=0.2))
        assert len(fl2.jump_ops) == 5

    def test_guards(self):
        with pytest.raises(TooLarge):
            oracle.build_fock_lindblad(hn(5, 0.2, 0.1))
        with pytest.raises(UnsupportedModel):
            oracle.build_fock_lindblad(
                ModelSpec("SSH", "fermion", 2, w=1.0, kappa=0.1, Gamma=0.1,
                          u=1.0, gamma_ssh=0.5))
        with pytest.raises(UnsupportedModel):
            oracle.build_fock_lindblad(
                ModelSpec("HN", "boson", 2, w=1.0, kappa=0.1, Gamma=0.05))

    def test_vacuum_fixed_point_without_pump(self):
        fl = oracle.build_fock_lindblad(hn(2, 0.5, 0.0, lam=0.3))
        occ = oracle.lindblad_brute(fl, np.array([0.0, 1.0, 5.0]))
        assert np.max(np.abs(occ)) < 1e-12

    def test_pure_loss_particle_number_decreases(self):
        fl = oracle.build_fock_lindblad(hn(2, 0.4, 0.0, lam=0.1))
        occ = oracle.lindblad_brute(fl, np.linspace(0.0, 4.0, 9),
                                    rho0=oracle.fock_all_filled(2))
        total = occ.sum(axis=1)
        assert np.all(np.diff(total) <= 1e-12)


class TestOracleVsCovariance:
    def test_two_site_occupations(self):
        spec = hn(2, 0.5, 0.1)
        fl = oracle.build_fock_lindblad(spec)
        t_grid = np.array([0.0, 1.0, 5.0])
        occ = oracle.lindblad_brute(fl, t_grid)
        traj = dynamics.evolve_covariance(spec, np.zeros((2, 2)), t_grid)
        assert np.max(np.abs(occ - traj.occupations)) < 1e-8

    def test_full_covariance_pins_convention(self):
        spec = hn(2, 0.5, 0.1)
        fl = oracle.build_fock_lindblad(spec)
        rho = oracle.evolve_to(fl, 2.0)
        S_fock = oracle.two_point_matrix(fl, rho)
        traj = dynamics.evolve_covariance(spec, np.zeros((2, 2)),
                                          np.array([0.0, 2.0]), store_full=True)
        S_cov = traj.full_S[-1]
        assert np.max(np.abs(S_fock - S_cov)) < 1e-9
        # the transposed (row = creation index) reading is measurably wrong
        assert np.max(np.abs(S_fock.T - S_cov)) > 1e-2

    def test_single_site_steady_state(self):
        spec = hn(1, 0.0, 0.1, lam=1.0)
        fl = oracle.build_fock_lindblad(spec)
        rho = oracle.evolve_to(fl, 60.0, n_grid=32)
        n_inf = oracle.two_point_matrix(fl, rho)[0, 0].real
        H = models.effective_hamiltonian(spec)
        n_sylv = solve_steady_sylvester(H, spec.Gamma)[0, 0].real
        assert abs(n_inf - n_sylv) < 1e-9

    def test_random_draws(self):
        rng = np.random.default_rng(5)
        for L in (1, 2, 3):
            for _ in range(2):
                spec = hn(L, 0.0 if L == 1 else float(rng.uniform(0.1, 0.8)),
                          float(rng.uniform(0.02, 0.3)),
                          lam=float(rng.uniform(0.0, 0.5)))
                fl = oracle.build_fock_lindblad(spec)
                t_grid = np.array([0.0, 0.7, 2.0])
                occ = oracle.lindblad_brute(fl, t_grid)
                traj = dynamics.evolve_covariance(spec, np.zeros((L, L)), t_grid)
                assert np.max(np.abs(occ - traj.occupations)) < 1e-8


class TestThirdQuantization:
    def test_pairs_pass(self):
        for L in (2, 3):
            spec = hn(L, 0.5, 0.1)
            rep = oracle.third_quantization_check(oracle.build_fock_lindblad(spec))
            assert rep.pairs_checked == L * L
            assert rep.identity_residual <= 1e-10
            assert rep.max_eigenmode_residual <= 1e-8
            assert rep.max_sandwich_error <= 1e-8

    def test_diagonal_pair_rate(self):
        # alpha = beta: eigenvalue -i(E - E^*) = -2 Delta_f, real and negative
        spec = hn(2, 0.5, 0.1)
        E = models.hn_spectral_analytic(spec).eigenvalues[0]
        z = -1j * (E - E.conjugate())
        assert z.imag == pytest.approx(0.0, abs=1e-15)
        assert z.real == pytest.approx(-2.0 * spec.delta())

    def test_no_pump_no_shift(self):
        # Gamma = 0: the S_ab offsets vanish identically
        spec = hn(2, 0.5, 0.0, lam=0.1)
        fl = oracle.build_fock_lindblad(spec)
        H, data = models.build_hn(spec)
        s = models.hn_spectral_analytic(spec)
        gap = s.eigenvalues[1] - s.eigenvalues[0].conjugate()
        s_ab = -1j * np.einsum(
            "a,ab,b->", s.left[:, 0], data.Pmat, s.left[:, 1].conj()) / gap
        assert abs(s_ab) == 0.0

    def test_rapidity_grid_closed_under_conjugation(self):
        spec = hn(3, 0.5, 0.1)
        E = models.hn_spectral_analytic(spec).eigenvalues
        grid = np.array([-1j * (E[b] - E[a].conjugate())
                         for a in range(3) for b in range(3)])
        conj_set = np.sort_complex(grid.conj())
        assert np.allclose(np.sort_complex(grid), conj_set)
