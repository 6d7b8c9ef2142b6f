import numpy as np
import pytest

from nhrelax import models
from nhrelax.errors import BosonUnstable, PerfectNonreciprocity, UnsetForModel
from nhrelax.models import ModelSpec, Statistics
from nhrelax.ndlinalg import eig_general


class TestModelSpec:
    def test_json_round_trip(self):
        spec = ModelSpec("SSH", "boson", 12, w=1.0, kappa=0.2, Gamma=0.05,
                         u=1.0, gamma_ssh=0.5)
        assert ModelSpec.from_json(spec.to_json()) == spec

    def test_unknown_fields_rejected(self):
        spec = ModelSpec("HN", "fermion", 4, kappa=0.1)
        blob = spec.to_json()
        blob["mystery"] = 1
        with pytest.raises(ValueError, match="unknown"):
            ModelSpec.from_json(blob)

    def test_boson_stability_guard(self):
        with pytest.raises(BosonUnstable):
            ModelSpec("HN", "boson", 10, w=1.0, kappa=0.3, Gamma=0.5)

    def test_kappa_cannot_exceed_w(self):
        with pytest.raises(ValueError):
            ModelSpec("HN", "fermion", 10, w=1.0, kappa=1.2)

    def test_statistics_sign(self):
        assert Statistics.FERMION.sign == +1
        assert Statistics.BOSON.sign == -1


class TestBuildHN:
    def test_matrix_entries(self):
        spec = ModelSpec("HN", "fermion", 6, w=1.0, kappa=0.999, Gamma=0.05)
        H, _ = models.build_hn(spec)
        assert H[1, 0] == pytest.approx(0.9995)   # down-chain
        assert H[0, 1] == pytest.approx(0.0005)   # up-chain
        assert np.allclose(np.diag(H), -1.049j)

    def test_hermitian_reciprocal_limit(self):
        spec = ModelSpec("HN", "fermion", 6, w=1.0)
        H, _ = models.build_hn(spec)
        assert np.allclose(H, H.conj().T)

    def test_dissipator_identity(self):
        # H_eff = H - (i/2)(L + P) reproduces the direct construction;
        # build_hn enforces 1e-12 internally, re-check it explicitly here
        spec = ModelSpec("HN", "fermion", 8, w=1.0, kappa=0.999, Gamma=0.1)
        H, data = models.build_hn(spec)
        assert np.max(np.abs(data.h_eff("fermion") - H)) < 1e-14

    def test_dissipator_identity_random_draws(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            w = rng.uniform(0.5, 2.0)
            spec = ModelSpec("HN", rng.choice(["fermion", "boson"]).item(),
                             int(rng.integers(2, 12)), w=w,
                             kappa=rng.uniform(0.0, 0.95) * w,
                             lambda_loss=rng.uniform(0.0, 1.0),
                             Gamma=rng.uniform(0.0, 0.2))
            H, data = models.build_hn(spec)
            scale = max(1.0, np.max(np.abs(H)))
            assert np.max(np.abs(data.h_eff(spec.statistics) - H)) <= 1e-12 * scale
            # loss/pump matrices Hermitian PSD
            for M in (data.Lmat, data.Pmat):
                assert np.max(np.abs(M - M.conj().T)) < 1e-14
                assert np.linalg.eigvalsh(M).min() >= -1e-12

    def test_lambda_vector_uniformity(self):
        # the edge kappa/2 correction makes the total local loss uniform
        spec = ModelSpec("HN", "fermion", 7, w=1.0, kappa=0.8, lambda_loss=0.3)
        H, _ = models.build_hn(spec)
        assert np.allclose(np.diag(H), -1j * (0.8 + 0.3))


class TestAnalyticSpectrum:
    def test_xi_loc_value(self):
        spec = ModelSpec("HN", "fermion", 10, w=1.0, kappa=0.999, Gamma=0.05)
        sc = models.derived_scales(spec)
        assert sc.xi_loc == pytest.approx(0.26314396422429217, abs=1e-15)

    def test_expansion_coefficient_magnitude(self):
        # log10 of e^{2(L-1)/xi_loc} at L = 100: about 327 (the "1e330" scale)
        spec = ModelSpec("HN", "fermion", 100, w=1.0, kappa=0.999, Gamma=0.05)
        sc = models.derived_scales(spec)
        log10_coeff = 2 * 99 / sc.xi_loc / np.log(10.0)
        assert log10_coeff == pytest.approx(326.78046661769358, abs=1e-8)

    def test_reciprocal_limit_vectors_coincide(self):
        spec = ModelSpec("HN", "fermion", 9, w=1.0, kappa=0.0, Gamma=0.05)
        s = models.hn_spectral_analytic(spec)
        assert np.allclose(s.right, s.left)
        assert np.allclose(s.eigenvalues.imag, -spec.delta())

    def test_perfect_nonreciprocity_refused(self):
        spec = ModelSpec("HN", "fermion", 9, w=1.0, kappa=1.0, Gamma=0.05)
        with pytest.raises(PerfectNonreciprocity):
            models.hn_spectral_analytic(spec)

    def test_matches_similarity_route(self):
        from nhrelax.ndlinalg import eig_similarity_hn

        spec = ModelSpec("HN", "boson", 30, w=1.0, kappa=0.9, Gamma=0.05)
        H, _ = models.build_hn(spec)
        sc = models.derived_scales(spec)
        s1 = models.hn_spectral_analytic(spec)
        s2 = eig_similarity_hn(H, sc.xi_loc)
        assert np.max(np.abs(s1.eigenvalues - s2.eigenvalues)) < 1e-12
        # vectors agree after sign alignment (relative: entries span e^{38})
        for a in range(30):
            v1 = s1.right[:, a]
            v2 = s2.right[:, a]
            sgn = np.sign((v1 * v2.conj()).real.sum())
            assert np.max(np.abs(v1 - sgn * v2)) < 1e-8 * np.max(np.abs(v1))


class TestBuildSSH:
    def test_gap_value(self):
        spec = ModelSpec("SSH", "fermion", 10, w=1.0, kappa=0.0, Gamma=0.1,
                         u=1.0, gamma_ssh=0.999)
        assert spec.delta() == pytest.approx(0.5995)

    def test_hermitian_limit_real_spectrum(self):
        spec = ModelSpec("SSH", "fermion", 8, w=1.0, kappa=0.0, Gamma=0.0,
                         u=0.7, gamma_ssh=0.0)
        H = models.build_ssh(spec)
        assert np.allclose(H, H.conj().T)
        evals = eig_general(H).eigenvalues
        assert np.max(np.abs(evals.imag)) <= 1e-12

    def test_boundary_termination(self):
        spec = ModelSpec("SSH", "fermion", 3, w=1.0, kappa=0.2, Gamma=0.1,
                         u=0.9, gamma_ssh=0.5)
        H = models.build_ssh(spec)
        assert H.shape == (6, 6)
        assert H[1, 0] == pytest.approx((1.0 + 0.2) / 2)  # intra, down-chain
        assert H[0, 1] == pytest.approx((1.0 - 0.2) / 2)
        assert H[2, 1] == pytest.approx((0.9 + 0.5) / 2)  # inter, down-chain
        assert H[1, 2] == pytest.approx((0.9 - 0.5) / 2)
        assert H[0, 5] == 0.0 and H[5, 0] == 0.0          # no wraparound

    def test_localization_lengths(self):
        spec = ModelSpec("SSH", "fermion", 10, w=1.0, kappa=0.0, Gamma=0.1,
                         u=1.0, gamma_ssh=0.999)
        sc = models.derived_scales(spec)
        assert sc.xi1 == pytest.approx(1.4437367372482727, rel=1e-10)
        assert sc.xi2 == pytest.approx(0.14476482730108395, rel=1e-10)
        assert sc.xi_loc == pytest.approx(sc.xi2)

    def test_reference_spectrum_matches_general(self):
        spec = ModelSpec("SSH", "fermion", 8, w=1.0, kappa=0.1, Gamma=0.1,
                         u=1.0, gamma_ssh=0.4)
        ref = models.reference_eigenvalues(spec)
        gen = np.sort_complex(eig_general(models.build_ssh(spec)).eigenvalues)
        assert np.max(np.abs(np.sort_complex(ref) - gen)) < 1e-10
        assert np.allclose(ref.imag, -spec.delta())


class TestBuildNNN:
    def test_reduces_to_hn(self):
        nnn = ModelSpec("NNN", "fermion", 9, w=1.0, kappa=0.5, Gamma=0.1,
                        T_nnn=0.0, phi=0.0)
        hn = ModelSpec("HN", "fermion", 9, w=1.0, kappa=0.5, Gamma=0.1)
        assert np.allclose(models.build_nnn(nnn), models.build_hn(hn)[0])

    def test_complex_hop_entries(self):
        spec = ModelSpec("NNN", "fermion", 5, w=1.0, kappa=0.999, Gamma=0.1,
                         T_nnn=1.0, phi=np.pi / 2)
        H = models.build_nnn(spec)
        assert H[2, 0] == pytest.approx(0.5j)
        assert H[0, 2] == pytest.approx(-0.5j)

    def test_phase_free_case_real(self):
        spec = ModelSpec("NNN", "fermion", 6, w=1.0, kappa=0.5, Gamma=0.1,
                         T_nnn=0.7, phi=0.0)
        H = models.build_nnn(spec)
        assert np.max(np.abs((H + 1j * spec.delta() * np.eye(6)).imag)) == 0.0


class TestDerivedScales:
    def test_hn_fermion_values(self):
        spec = ModelSpec("HN", "fermion", 100, w=1.0, kappa=0.999, Gamma=0.05)
        sc = models.derived_scales(spec)
        assert sc.J == pytest.approx(0.044710177812216314, abs=1e-15)
        assert sc.Delta == pytest.approx(1.049)
        assert sc.xi_prop == pytest.approx(10.247967157143936, abs=1e-10)
        # tau_evec * Delta = L / xi_loc = 50 ln(1999) = 380.0201167...
        assert sc.tau_evec * sc.Delta == pytest.approx(380.02011672501994, abs=1e-8)

    def test_hn_boson_values(self):
        spec = ModelSpec("HN", "boson", 100, w=1.0, kappa=0.999, Gamma=0.05)
        sc = models.derived_scales(spec)
        assert sc.Delta == pytest.approx(0.949)
        assert sc.xi_prop == pytest.approx(9.7478628731118447, abs=1e-10)

    def test_alt_convention_is_twice(self):
        spec = ModelSpec("HN", "fermion", 10, w=1.0, kappa=0.5, Gamma=0.2)
        sc = models.derived_scales(spec)
        assert sc.xi_prop_alt == pytest.approx(2 * sc.xi_prop)

    def test_monotone_limits(self):
        kappas = np.linspace(0.05, 0.95, 12)
        xis = []
        Js = []
        for k in kappas:
            sc = models.derived_scales(ModelSpec("HN", "fermion", 10, w=1.0,
                                                 kappa=float(k), Gamma=0.1))
            xis.append(sc.xi_loc)
            Js.append(sc.J)
        assert np.all(np.diff(xis) < 0)   # xi_loc decreasing in kappa (-> inf at 0)
        assert np.all(np.diff(Js) < 0)    # J decreasing toward kappa = w

    def test_nnn_has_no_analytic_lengths(self):
        spec = ModelSpec("NNN", "fermion", 8, w=1.0, kappa=0.5, Gamma=0.1,
                         T_nnn=1.0, phi=0.3)
        sc = models.derived_scales(spec)
        with pytest.raises(UnsetForModel):
            sc.require("xi_prop")
        assert sc.Delta == pytest.approx(0.6)
