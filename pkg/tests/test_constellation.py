"""Constellation, covariance and spectrum behavior.

Independent oracles: hand-computed characteristic polynomials (via np.roots),
brute-force superposition loops, and Monte Carlo covariance estimates.
"""

import numpy as np
import pytest

from mbmlink.constellation import (
    ConstellationSampler,
    CorrelationModel,
    CovarianceMatrix,
    NotComparableError,
    Spectrum,
    build_user_covariance,
    eigen_spectrum,
    joint_covariance,
    lemma1_spectrum,
    majorizes,
    message_tuples,
    sample_constellation,
    superpose,
)


class TestCorrelationModel:
    def test_rejects_rho_out_of_range(self):
        with pytest.raises(ValueError):
            CorrelationModel(kind="uniform", rho=1.0)
        with pytest.raises(ValueError):
            CorrelationModel(kind="exponential", rho=-0.1)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            CorrelationModel(kind="toeplitz", rho=0.5)

    def test_coefficient_matches_matrix(self):
        for model in (CorrelationModel(),
                      CorrelationModel("uniform", 0.3),
                      CorrelationModel("exponential", 0.7)):
            m = model.matrix(5)
            for n in range(5):
                for l in range(5):
                    assert m[n, l] == pytest.approx(model.coefficient(n, l))


class TestBuildUserCovariance:
    def test_uncorrelated_is_identity(self):
        cov = build_user_covariance(3, CorrelationModel())
        np.testing.assert_array_equal(cov.entries, np.eye(3))

    def test_uniform_2x2_closed_form_eigenvalues(self):
        # closed form for a 2x2 with off-diagonal rho: eigenvalues 1 +- rho
        cov = build_user_covariance(2, CorrelationModel("uniform", 0.9))
        np.testing.assert_allclose(cov.entries, [[1.0, 0.9], [0.9, 1.0]])
        spec = eigen_spectrum(cov)
        np.testing.assert_allclose(spec.eigenvalues, [1.9, 0.1], atol=1e-12)

    def test_exponential_3x3_char_poly_oracle(self):
        # char poly of [[1,.5,.25],[.5,1,.5],[.25,.5,1]] computed by hand:
        # trace 3, principal-minor sum 2.4375, det 0.5625
        oracle = np.sort(np.roots([1.0, -3.0, 2.4375, -0.5625]).real)[::-1]
        np.testing.assert_allclose(
            oracle, [1.843070330817, 0.75, 0.406929669183], atol=1e-9)
        cov = build_user_covariance(3, CorrelationModel("exponential", 0.5))
        off = sorted({round(cov.entries[i, j], 12)
                      for i in range(3) for j in range(3) if i != j})
        assert off == [0.25, 0.5]
        np.testing.assert_allclose(eigen_spectrum(cov).eigenvalues, oracle, atol=1e-9)
        assert eigen_spectrum(cov).eigenvalues[-1] > 0  # PSD

    def test_rejects_zero_points(self):
        with pytest.raises(ValueError):
            build_user_covariance(0, CorrelationModel())

    def test_psd_for_all_kinds_and_sizes(self):
        for kind in CorrelationModel.KINDS:
            for M in (1, 2, 5, 17):
                for rho in (0.0, 0.5, 0.99):
                    cov = build_user_covariance(M, CorrelationModel(kind, rho))
                    w = np.linalg.eigvalsh(cov.entries)
                    assert w[0] >= -1e-9 * max(w[-1], 1.0)
                    np.testing.assert_allclose(np.diag(cov.entries), 1.0)


class TestCovarianceMatrix:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            CovarianceMatrix(np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_rejects_negative_definite(self):
        with pytest.raises(ValueError, match="negative eigenvalue"):
            CovarianceMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_entries_read_only(self):
        cov = build_user_covariance(2, CorrelationModel())
        with pytest.raises(ValueError):
            cov.entries[0, 0] = 5.0


class TestSampleConstellation:
    def test_deterministic_given_seed(self):
        cov = build_user_covariance(4, CorrelationModel())
        a = sample_constellation(cov, seed=123)
        b = sample_constellation(cov, seed=123)
        np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
        assert a.seed == 123

    def test_identity_gives_standard_normal_draws(self):
        cov = build_user_covariance(4, CorrelationModel())
        got = sample_constellation(cov, seed=7).amplitudes
        expected = np.random.default_rng(7).standard_normal(4)
        np.testing.assert_allclose(np.sort(got), np.sort(expected), atol=1e-12)

    def test_rank_one_covariance_gives_equal_amplitudes(self):
        cov = CovarianceMatrix(np.ones((2, 2)))  # singular, rank 1
        c = sample_constellation(cov, seed=5)
        assert c.amplitudes[0] == pytest.approx(c.amplitudes[1], abs=1e-12)

    def test_empirical_correlation_matches_rho(self):
        # 10^4 draws of a uniform rho=0.9 pair: sample correlation within 0.02
        cov = build_user_covariance(256, CorrelationModel("uniform", 0.9))
        sampler = ConstellationSampler(cov)
        seeds = np.random.SeedSequence(11).generate_state(10_000, dtype=np.uint64)
        draws = np.array([sampler.sample(int(s)).amplitudes[:2] for s in seeds])
        corr = np.corrcoef(draws.T)[0, 1]
        assert abs(corr - 0.9) < 0.02

    def test_empirical_covariance_converges(self):
        cov = build_user_covariance(3, CorrelationModel("exponential", 0.6))
        sampler = ConstellationSampler(cov)
        seeds = np.random.SeedSequence(3).generate_state(20_000, dtype=np.uint64)
        draws = np.array([sampler.sample(int(s)).amplitudes for s in seeds])
        emp = draws.T @ draws / len(draws)
        np.testing.assert_allclose(emp, cov.entries, atol=0.05)


class TestSuperpose:
    def test_single_user_identity(self):
        cov = build_user_covariance(5, CorrelationModel())
        user = sample_constellation(cov, seed=2)
        joint = superpose([user])
        np.testing.assert_array_equal(joint.points, user.amplitudes)
        assert joint.K == 1 and joint.M == 5

    def test_two_user_exhaustive(self):
        from mbmlink.constellation import UserConstellation
        u1 = UserConstellation(np.array([1.0, 2.0]))
        u2 = UserConstellation(np.array([10.0, 20.0]))
        joint = superpose([u1, u2])
        # row-major, m_1 slowest: (0,0),(0,1),(1,0),(1,1)
        np.testing.assert_array_equal(joint.points, [11.0, 21.0, 12.0, 22.0])

    def test_three_user_brute_force(self):
        rng = np.random.default_rng(9)
        from mbmlink.constellation import UserConstellation
        users = [UserConstellation(rng.standard_normal(3)) for _ in range(3)]
        joint = superpose(users)
        assert joint.points.size == 27
        for flat, (m1, m2, m3) in enumerate(message_tuples(3, 3)):
            brute = (users[0].amplitudes[m1] + users[1].amplitudes[m2]
                     + users[2].amplitudes[m3])
            assert joint.points[flat] == pytest.approx(brute, abs=0.0)
            assert joint.point((m1, m2, m3)) == pytest.approx(brute, abs=0.0)

    def test_mismatched_sizes_rejected(self):
        from mbmlink.constellation import UserConstellation
        u1 = UserConstellation(np.array([1.0, 2.0]))
        u2 = UserConstellation(np.array([1.0, 2.0, 3.0]))
        with pytest.raises(ValueError, match="share M"):
            superpose([u1, u2])

    def test_scaling_users_scales_points(self):
        from mbmlink.constellation import UserConstellation
        rng = np.random.default_rng(1)
        amps = [rng.standard_normal(4) for _ in range(2)]
        joint = superpose([UserConstellation(a) for a in amps])
        scaled = superpose([UserConstellation(3.0 * a) for a in amps])
        np.testing.assert_allclose(scaled.points, 3.0 * joint.points, rtol=1e-15)


class TestJointCovariance:
    def test_two_user_two_point_block_pattern(self):
        # D blocks on the diagonal, identity blocks elsewhere
        cov = joint_covariance(2, 2)
        expected = np.array([[2, 1, 1, 0],
                             [1, 2, 0, 1],
                             [1, 0, 2, 1],
                             [0, 1, 1, 2]], dtype=float)
        np.testing.assert_array_equal(cov.entries, expected)

    def test_single_user_uncorrelated_is_identity(self):
        cov = joint_covariance(1, 3)
        np.testing.assert_array_equal(cov.entries, np.eye(3))

    def test_entry_formula_match_count(self):
        # uncorrelated: entry = number of agreeing message indices
        K, M = 3, 2
        cov = joint_covariance(K, M)
        tuples = list(message_tuples(K, M))
        for i, a in enumerate(tuples):
            for j, b in enumerate(tuples):
                agree = sum(x == y for x, y in zip(a, b))
                assert cov.entries[i, j] == agree

    def test_correlated_entry_formula(self):
        model = CorrelationModel("exponential", 0.5)
        K, M = 2, 3
        cov = joint_covariance(K, M, model)
        tuples = list(message_tuples(K, M))
        for i, a in enumerate(tuples):
            for j, b in enumerate(tuples):
                want = sum(model.coefficient(x, y) for x, y in zip(a, b))
                assert cov.entries[i, j] == pytest.approx(want, abs=1e-12)

    def test_monte_carlo_covariance_oracle(self):
        # E{x(m) x(m')^T} over 10^5 sampled joint constellations
        model = CorrelationModel("uniform", 0.5)
        cov = joint_covariance(2, 3, model)
        user_cov = build_user_covariance(3, model)
        factor = ConstellationSampler(user_cov)._factor
        rng = np.random.default_rng(17)
        R = 100_000
        d1 = rng.standard_normal((R, 3)) @ factor.T
        d2 = rng.standard_normal((R, 3)) @ factor.T
        pts = (d1[:, :, None] + d2[:, None, :]).reshape(R, 9)
        emp = pts.T @ pts / R
        np.testing.assert_allclose(emp, cov.entries, atol=0.05)

    def test_dimension_cap(self):
        with pytest.raises(ValueError, match="cap"):
            joint_covariance(7, 4)  # 4^7 = 16384
        with pytest.raises(ValueError, match="cap"):
            joint_covariance(3, 4, dim_cap=63)
        joint_covariance(3, 4, dim_cap=64)  # exactly at the cap is accepted

    def test_diagonal_equals_k(self):
        for K, M in ((1, 4), (2, 3), (3, 2)):
            cov = joint_covariance(K, M, CorrelationModel("exponential", 0.3))
            np.testing.assert_allclose(np.diag(cov.entries), K)


class TestSpectra:
    def test_lemma1_counts_and_values(self):
        spec = lemma1_spectrum(3, 3)
        w = spec.eigenvalues
        assert w[0] == 27.0
        assert np.sum(w == 9.0) == 6
        assert np.sum(w == 0.0) == 20
        assert len(spec) == 27

    def test_lemma1_single_user_is_identity_spectrum(self):
        np.testing.assert_array_equal(lemma1_spectrum(1, 4).eigenvalues, np.ones(4))

    def test_lemma1_two_user_two_point(self):
        np.testing.assert_array_equal(lemma1_spectrum(2, 2).eigenvalues, [4, 2, 2, 0])

    def test_joint_2_2_char_poly_oracle(self):
        # det(S - x I) for the 4x4 block matrix: x^4 - 8x^3 + 20x^2 - 16x
        oracle = np.sort(np.roots([1.0, -8.0, 20.0, -16.0, 0.0]).real)[::-1]
        np.testing.assert_allclose(oracle, [4.0, 2.0, 2.0, 0.0], atol=1e-6)
        got = eigen_spectrum(joint_covariance(2, 2)).eigenvalues
        np.testing.assert_allclose(got, [4.0, 2.0, 2.0, 0.0], atol=1e-8)

    def test_identity_spectrum(self):
        spec = eigen_spectrum(np.eye(5))
        np.testing.assert_array_equal(spec.eigenvalues, np.ones(5))

    def test_eigen_matches_lemma_3_3(self):
        got = eigen_spectrum(joint_covariance(3, 3))
        np.testing.assert_allclose(got.eigenvalues,
                                   lemma1_spectrum(3, 3).eigenvalues, atol=1e-8)

    def test_eigen_rejects_nonsymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            eigen_spectrum(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_lemma_holds_over_grid(self):
        # spectrum lemma for K in 1..3, M in 2..5, tolerance 1e-8
        for K in (1, 2, 3):
            for M in (2, 3, 4, 5):
                numeric = eigen_spectrum(joint_covariance(K, M)).eigenvalues
                analytic = lemma1_spectrum(K, M).eigenvalues
                np.testing.assert_allclose(numeric, analytic, atol=1e-8)
                # trace identity: K * M^K
                assert numeric.sum() == pytest.approx(K * M ** K, rel=1e-10)

    def test_zero_count_nondecreasing(self):
        def zeros(K, M):
            return M ** K - 1 - K * (M - 1)

        for M in (2, 3, 4, 5):
            assert zeros(2, M) <= zeros(3, M)
        for K in (2, 3):
            for M in (2, 3, 4):
                assert zeros(K, M) <= zeros(K, M + 1)


class TestMajorizes:
    def test_textbook_pair(self):
        assert majorizes(Spectrum([2.0, 0.0]), Spectrum([1.0, 1.0]))
        assert not majorizes(Spectrum([1.0, 1.0]), Spectrum([2.0, 0.0]))

    def test_reflexive(self):
        s = Spectrum([3.0, 2.0, 1.0])
        assert majorizes(s, s)

    def test_joint_majorizes_flat(self):
        spec = eigen_spectrum(joint_covariance(2, 2))
        flat = Spectrum([2.0, 2.0, 2.0, 2.0])  # equal trace 8
        assert majorizes(spec, flat)
        assert not majorizes(flat, spec)

    def test_uncorrelated_joint_majorizes_flat_all_sizes(self):
        for K in (2, 3):
            for M in (2, 3, 4):
                spec = eigen_spectrum(joint_covariance(K, M))
                flat = Spectrum(np.full(M ** K, float(K)))
                assert majorizes(spec, flat)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            majorizes(Spectrum([1.0]), Spectrum([0.5, 0.5]))

    def test_unequal_totals_not_comparable(self):
        with pytest.raises(NotComparableError):
            majorizes(Spectrum([2.0, 1.0]), Spectrum([1.0, 1.0]))
