import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randliou import (
    ModelParams,
    dissipation_matrix,
    jumps_from_coefficients,
    make_basis,
    sample_coefficients,
    sample_hamiltonian,
    sample_jump_operators,
    stream_rng,
)


def gram_matrix(elements):
    return np.array(
        [[np.trace(a.conj().T @ b) for b in elements] for a in elements]
    )


class TestModelParams:
    def test_geff_definition(self):
        p = ModelParams(n=80, beta=2, r=2, g=1.0, seed=0)
        assert p.g_eff == pytest.approx(640.0**0.25, rel=1e-12)
        assert p.g_eff == pytest.approx(5.0297, rel=1e-4)

    def test_geff_roundtrip(self):
        p = ModelParams(n=13, beta=1, r=3, g=0.0371, seed=0)
        back = ModelParams.from_geff(13, 1, 3, p.g_eff, 0)
        assert back.g == pytest.approx(p.g, rel=1e-14)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n=0, beta=2, r=1, g=1.0, seed=0),
            dict(n=4, beta=3, r=1, g=1.0, seed=0),
            dict(n=4, beta=2, r=0, g=1.0, seed=0),
            dict(n=4, beta=2, r=1, g=0.0, seed=0),
            dict(n=4, beta=2, r=1, g=-1.0, seed=0),
            dict(n=4, beta=2, r=1, g=1.0, seed=0, realization=-1),
        ],
    )
    def test_invalid_params(self, kwargs):
        with pytest.raises(ValueError):
            ModelParams(**kwargs)


class TestBasis:
    def test_n1_only_identity(self):
        basis = make_basis(1)
        assert len(basis.traceless) == 0
        assert np.allclose(basis.identity_element, [[1.0]])

    def test_n2_gram_identity(self):
        basis = make_basis(2)
        assert len(basis.traceless) == 3
        gram = gram_matrix(basis.elements)
        assert np.max(np.abs(gram - np.eye(4))) < 1e-12

    def test_n4_completeness(self):
        # sum_{j>=1} |(G_j)_ab|^2 = 1 - delta_ab / n, entrywise
        basis = make_basis(4)
        assert len(basis.traceless) == 15
        total = sum(np.abs(g) ** 2 for g in basis.traceless)
        assert np.max(np.abs(total - (1.0 - np.eye(4) / 4.0))) < 1e-12

    @given(n=st.integers(min_value=1, max_value=16))
    @settings(max_examples=16, deadline=None)
    def test_orthonormality_up_to_16(self, n):
        basis = make_basis(n)
        gram = gram_matrix(basis.elements)
        assert np.max(np.abs(gram - np.eye(n * n))) <= 1e-12

    def test_all_traceless(self):
        basis = make_basis(5)
        for mat in basis.traceless:
            assert abs(np.trace(mat)) < 1e-12


class TestHamiltonian:
    def test_n1_single_gaussian(self):
        p = ModelParams(n=1, beta=2, r=1, g=1.0, seed=3)
        h = sample_hamiltonian(p)
        assert h.shape == (1, 1)
        assert abs(h[0, 0].imag) == 0.0

    @pytest.mark.parametrize("beta", [1, 2])
    def test_hermitian(self, beta):
        p = ModelParams(n=9, beta=beta, r=1, g=1.0, seed=3)
        h = sample_hamiltonian(p)
        assert np.max(np.abs(h - h.conj().T)) == 0.0
        if beta == 1:
            assert np.isrealobj(h)

    @pytest.mark.parametrize("beta,expected", [(2, 1.0), (1, 0.5 + 0.5 / 12)])
    def test_trace_square_moment(self, beta, expected):
        # ensemble mean of Tr(H^2)/n^2 under exp(-Tr H^2 / 2)
        n, draws = 12, 1500
        acc = 0.0
        for k in range(draws):
            p = ModelParams(n=n, beta=beta, r=1, g=1.0, seed=11, realization=k)
            h = sample_hamiltonian(p)
            acc += np.trace(h @ h).real / n**2
        mean = acc / draws
        # std of the estimator is ~ sqrt(2)/n/sqrt(draws) ~ 0.003
        assert mean == pytest.approx(expected, abs=0.02)

    @pytest.mark.parametrize("beta", [1, 2])
    def test_eigenvalue_std(self, beta):
        n = 40
        values = []
        for k in range(60):
            p = ModelParams(n=n, beta=beta, r=1, g=1.0, seed=5, realization=k)
            values.append(np.linalg.eigvalsh(sample_hamiltonian(p)))
        std = np.concatenate(values).std()
        assert std == pytest.approx(np.sqrt(beta * n / 2.0), rel=0.05)


class TestJumpOperators:
    @pytest.mark.parametrize("beta", [1, 2])
    def test_traceless_and_dtype(self, beta):
        p = ModelParams(n=8, beta=beta, r=3, g=0.4, seed=2)
        jumps = sample_jump_operators(p)
        assert len(jumps) == 3
        for w in jumps:
            assert abs(np.trace(w)) <= 1e-12 * np.linalg.norm(w)
            assert np.isrealobj(w) == (beta == 1)

    @pytest.mark.parametrize("beta", [1, 2])
    def test_entry_second_moments(self, beta):
        # off-diagonal mean square beta g^2, diagonal beta g^2 (1 - 1/n)
        n, g, draws = 10, 0.7, 1200
        off_acc, diag_acc = [], []
        for k in range(draws):
            p = ModelParams(n=n, beta=beta, r=1, g=g, seed=21, realization=k)
            w = sample_jump_operators(p)[0]
            off = w[~np.eye(n, dtype=bool)]
            off_acc.append(np.mean(np.abs(off) ** 2))
            diag_acc.append(np.mean(np.abs(np.diag(w)) ** 2))
        target_off = beta * g * g
        # 3 sigma Monte Carlo window
        tol_off = 3.0 * target_off * np.sqrt(2.0 / (beta * n * (n - 1) * draws))
        assert abs(np.mean(off_acc) - target_off) < tol_off
        target_diag = beta * g * g * (1.0 - 1.0 / n)
        tol_diag = 3.0 * target_diag * np.sqrt(2.0 / (beta * n * draws))
        assert abs(np.mean(diag_acc) - target_diag) < tol_diag

    def test_covariance_matches_basis_expansion(self):
        # direct sampling and the basis route draw from the same measure
        n, g, draws = 3, 0.5, 4000
        basis = make_basis(n)
        rng = np.random.default_rng(99)
        direct, expanded = [], []
        for k in range(draws):
            p = ModelParams(n=n, beta=2, r=1, g=g, seed=31, realization=k)
            direct.append(sample_jump_operators(p)[0].reshape(-1))
            coeffs = (
                rng.normal(size=(n * n - 1, 1)) + 1j * rng.normal(size=(n * n - 1, 1))
            )
            expanded.append(jumps_from_coefficients(coeffs, basis, g)[0].reshape(-1))
        cov_direct = np.cov(np.array(direct).T)
        cov_expanded = np.cov(np.array(expanded).T)
        scale = np.abs(cov_expanded).max()
        assert np.max(np.abs(cov_direct - cov_expanded)) < 0.15 * scale

    def test_reproducibility(self):
        p = ModelParams(n=6, beta=2, r=2, g=0.3, seed=123, realization=4)
        h1, h2 = sample_hamiltonian(p), sample_hamiltonian(p)
        assert np.array_equal(h1, h2)
        w1, w2 = sample_jump_operators(p), sample_jump_operators(p)
        for a, b in zip(w1, w2):
            assert np.array_equal(a, b)

    def test_streams_are_independent(self):
        p = ModelParams(n=6, beta=2, r=2, g=0.3, seed=123, realization=4)
        h = sample_hamiltonian(p)
        w = sample_jump_operators(p)
        assert not np.allclose(w[0], w[1])
        other = p.with_realization(5)
        assert not np.array_equal(sample_hamiltonian(other), h)
        # stream draws do not depend on call order
        rng = stream_rng(p, 1)
        assert np.array_equal(sample_jump_operators(p)[0], w[0])
        del rng


class TestDissipationMatrix:
    def test_zero(self):
        d = dissipation_matrix(np.zeros((8, 2)))
        assert np.array_equal(d, np.zeros((8, 8)))

    def test_unit_column(self):
        w = np.zeros((8, 1))
        w[0, 0] = 1.0
        d = dissipation_matrix(w)
        expected = np.zeros((8, 8))
        expected[0, 0] = 1.0
        assert np.array_equal(d, expected)

    def test_psd_and_rank(self):
        p = ModelParams(n=4, beta=2, r=2, g=1.0, seed=8)
        coeffs = sample_coefficients(p)
        d = dissipation_matrix(coeffs)
        assert np.max(np.abs(d - d.conj().T)) < 1e-12
        eigs = np.linalg.eigvalsh(d)
        assert eigs.min() > -1e-12
        assert np.sum(eigs > 1e-10 * eigs.max()) == 2

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            dissipation_matrix(np.zeros(5))
