import numpy as np
import pytest

from randliou import (
    ModelParams,
    apply_direct,
    build_from_dissipation_matrix,
    build_liouvillian,
    dissipation_matrix,
    dump_superoperator,
    jumps_from_coefficients,
    load_superoperator,
    make_basis,
    real_representation,
    sample_coefficients,
    sample_hamiltonian,
)
from randliou.liouvillian import coords_to_matrix, matrix_to_coords, vec

from conftest import build_instance, multiset_max_distance


def random_density(n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


class TestBuild:
    def test_n1_is_zero(self):
        _, superop = build_instance(n=1, beta=2, r=1, g=0.5, seed=0)
        assert superop.matrix.shape == (1, 1)
        assert abs(superop.matrix[0, 0]) < 1e-12

    def test_unitary_case_spectrum(self):
        # W = 0: eigenvalues are -i (eps_k - eps_k'), all differences
        n = 4
        p = ModelParams(n=n, beta=2, r=1, g=1.0, seed=5)
        h = sample_hamiltonian(p)
        superop = build_liouvillian(h, [])
        eps = np.linalg.eigvalsh(h)
        expected = np.array([-1j * (a - b) for a in eps for b in eps])
        got = np.linalg.eigvals(superop.matrix)
        assert multiset_max_distance(got, expected) < 1e-10

    def test_direct_action_oracle(self):
        # vectorized action equals the elementwise Lindblad action
        p, superop = build_instance(n=3, beta=2, r=2, g=0.4, seed=9)
        rng = np.random.default_rng(2)
        for _ in range(20):
            rho = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            lhs = (superop.matrix @ vec(rho)).reshape(3, 3)
            rhs = apply_direct(superop.hamiltonian, superop.jumps, rho)
            assert np.max(np.abs(lhs - rhs)) <= 1e-12

    @pytest.mark.parametrize("beta", [1, 2])
    def test_trace_preservation(self, beta):
        for seed in range(5):
            _, superop = build_instance(n=6, beta=beta, r=2, g=0.7, seed=seed)
            assert superop.trace_defect() <= 1e-10

    def test_rejects_non_hermitian(self):
        rng = np.random.default_rng(0)
        bad = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        with pytest.raises(ValueError, match="Hermitian"):
            build_liouvillian(bad, [])

    def test_rejects_traceful_jump(self):
        p = ModelParams(n=4, beta=2, r=1, g=1.0, seed=0)
        h = sample_hamiltonian(p)
        with pytest.raises(ValueError, match="traceless"):
            build_liouvillian(h, [np.eye(4, dtype=complex)])

    def test_rejects_shape_mismatch(self):
        p = ModelParams(n=4, beta=2, r=1, g=1.0, seed=0)
        h = sample_hamiltonian(p)
        w = np.zeros((3, 3), dtype=complex)
        with pytest.raises(ValueError, match="shape"):
            build_liouvillian(h, [w])


class TestDirectAction:
    def test_identity_with_no_jumps(self):
        p = ModelParams(n=5, beta=2, r=1, g=1.0, seed=1)
        h = sample_hamiltonian(p)
        out = apply_direct(h, [], np.eye(5) / 5.0)
        assert np.max(np.abs(out)) < 1e-14

    def test_trace_free_output(self):
        p, superop = build_instance(n=5, beta=2, r=2, g=0.6, seed=3)
        rng = np.random.default_rng(4)
        for _ in range(5):
            rho = random_density(5, rng)
            out = apply_direct(superop.hamiltonian, superop.jumps, rho)
            assert abs(np.trace(out)) < 1e-12

    def test_hermiticity_preserved(self):
        p, superop = build_instance(n=5, beta=1, r=2, g=0.6, seed=3)
        rng = np.random.default_rng(4)
        for _ in range(10):
            rho = random_density(5, rng)
            out = apply_direct(superop.hamiltonian, superop.jumps, rho)
            assert np.max(np.abs(out - out.conj().T)) <= 1e-12


class TestDissipationForm:
    @pytest.mark.parametrize("n,r", [(2, 1), (3, 2), (4, 3), (6, 2)])
    @pytest.mark.parametrize("beta", [1, 2])
    def test_matches_jump_form(self, n, r, beta):
        p = ModelParams(n=n, beta=beta, r=r, g=0.5, seed=17)
        h = sample_hamiltonian(p)
        basis = make_basis(n)
        coeffs = sample_coefficients(p)
        jumps = jumps_from_coefficients(coeffs, basis, p.g)
        direct = build_liouvillian(h, jumps, params=p)
        viad = build_from_dissipation_matrix(h, basis, dissipation_matrix(coeffs), p.g)
        dev = np.max(np.abs(direct.matrix - viad.matrix))
        assert dev <= 1e-10 * direct.frobenius_norm

    def test_zero_d_is_hamiltonian_only(self):
        n = 3
        p = ModelParams(n=n, beta=2, r=1, g=1.0, seed=2)
        h = sample_hamiltonian(p)
        basis = make_basis(n)
        d = np.zeros((n * n - 1, n * n - 1))
        superop = build_from_dissipation_matrix(h, basis, d, 1.0)
        reference = build_liouvillian(h, [])
        assert np.max(np.abs(superop.matrix - reference.matrix)) < 1e-14

    def test_single_basis_element(self):
        # unit coefficient column: dissipator of exactly one basis element
        n = 2
        p = ModelParams(n=n, beta=2, r=1, g=0.8, seed=2)
        h = sample_hamiltonian(p)
        basis = make_basis(n)
        coeffs = np.zeros((3, 1), dtype=complex)
        coeffs[0, 0] = 1.0
        viad = build_from_dissipation_matrix(h, basis, dissipation_matrix(coeffs), p.g)
        direct = build_liouvillian(h, [p.g * basis.traceless[0]])
        assert np.max(np.abs(viad.matrix - direct.matrix)) < 1e-12


class TestRealRepresentation:
    def test_is_real_and_isospectral(self, small_instance):
        _, superop = small_instance
        real_form = real_representation(superop)
        assert real_form.dtype == np.float64
        got = np.linalg.eigvals(real_form)
        expected = np.linalg.eigvals(superop.matrix)
        assert multiset_max_distance(got, expected) < 1e-8

    def test_trace_matches(self, small_instance):
        _, superop = small_instance
        real_form = real_representation(superop)
        assert np.trace(real_form) == pytest.approx(
            np.trace(superop.matrix).real, abs=1e-9
        )

    def test_coords_roundtrip(self):
        rng = np.random.default_rng(6)
        rho = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = rho + rho.conj().T
        coords = matrix_to_coords(rho)
        assert np.isrealobj(coords)
        back = coords_to_matrix(coords, 4)
        assert np.max(np.abs(back - rho)) < 1e-12

    def test_dissipativity(self):
        # all eigenvalues in the closed left half plane, up to tol_zero
        for seed in range(4):
            _, superop = build_instance(n=5, beta=2, r=2, g=0.5, seed=seed)
            eigs = np.linalg.eigvals(real_representation(superop))
            assert eigs.real.max() <= superop.tol_zero

    def test_conjugation_symmetric_spectrum(self, small_instance):
        _, superop = small_instance
        eigs = np.linalg.eigvals(real_representation(superop))
        assert multiset_max_distance(eigs, eigs.conj()) < 1e-8 * superop.frobenius_norm


class TestDump:
    def test_roundtrip(self, tmp_path, small_instance):
        params, superop = small_instance
        path = tmp_path / "L.bin"
        dump_superoperator(superop, path)
        matrix, header = load_superoperator(path)
        assert np.array_equal(matrix, superop.matrix)
        assert header["n"] == params.n
        assert header["beta"] == params.beta
        assert header["r"] == params.r
        assert header["g"] == params.g
        assert header["seed"] == params.seed
        assert header["convention"] == "row-stacking"

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a dump at all" * 4)
        with pytest.raises(ValueError, match="magic"):
            load_superoperator(path)
