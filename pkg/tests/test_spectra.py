import csv

import numpy as np
import pytest

from randliou import (
    ModelParams,
    build_liouvillian,
    density_cut,
    diagonalize,
    gap_distribution,
    marginal_density,
    sample_hamiltonian,
    summarize,
)
from randliou.errors import DegenerateSpectrumError
from randliou.spectra import (
    SUMMARY_FIELDS,
    Spectrum,
    preset_cuts,
    spectrum_record,
    write_summary_table,
)

from conftest import build_instance, multiset_max_distance


def charpoly_roots(matrix):
    """Eigenvalues via Faddeev-LeVerrier coefficients and companion roots.

    Independent of the LAPACK path used by diagonalize (the polynomial is
    built from matrix products alone).
    """
    n = matrix.shape[0]
    coeffs = [1.0 + 0.0j]
    m = np.zeros_like(matrix)
    for k in range(1, n + 1):
        m = matrix @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(matrix @ m) / k)
    return np.roots(np.array(coeffs))


def fake_spectrum(eigenvalues, zero_index=0):
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    n = int(round(np.sqrt(eigenvalues.size)))
    return Spectrum(
        eigenvalues=eigenvalues,
        n=n,
        zero_mode_index=zero_index,
        frobenius_norm=float(np.linalg.norm(eigenvalues)),
    )


class TestDiagonalize:
    def test_n1_spectrum_is_zero(self):
        _, superop = build_instance(n=1, beta=2, r=1, g=0.3, seed=0)
        spectrum = diagonalize(superop)
        assert spectrum.eigenvalues.shape == (1,)
        assert abs(spectrum.eigenvalues[0]) < 1e-12

    def test_unitary_case_errors_and_diagnostic_flag(self):
        # dissipationless instance: n-fold degenerate stationary space
        n = 4
        p = ModelParams(n=n, beta=2, r=1, g=1.0, seed=3)
        h = sample_hamiltonian(p)
        superop = build_liouvillian(h, [])
        with pytest.raises(DegenerateSpectrumError):
            diagonalize(superop)
        spectrum = diagonalize(superop, allow_degenerate=True)
        assert spectrum.degenerate_zero_modes == n
        eps = np.linalg.eigvalsh(h)
        expected = np.array([-1j * (a - b) for a in eps for b in eps])
        assert multiset_max_distance(spectrum.eigenvalues, expected) < 1e-10

    def test_matches_charpoly_roots(self):
        _, superop = build_instance(n=2, beta=2, r=2, g=0.5, seed=11)
        spectrum = diagonalize(superop)
        expected = charpoly_roots(superop.matrix)
        assert multiset_max_distance(spectrum.eigenvalues, expected) <= 1e-10

    def test_zero_mode_and_dissipativity(self, small_instance):
        _, superop = small_instance
        spectrum = diagonalize(superop)
        assert abs(spectrum.zero_mode) <= spectrum.tol_zero
        assert spectrum.eigenvalues.real.max() <= spectrum.tol_zero
        assert spectrum.degenerate_zero_modes == 1

    def test_conjugation_symmetry(self, small_instance):
        _, superop = small_instance
        spectrum = diagonalize(superop)
        assert (
            multiset_max_distance(spectrum.eigenvalues, spectrum.eigenvalues.conj())
            < 1e-8 * superop.frobenius_norm
        )

    def test_trace_identity(self, small_instance):
        _, superop = small_instance
        spectrum = diagonalize(superop)
        dev = abs(spectrum.eigenvalues.sum() - np.trace(superop.matrix))
        assert dev <= 1e-8 * superop.frobenius_norm

    def test_residuals_with_and_without_vectors(self, small_instance):
        _, superop = small_instance
        with_vec = diagonalize(superop, vectors=True, residual_sample=12)
        assert with_vec.max_residual <= 1e-8 * superop.frobenius_norm
        assert with_vec.right_vectors.shape == (25, 25)
        without = diagonalize(superop, residual_sample=12)
        assert without.right_vectors is None
        assert without.max_residual <= 1e-8 * superop.frobenius_norm
        skipped = diagonalize(superop, residual_sample=0)
        assert skipped.max_residual is None

    def test_eigenvectors_satisfy_eigenproblem(self, small_instance):
        _, superop = small_instance
        spectrum = diagonalize(superop, vectors=True)
        for idx in (0, 7, spectrum.zero_mode_index):
            v = spectrum.right_vectors[:, idx]
            res = np.linalg.norm(
                superop.matrix @ v - spectrum.eigenvalues[idx] * v
            ) / np.linalg.norm(v)
            assert res <= 1e-8 * superop.frobenius_norm


class TestSummarize:
    def test_hand_example(self):
        spectrum = fake_spectrum([0.0, -1.0, -1.0 + 1j, -1.0 - 1j])
        summary = summarize(spectrum)
        assert summary.R == pytest.approx(-0.75)
        assert summary.X**2 == pytest.approx(3.0 / 16.0)
        assert summary.Y**2 == pytest.approx(0.5)
        assert summary.gap == pytest.approx(1.0)

    def test_unitary_case(self):
        n = 4
        p = ModelParams(n=n, beta=2, r=1, g=1.0, seed=3)
        h = sample_hamiltonian(p)
        superop = build_liouvillian(h, [])
        spectrum = diagonalize(superop, allow_degenerate=True)
        summary = summarize(spectrum)
        eps = np.linalg.eigvalsh(h)
        y2 = np.mean([(a - b) ** 2 for a in eps for b in eps])
        assert summary.X == pytest.approx(0.0, abs=1e-10)
        assert summary.Y**2 == pytest.approx(y2, rel=1e-8)
        assert summary.gap == pytest.approx(0.0, abs=1e-10)

    def test_geff_attached(self, small_instance):
        params, superop = small_instance
        summary = summarize(diagonalize(superop), params)
        assert summary.g_eff == pytest.approx(params.g_eff)


class TestDensityCut:
    def test_empty_strip_flagged(self):
        spectrum = fake_spectrum([0.0, -1.0, -1.0 + 1j, -1.0 - 1j])
        cut = density_cut(spectrum, "real", c=50.0, strip_width=0.1)
        assert cut.empty
        assert cut.count == 0

    def test_mass_convention(self, small_instance):
        # integral equals (points in strip) / n^2
        _, superop = small_instance
        spectrum = diagonalize(superop)
        cut = density_cut(spectrum, "imag", c=0.0, strip_width=1.0)
        assert cut.integral() == pytest.approx(cut.count / spectrum.eigenvalues.size)

    def test_horizontal_cut_symmetric(self):
        # conjugation symmetry: cut through Im = 0 is symmetric in content
        _, superop = build_instance(n=6, beta=2, r=2, g=0.4, seed=5)
        spectrum = diagonalize(superop)
        lam = spectrum.eigenvalues
        keep = np.abs(lam.imag) <= 0.05
        assert multiset_max_distance(lam[keep], lam[keep].conj()) < 1e-8

    def test_presets_present(self, small_instance):
        _, superop = small_instance
        spectrum = diagonalize(superop)
        cuts = preset_cuts(spectrum)
        assert set(cuts) == {"re_R", "re_R_plus_X", "im_0", "im_Y"}

    def test_bad_axis_and_width(self, small_instance):
        _, superop = small_instance
        spectrum = diagonalize(superop)
        with pytest.raises(ValueError):
            density_cut(spectrum, "diagonal", 0.0, 1.0)
        with pytest.raises(ValueError):
            density_cut(spectrum, "real", 0.0, -1.0)


class TestMarginal:
    def test_hand_example_omit_zero(self):
        spectrum = fake_spectrum([0.0, -1.0, -1.0 + 1j, -1.0 - 1j])
        marginal = marginal_density(spectrum, "imag", bins=20, omit_zero_mode=True)
        assert marginal.total == 3
        # masses sit at -1, 0, +1: three populated bins, one per value
        populated = np.flatnonzero(marginal.density > 0)
        assert populated.size == 3
        for value in (-1.0, 0.0, 1.0):
            idx = np.searchsorted(marginal.edges, value, side="right") - 1
            idx = min(idx, marginal.density.size - 1)
            assert marginal.density[idx] > 0

    def test_unit_mass(self, small_instance):
        _, superop = small_instance
        spectrum = diagonalize(superop)
        for axis in ("real", "imag"):
            marginal = marginal_density(spectrum, axis, bins=30)
            assert marginal.integral() == pytest.approx(1.0)

    def test_bin_floor(self, small_instance):
        _, superop = small_instance
        spectrum = diagonalize(superop)
        with pytest.raises(ValueError):
            marginal_density(spectrum, "imag", bins=5)


class TestGapDistribution:
    def test_identical_spectra_zero_width(self):
        dist = gap_distribution([1.5] * 25)
        assert dist.mean == pytest.approx(1.5)
        assert dist.std == pytest.approx(0.0)
        assert dist.relative_width == pytest.approx(0.0)

    def test_determinism(self):
        gaps = [
            summarize(diagonalize(build_instance(n=3, beta=2, r=2, g=0.5, seed=k)[1])).gap
            for k in range(20)
        ]
        first = gap_distribution(gaps)
        second = gap_distribution(gaps)
        assert np.array_equal(first.density, second.density)
        assert np.array_equal(first.scaled_density, second.scaled_density)

    def test_minimum_count(self):
        with pytest.raises(ValueError):
            gap_distribution([1.0] * 19)


class TestExports:
    def test_summary_table_schema(self, tmp_path, small_instance):
        params, superop = small_instance
        summary = summarize(diagonalize(superop), params)
        path = tmp_path / "summaries.csv"
        write_summary_table(path, [(params, summary)])
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == SUMMARY_FIELDS
        assert rows[1][0] == str(params.n)
        assert float(rows[1][5]) == pytest.approx(summary.R)

    def test_spectrum_record_roundtrip(self, small_instance):
        import json

        params, superop = small_instance
        spectrum = diagonalize(superop)
        record = json.loads(json.dumps(spectrum_record(params, spectrum)))
        assert record["n"] == params.n
        assert len(record["eigenvalues"]) == params.n**2
        assert record["summary"]["gap"] == pytest.approx(summarize(spectrum).gap)
