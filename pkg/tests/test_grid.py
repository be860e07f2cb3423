"""Grid, spectral calculus, norms, shifts, and serialization."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from llewave import Grid, norm, second_derivative, shift
from llewave.grid import (
    ComplexField,
    evenness_defect,
    field_from_json,
    field_from_record,
    field_to_csv,
    field_to_json,
    field_to_record,
    first_derivative,
    even_basis,
    inner_l2,
    reflect,
)


def random_bandlimited(grid, seed, n_modes=12):
    """Smooth periodic field from low-order Fourier modes (exactly resolved)."""
    rng = np.random.default_rng(seed)
    k = grid.wavenumbers
    coeffs = np.zeros(grid.n_points, dtype=complex)
    order = np.argsort(np.abs(k))
    idx = order[:n_modes]
    coeffs[idx] = rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)
    return ComplexField(grid, np.fft.ifft(coeffs) * grid.n_points)


class TestGridConstruction:
    def test_spacing_and_points(self):
        g = Grid(8, 4.0)
        assert g.dx == 1.0
        assert_allclose(g.points, np.arange(-4.0, 4.0))

    def test_wavenumbers_pi_over_l_multiples(self):
        g = Grid(8, 4.0)
        expected = (np.pi / 4.0) * np.array([0, 1, 2, 3, -4, -3, -2, -1])
        assert_allclose(g.wavenumbers, expected)

    def test_wavenumbers_pm_pairs_except_nyquist(self):
        g = Grid(64, 10.0)
        k = np.sort(g.wavenumbers)
        # all nonzero non-Nyquist values appear with both signs
        positives = k[k > 0]
        for kk in positives[:-0 or None]:
            if not np.isclose(kk, np.max(np.abs(k))):
                assert np.any(np.isclose(k, -kk))

    def test_odd_n_rejected(self):
        with pytest.raises(ValueError):
            Grid(7, 1.0)
        with pytest.raises(ValueError):
            Grid(64, -1.0)


class TestSecondDerivative:
    def test_constant_maps_to_zero(self, grid):
        c = ComplexField(grid, np.full(grid.n_points, 2.0 - 1.5j))
        assert norm(second_derivative(c), "Linf") < 1e-12

    def test_fourier_eigenfunction(self, grid):
        k0 = grid.wavenumbers[5]
        f = ComplexField(grid, np.exp(1j * k0 * grid.points))
        err = second_derivative(f).values + k0**2 * f.values
        assert np.max(np.abs(err)) < 1e-12

    def test_sech_analytic_oracle(self, grid):
        # oracle: sech'' = sech - 2 sech^3.  At half_length=20 the amplitude
        # tail ~4e-9 leaves a boundary-localized error ~ tail * k_max; the
        # interior is spectrally exact.
        s = 1.0 / np.cosh(grid.points)
        d2 = second_derivative(ComplexField(grid, s.astype(complex))).values
        analytic = s - 2.0 * s**3
        err = np.abs(d2 - analytic)
        assert np.max(err) < 5e-7
        interior = np.abs(grid.points) <= 10.0
        assert np.max(err[interior]) < 1e-10

    def test_sech_oracle_resolved_box(self):
        # with the box enlarged so the tail is below roundoff the global
        # error meets the spectral bound
        g = Grid(1024, 30.0)
        s = 1.0 / np.cosh(g.points)
        d2 = second_derivative(ComplexField(g, s.astype(complex))).values
        assert np.max(np.abs(d2 - (s - 2.0 * s**3))) < 1e-10


class TestNorms:
    def test_soliton_l2_squared(self, params, grid):
        from llewave import nls_soliton

        phi0 = nls_soliton(params, grid, 0.0)
        assert abs(norm(phi0, "L2") ** 2 - 4.0 * math.sqrt(params.zeta)) < 1e-8

    def test_soliton_l3_cubed(self, params, grid):
        from llewave import nls_soliton

        phi0 = nls_soliton(params, grid, 0.0)
        expected = math.sqrt(2.0) * params.zeta * math.pi
        assert abs(norm(phi0, "L3") ** 3 - expected) < 1e-8

    def test_zero_field_all_kinds(self, grid):
        z = grid.zero_field()
        for kind in ("L2", "L3", "Linf", "H1", "H2"):
            assert norm(z, kind) == 0.0

    def test_unknown_kind_rejected(self, grid):
        with pytest.raises(ValueError):
            norm(grid.zero_field(), "L7")

    def test_h1_identity(self, grid):
        # ||u||_H1^2 = ||u||_L2^2 + ||u'||_L2^2
        f = random_bandlimited(grid, 3)
        h1 = norm(f, "H1") ** 2
        split = norm(f, "L2") ** 2 + norm(first_derivative(f), "L2") ** 2
        assert abs(h1 - split) < 1e-10 * max(1.0, abs(h1))

    def test_parseval(self, grid):
        f = random_bandlimited(grid, 4)
        phys = np.sum(np.abs(f.values) ** 2) * grid.dx
        four = np.sum(np.abs(np.fft.fft(f.values)) ** 2) * grid.dx / grid.n_points
        assert abs(phys - four) < 1e-12 * abs(phys)


class TestShift:
    def test_zero_shift_identity(self, grid):
        f = random_bandlimited(grid, 5)
        assert np.max(np.abs(shift(f, 0.0).values - f.values)) < 1e-14

    def test_sech_shift_matches_analytic(self, grid):
        s = ComplexField(grid, (1.0 / np.cosh(grid.points)).astype(complex))
        moved = shift(s, 1.0)
        analytic = 1.0 / np.cosh(grid.points - 1.0)
        # same boundary caveat as differentiation; interior is exact
        interior = np.abs(grid.points) <= 10.0
        assert np.max(np.abs(moved.values - analytic)[interior]) < 1e-10

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), sigma=st.floats(-15.0, 15.0))
    def test_round_trip(self, grid, seed, sigma):
        f = random_bandlimited(grid, seed)
        back = shift(shift(f, sigma), -sigma)
        assert np.max(np.abs(back.values - f.values)) < 1e-12 * max(
            1.0, np.max(np.abs(f.values))
        )

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000), sigma=st.floats(-5.0, 5.0))
    def test_commutes_with_second_derivative(self, grid, seed, sigma):
        f = random_bandlimited(grid, seed)
        a = second_derivative(shift(f, sigma)).values
        b = shift(second_derivative(f), sigma).values
        assert np.max(np.abs(a - b)) < 1e-10 * max(1.0, np.max(np.abs(a)))


class TestParityAndBasis:
    def test_reflect_involution(self, grid):
        f = random_bandlimited(grid, 8)
        assert np.max(np.abs(reflect(reflect(f)).values - f.values)) == 0.0

    def test_even_basis_orthonormal(self):
        g = Grid(64, 5.0)
        E = even_basis(g)
        assert E.shape == (64, 33)
        assert_allclose(E.T @ E, np.eye(33), atol=1e-12)

    def test_even_basis_spans_even_fields(self):
        g = Grid(64, 5.0)
        E = even_basis(g)
        f = np.cosh(np.cos(np.pi * g.points / 5.0))  # even, periodic
        recon = E @ (E.T @ f)
        assert np.max(np.abs(recon - f)) < 1e-12

    def test_evenness_defect(self, grid):
        even = ComplexField(grid, np.cos(np.pi * grid.points / grid.half_length) + 0j)
        assert evenness_defect(even) < 1e-14


class TestSerialization:
    def test_json_record_round_trip(self, grid, tmp_path):
        f = random_bandlimited(grid, 11)
        rec = field_to_record(f)
        g = field_from_record(rec)
        assert g.grid == f.grid
        assert_allclose(g.values, f.values, atol=0, rtol=0)
        path = tmp_path / "field.json"
        field_to_json(f, path)
        h = field_from_json(path)
        assert_allclose(h.values, f.values, atol=0, rtol=0)

    def test_csv_columns(self, grid, tmp_path):
        f = random_bandlimited(grid, 12)
        path = tmp_path / "field.csv"
        field_to_csv(f, path)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (grid.n_points, 3)
        assert_allclose(data[:, 0], grid.points)
        assert_allclose(data[:, 1] + 1j * data[:, 2], f.values, atol=1e-12)

    def test_inner_product_conjugate_symmetry(self, grid):
        f = random_bandlimited(grid, 13)
        g = random_bandlimited(grid, 14)
        assert abs(inner_l2(f, g) - np.conj(inner_l2(g, f))) < 1e-10
