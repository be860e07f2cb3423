"""Essential band, dense spectra, small-eigenvalue asymptotics, Krein audit."""

import math

import numpy as np
import pytest

from llewave import (
    Params,
    dense_spectrum,
    essential_spectrum_edge,
    krein_audit,
    newton_correct,
    nls_soliton,
    small_eigenvalue_asymptotics,
    solve_background,
    stability_verdict,
    to_real_form,
    verify_expansion_constants,
)
from llewave.errors import SupercriticalBackground
from llewave.linops import assemble, assemble_at_field
from llewave.spectrum import (
    CLASS_ESSENTIAL,
    CLASS_ROTATIONAL,
    CLASS_TRANSLATIONAL_NEGATIVE,
    CLASS_TRANSLATIONAL_ZERO,
    essential_band_edge_bruteforce,
    krein_to_record,
    spectrum_to_csv,
)


class TestEssentialEdge:
    def test_unperturbed_edge(self, params):
        assert essential_spectrum_edge(params, 0.0) == params.zeta

    def test_eps_squared_gap(self, params):
        u1 = solve_background(params.with_epsilon(0.01))
        gap1 = abs(essential_spectrum_edge(params, u1) - params.zeta)
        assert gap1 < 5e-3
        u2 = solve_background(params.with_epsilon(0.005))
        gap2 = abs(essential_spectrum_edge(params, u2) - params.zeta)
        assert gap1 / gap2 == pytest.approx(4.0, rel=0.2)

    def test_closed_form_matches_bruteforce(self, params):
        u = solve_background(params.with_epsilon(0.02))
        edge = essential_spectrum_edge(params, u)
        brute = essential_band_edge_bruteforce(params, u)
        assert abs(edge - brute) < 1e-10

    def test_supercritical_rejected(self, params):
        with pytest.raises(SupercriticalBackground):
            essential_spectrum_edge(params, 0.7)


class TestDenseSpectrumStable:
    def test_verdict(self, stable_report, params):
        assert stable_report.verdict == "stable"
        assert stability_verdict(stable_report, params) == "stable"

    def test_translational_pair(self, stable_report):
        zero = stable_report.select(CLASS_TRANSLATIONAL_ZERO)
        neg = stable_report.select(CLASS_TRANSLATIONAL_NEGATIVE)
        assert zero.shape == (1,) and neg.shape == (1,)
        assert abs(zero[0]) < 1e-6
        assert abs(neg[0] + 2 * stable_report.epsilon) < 1e-6

    def test_spectrum_inclusion(self, stable_report):
        # spectrum of L-eps lies in {-2 eps} u {Re = -eps} u {0}
        eps = stable_report.epsilon
        for lam, cls in zip(stable_report.eigenvalues, stable_report.classified):
            ok = (
                abs(lam) < 1e-6
                or abs(lam + 2 * eps) < 1e-6
                or abs(lam.real + eps) < 1e-6
            )
            assert ok, (lam, cls)

    def test_rotational_pair_location(self, stable_report, angles):
        rot = stable_report.select(CLASS_ROTATIONAL)
        assert rot.shape == (2,)
        eps = stable_report.epsilon
        # purely imaginary as eigenvalues of JL (Re = -eps here)
        assert np.max(np.abs(rot.real + eps)) < 1e-4
        predicted = math.sqrt(
            eps * math.pi * 2.0 * math.sqrt(2.0) * angles.sin_theta
        )
        measured = np.sort(np.abs(rot.imag))
        assert np.max(np.abs(measured - predicted)) / predicted < 0.10

    def test_prediction_error_improves_under_halving(
        self, stable_report, stable_report_half, angles
    ):
        def rel_err(report):
            rot = report.select(CLASS_ROTATIONAL)
            predicted = math.sqrt(
                report.epsilon * math.pi * 2.0 * math.sqrt(2.0) * angles.sin_theta
            )
            return abs(np.mean(np.abs(rot.imag)) - predicted) / predicted

        e1, e2 = rel_err(stable_report), rel_err(stable_report_half)
        assert e2 < e1
        # at least the sqrt(2) improvement of an O(sqrt(eps)) relative
        # remainder; measured ratio ~2.03, i.e. the eps-order modulus
        # correction vanishes here and the remainder is O(eps)
        assert 1.2 < e1 / e2 < 3.0

    def test_hamiltonian_symmetry(self, stable_report):
        w = stable_report.eigenvalues + stable_report.epsilon  # spectrum of JL
        target = np.sort_complex(-np.conj(w))
        got = np.sort_complex(w)
        assert np.max(np.abs(np.sort(target.real) - np.sort(got.real))) < 1e-8
        # pair each eigenvalue with its mirror
        for lam in w[np.abs(w.imag) < 2.0][:20]:
            assert np.min(np.abs(w - (-np.conj(lam)))) < 1e-8

    def test_band_edge_near_zeta_eps(self, stable_report):
        band = stable_report.select(CLASS_ESSENTIAL)
        ims = np.sort(np.unique(np.round(np.abs(band.imag), 12)))
        spacing = ims[1] - ims[0]
        assert abs(ims[0] - stable_report.zeta_eps) <= 2 * spacing

    def test_negative_translational_eigenvector_odd(self, stable_report, grid):
        idx = stable_report.classified.index(CLASS_TRANSLATIONAL_NEGATIVE)
        v = stable_report.eigenvectors[:, idx]
        n = grid.n_points
        mirror = (-np.arange(n)) % n
        for comp in (v[:n], v[n:]):
            odd_defect = np.max(np.abs(comp + comp[mirror]))
            even_part = np.max(np.abs(comp - comp[mirror]))
            assert odd_defect < 1e-5 * max(1.0, even_part)


class TestDenseSpectrumEdgeCases:
    def test_eps_zero_four_small(self, params, grid, angles):
        phi = nls_soliton(params, grid, angles.theta_stable)
        report = dense_spectrum(
            assemble_at_field(phi, params, 0.0), params=params, u_inf=0.0
        )
        small = np.abs(report.eigenvalues) < 1e-5
        assert np.sum(small) == 4
        rest = report.eigenvalues[~small]
        assert np.max(np.abs(rest.real)) < 1e-8
        assert np.min(np.abs(rest.imag)) >= params.zeta - 1e-3

    def test_unstable_angle(self, unstable_report):
        assert unstable_report.verdict == "unstable_eigenvalue"
        unstable = unstable_report.eigenvalues[
            unstable_report.eigenvalues.real > 1e-3
        ]
        assert unstable.shape == (1,)
        assert abs(unstable[0].imag) < 1e-6

    def test_unstable_lambda_plus_magnitude(self, unstable_report, angles):
        eps = unstable_report.epsilon
        lam = unstable_report.eigenvalues[unstable_report.eigenvalues.real > 1e-3][0]
        lam_plus = lam.real + eps  # eigenvalue of JL
        predicted = math.sqrt(
            eps * math.pi * 2.0 * math.sqrt(2.0) * abs(math.sin(angles.theta_unstable))
        )
        assert abs(lam_plus - predicted) / predicted < 0.10

    def test_negative_eps_essential_instability(self, params, grid, angles):
        p = params.with_epsilon(-0.01)
        from llewave import leading_ansatz

        pt = newton_correct(leading_ansatz(p, grid, angles.theta_stable), p)
        report = dense_spectrum(assemble(pt))
        assert report.verdict == "unstable_essential"
        band = report.select(CLASS_ESSENTIAL)
        assert np.min(band.real) > 5e-3


class TestAsymptotics:
    def test_stable_pair_imaginary(self, params, angles):
        p = params.with_epsilon(0.01)
        pred = small_eigenvalue_asymptotics(p, angles.theta_stable)
        assert pred[0] == 0.01 and pred[1] == -0.01
        rot = sorted(pred[2:], key=lambda z: z.imag)
        expected = math.sqrt(0.01 * math.pi * 2 * math.sqrt(2.0) * angles.sin_theta)
        assert abs(rot[1] - 1j * expected) < 1e-12
        assert abs(rot[0] + 1j * expected) < 1e-12

    def test_sign_flip_rotates_pair_to_real(self, params, angles):
        p = params.with_epsilon(0.01)
        pred_s = small_eigenvalue_asymptotics(p, angles.theta_stable)
        pred_u = small_eigenvalue_asymptotics(p, angles.theta_unstable)
        mod_s = sorted(abs(z) for z in pred_s[2:])
        mod_u = sorted(abs(z) for z in pred_u[2:])
        assert mod_s == pytest.approx(mod_u, rel=1e-12)
        assert all(abs(z.real) < 1e-15 for z in pred_s[2:])
        assert all(abs(z.imag) < 1e-15 for z in pred_u[2:])

    def test_eps_zero_collision(self, params, angles):
        assert small_eigenvalue_asymptotics(params, angles.theta_stable) == [0j] * 4


class TestExpansionConstants:
    def test_closed_forms(self, params, grid, angles):
        c1, c2 = verify_expansion_constants(params, angles.theta_stable, grid)
        assert abs(c1 - 2.0 / math.sqrt(params.zeta)) < 1e-6
        expected_c2 = -2.0 * math.sqrt(2.0) * math.pi * params.f * angles.sin_theta
        assert abs(c2 - expected_c2) / abs(expected_c2) < 1e-4

    def test_ratio_reproduces_pair(self, params, grid, angles):
        c1, c2 = verify_expansion_constants(params, angles.theta_stable, grid)
        lam1_sq = c2 / c1
        expected = -math.pi * params.f * math.sqrt(2.0 * params.zeta) * angles.sin_theta
        assert abs(lam1_sq - expected) / abs(expected) < 1e-4

    def test_theta_rate_cancellation(self, params, grid, angles):
        # the i*phi coefficient of u1 is unknown in closed form but provably
        # drops out of c2
        _, c2a = verify_expansion_constants(params, angles.theta_stable, grid)
        _, c2b = verify_expansion_constants(
            params, angles.theta_stable, grid, theta_rate=0.37
        )
        assert abs(c2a - c2b) < 1e-8

    def test_sin_zero_gives_zero_c2(self, params, grid):
        _, c2 = verify_expansion_constants(params, 0.0, grid)
        assert abs(c2) < 1e-8


class TestKreinAudit:
    def test_stable_counts(self, stable_real_ops, stable_report):
        rep = krein_audit(stable_real_ops, stable_report)
        assert (rep.n_L, rep.k_r, rep.k_i_minus, rep.k_c) == (3, 1, 2, 0)

    def test_gram_signs_negative(self, stable_real_ops, stable_report):
        rep = krein_audit(stable_real_ops, stable_report)
        assert len(rep.per_eigenvalue_signs) == 2
        for _, gram in rep.per_eigenvalue_signs:
            assert gram < 0

    def test_counting_balance_on_unstable_branch(
        self, unstable_ops, unstable_report, angles
    ):
        # the counting identity is proven for the stable case; on the
        # unstable branch the audit output is recorded, and the balance must
        # still close for our operator
        rops = to_real_form(unstable_ops, angles.theta_unstable)
        rep = krein_audit(rops, unstable_report)
        assert rep.k_r + rep.k_i_minus + rep.k_c == rep.n_L
        assert rep.k_r == 2

    def test_record_round_trip(self, stable_real_ops, stable_report):
        rep = krein_audit(stable_real_ops, stable_report)
        rec = krein_to_record(rep)
        assert rec["n_L"] == 3 and rec["k_r"] == 1
        assert len(rec["grams"]) == 2


class TestReportSerialization:
    def test_csv_columns(self, stable_report, tmp_path):
        path = tmp_path / "spec.csv"
        spectrum_to_csv(stable_report, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "re,im,class"
        assert len(lines) == 1 + stable_report.eigenvalues.size
