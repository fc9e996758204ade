import numpy as np
import pytest

from dimbound.solver import (SolverError, read_sdpa, realify_hermitian_stack,
                             export_sdpa, solve_sdp)


def offdiag_instance():
    """max x12 over PSD completions of [[1, x],[x, 1]]; optimum 1."""
    mats = np.stack([np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]])])
    f = np.array([0.0, 1.0])
    e = np.array([1.0, 0.0])
    return mats, f, e


def test_analytic_offdiagonal_maximum():
    mats, f, e = offdiag_instance()
    rep = solve_sdp(mats, f, e, nu=1.0)
    assert rep.status == "optimal"
    assert rep.primal_value == pytest.approx(1.0, abs=1e-6)
    assert rep.dual_value >= rep.primal_value - 1e-6


def test_scaled_normalization():
    mats, f, e = offdiag_instance()
    rep = solve_sdp(mats, f, e, nu=3.0)
    assert rep.primal_value == pytest.approx(3.0, abs=1e-6)


def test_three_block_chain():
    # max 2*(x12 + x23) over PSD [[1,x12,0],[x12,1,x23],[0,x23,1]];
    # optimum at x12 = x23 = 1/sqrt(2), value 2*sqrt(2)
    m12 = np.zeros((3, 3)); m12[0, 1] = m12[1, 0] = 1.0
    m23 = np.zeros((3, 3)); m23[1, 2] = m23[2, 1] = 1.0
    mats = np.stack([np.eye(3), m12, m23])
    f = np.array([0.0, 2.0, 2.0])
    e = np.array([1.0, 0.0, 0.0])
    rep = solve_sdp(mats, f, e, nu=1.0)
    assert rep.status == "optimal"
    assert rep.primal_value == pytest.approx(2 * np.sqrt(2), abs=1e-6)


def test_solution_vector_reconstructs_value():
    mats, f, e = offdiag_instance()
    rep = solve_sdp(mats, f, e, nu=1.0)
    assert f @ rep.x == pytest.approx(rep.primal_value, abs=1e-9)
    assert e @ rep.x == pytest.approx(1.0, abs=1e-8)
    m = np.tensordot(rep.x, mats, axes=1)
    assert np.linalg.eigvalsh(m).min() >= -1e-8


def test_report_fields_track_convergence():
    mats, f, e = offdiag_instance()
    rep = solve_sdp(mats, f, e, nu=1.0)
    assert rep.gap < 1e-7
    assert rep.iterations > 0
    assert rep.wall_time >= 0.0
    assert rep.psd_residual <= 1e-8
    assert rep.equality_residual <= 1e-8


def test_max_iter_exhaustion_not_optimal():
    mats, f, e = offdiag_instance()
    rep = solve_sdp(mats, f, e, nu=1.0, max_iter=2)
    assert rep.status in ("inaccurate", "failed")


def test_degenerate_normal_reported_infeasible():
    mats, f, _ = offdiag_instance()
    rep = solve_sdp(mats, f, np.zeros(2), nu=1.0)
    assert rep.status == "infeasible"
    assert rep.primal_value == -np.inf


def test_realify_hermitian_stack_preserves_spectra():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = (a + a.conj().T) / 2
    stack = realify_hermitian_stack(np.stack([h]))
    r = stack[0]
    assert r.shape == (8, 8)
    assert np.allclose(r, r.T, atol=1e-12)
    ev = np.linalg.eigvalsh(h)
    assert np.allclose(np.sort(np.repeat(ev, 2)), np.linalg.eigvalsh(r), atol=1e-9)


def test_sdpa_export_read_roundtrip(tmp_path):
    mats, f, e = offdiag_instance()
    path = tmp_path / "inst.dat-s"
    export_sdpa(mats, f, e, 1.0, path, comment="tiny instance")
    loaded = read_sdpa(path)
    mats2, f2, e2, nu2 = loaded[:4]
    assert np.allclose(np.asarray(mats2), mats)
    assert np.allclose(f2, f)
    assert np.allclose(e2, e)
    assert nu2 == pytest.approx(1.0)
    rep = solve_sdp(np.asarray(mats2), np.asarray(f2), np.asarray(e2), nu=float(nu2))
    assert rep.primal_value == pytest.approx(1.0, abs=1e-6)
