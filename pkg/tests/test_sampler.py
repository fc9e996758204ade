import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dimbound import LetterSpec, Scenario
from dimbound.algebra import RankClass
from dimbound.sampler import (evaluate_objective, ginibre, haar_unitary,
                              measured_ranks, random_projector,
                              random_pure_state, relabel_representation,
                              representation_residuals, sample_representation,
                              stream_rng)

from conftest import chsh_scenario, qrac_scenario, temporal_scenario


def test_stream_rng_deterministic():
    a = stream_rng(7, 3, 11).normal(size=4)
    b = stream_rng(7, 3, 11).normal(size=4)
    c = stream_rng(7, 3, 12).normal(size=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_haar_unitary_is_unitary():
    rng = np.random.default_rng(0)
    for d in (2, 3, 5):
        u = haar_unitary(rng, d)
        assert np.allclose(u @ u.conj().T, np.eye(d), atol=1e-12)


def test_random_projector_rank_and_idempotence():
    rng = np.random.default_rng(1)
    p = random_projector(rng, 4, 2)
    assert np.allclose(p @ p, p, atol=1e-12)
    assert np.allclose(p, p.conj().T, atol=1e-12)
    assert np.linalg.matrix_rank(p, tol=1e-9) == 2


def test_random_pure_state_normalized():
    rng = np.random.default_rng(2)
    v = random_pure_state(rng, 5)
    assert v.shape == (5,)
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12


def test_ginibre_complex_field():
    rng = np.random.default_rng(3)
    g = ginibre(rng, 3, 3)
    assert g.shape == (3, 3)
    assert np.iscomplexobj(g)


def test_sample_respects_rank_class():
    sc = chsh_scenario()
    rep = sample_representation(sc, RankClass((1, 0, 2, 1)), seed=4)
    assert measured_ranks(rep) == (1, 0, 2, 1)
    res = representation_residuals(rep)
    assert max(res.values()) < 1e-12


def test_sample_state_prep_constraints():
    sc = qrac_scenario(2)
    rep = sample_representation(sc, seed=5)
    res = representation_residuals(rep)
    assert max(res.values()) < 1e-12
    # tracial model: reference state is the unnormalized identity
    assert np.allclose(rep.rho, np.eye(2))


def test_bell_sampling_embeds_parties():
    sc = chsh_scenario()
    rep = sample_representation(sc, RankClass((1, 1, 1, 1)), seed=6)
    assert rep.joint_dim == 4
    a1 = rep.ops[0]
    b1 = rep.ops[2]
    # different parties commute after embedding
    assert np.allclose(a1 @ b1, b1 @ a1, atol=1e-12)


def test_evaluate_objective_matches_manual_trace():
    sc = chsh_scenario()
    rep = sample_representation(sc, RankClass((1, 1, 1, 1)), seed=7)
    manual = 0.0
    for word, coeff in sc.objective.items():
        idx = tuple(rep.scenario.alphabet().letter(n).index for n in word)
        op = rep.word_matrix(idx)
        manual += (coeff * (rep.psi.conj() @ op @ rep.psi)).real
    assert evaluate_objective(rep) == pytest.approx(manual, abs=1e-12)


def test_real_field_samples_are_real():
    sc = qrac_scenario(3, field="real")
    rep = sample_representation(sc, seed=8)
    for m in rep.ops.values():
        assert not np.iscomplexobj(m) or np.allclose(m.imag, 0.0)


def test_relabel_preserves_objective_for_declared_symmetry():
    from dimbound import load_scenario
    from conftest import EXAMPLES

    scn, _ = load_scenario(EXAMPLES / "v4prime_d2.scn")
    rep = sample_representation(scn, scn.rank_classes()[100], seed=9)
    base = evaluate_objective(rep)
    for gen in scn.symmetries:
        other = evaluate_objective(relabel_representation(rep, gen))
        assert other == pytest.approx(base, abs=1e-10)


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=20, deadline=None)
def test_dichotomic_samples_square_to_identity(seed):
    sc = temporal_scenario()
    rep = sample_representation(sc, seed=seed)
    for m in rep.ops.values():
        assert np.allclose(m @ m, np.eye(m.shape[0]), atol=1e-12)
