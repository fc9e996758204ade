import numpy as np
import pytest

from dimbound.verify import (basis_stability_report, brute_force_classical,
                             check_d2_identities, check_standard_identity,
                             sandwich_report)
from dimbound.relax import SweepConfig

from conftest import chsh_scenario, qrac_scenario


def test_classical_chsh_is_two(chsh):
    assert brute_force_classical(chsh) == 2.0


def test_classical_qrac_is_guessing(qrac21):
    # the scalar model has a single constant preparation, so no information
    # reaches the decoder and every strategy scores chance level
    assert brute_force_classical(qrac21) == pytest.approx(0.5, abs=1e-12)


def test_classical_assignment_limit(chsh):
    with pytest.raises(ValueError):
        brute_force_classical(chsh, limit=3)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_standard_identity_holds_with_control(dim):
    rep = check_standard_identity(dim, trials=4, seed=7)
    assert rep["passed"]
    assert rep["max_residual"] <= 1e-12
    assert rep["control_min_residual"] > 1e-3
    assert rep["letters"] == 2 * dim


def test_standard_identity_guards():
    with pytest.raises(ValueError):
        check_standard_identity(0)
    with pytest.raises(ValueError):
        check_standard_identity(6)


def test_qubit_identities():
    rep = check_d2_identities(trials=10, seed=3)
    assert rep["passed"]
    assert all(v <= 1e-12 for v in rep["residuals"].values())
    assert all(v > 1e-3 for v in rep["controls"].values())


def test_sandwich_chsh(chsh):
    rep = sandwich_report(chsh, 2, SweepConfig(seed=0, classes=[(1, 1, 1, 1)]),
                          restarts=4, seed=1)
    assert rep["ok"]
    assert rep["lower"] == pytest.approx(2 * np.sqrt(2), abs=1e-6)
    assert rep["margin"] >= -1e-6


def test_sandwich_unconstrained_uses_finite_shadow():
    sc = chsh_scenario(da=None, db=None)
    rep = sandwich_report(sc, 2, SweepConfig(seed=0), restarts=4, seed=1)
    assert rep["ok"]
    assert rep["upper"] == pytest.approx(2 * np.sqrt(2), abs=1e-6)


def test_basis_dimension_stable_across_seeds(qrac21):
    rep = basis_stability_report(qrac21, 2, seeds=(0, 1), config=SweepConfig())
    assert rep["stable"]
    assert len(set(rep["sizes"].values())) == 1
    assert rep["class"] == (1, 1)
