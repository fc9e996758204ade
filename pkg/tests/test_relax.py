import numpy as np
import pytest

from dimbound import Scenario
from dimbound.relax import (AssemblyError, SweepConfig, compute_bound,
                            named_level_index, sweep_classes,
                            sweep_hybrid_classes)

from conftest import chsh_scenario, qrac_scenario, temporal_scenario

TSIRELSON = 2 * np.sqrt(2)


def test_unconstrained_chsh_tsirelson():
    sc = chsh_scenario(da=None, db=None)
    res = compute_bound(sc, 2, SweepConfig(seed=0))
    assert res.best_value == pytest.approx(TSIRELSON, abs=1e-6)
    assert not res.partial


def test_chsh_qubit_generic_class():
    sc = chsh_scenario()
    cfg = SweepConfig(seed=0, classes=[(1, 1, 1, 1)])
    res = compute_bound(sc, 2, cfg)
    assert res.best_value == pytest.approx(TSIRELSON, abs=1e-6)


def test_chsh_scalar_sweep_is_classical():
    sc = chsh_scenario(da=1, db=1)
    res = compute_bound(sc, 2, SweepConfig(seed=0))
    assert res.best_value == pytest.approx(2.0, abs=1e-7)
    assert not res.partial
    assert len(res.records) == 2 ** 4


def test_bound_monotone_in_level():
    sc = qrac_scenario(2)
    cfg = SweepConfig(seed=0, classes=[(1, 1)])
    loose = compute_bound(sc, 1, cfg).best_value
    tight = compute_bound(sc, 2, cfg).best_value
    assert tight <= loose + 1e-8
    assert tight == pytest.approx(0.5 + np.sqrt(2) / 4, abs=1e-6)


def test_bound_monotone_in_dimension():
    small = compute_bound(chsh_scenario(da=1, db=1), 2, SweepConfig(seed=0))
    large = compute_bound(chsh_scenario(), 2,
                          SweepConfig(seed=0, classes=[(1, 1, 1, 1)]))
    assert small.best_value <= large.best_value + 1e-8


def test_named_level_index_cross():
    sc = chsh_scenario()
    alpha = sc.alphabet()
    lvl1 = named_level_index(alpha, 1)
    cross = named_level_index(alpha, "1+cross")
    assert len(lvl1) == 5
    # four cross-party products A_x B_y
    assert len(cross) == 9
    assert all(len(w) <= 2 for w in cross)


def test_named_level_index_party_patterns():
    sc = temporal_scenario()
    alpha = sc.alphabet()
    base = named_level_index(alpha, 2)
    plus = named_level_index(alpha, "2+AAA")
    assert set(base) < set(plus)
    assert all(len(w) == 3 for w in set(plus) - set(base))


def test_named_level_index_rejects_garbage():
    alpha = chsh_scenario().alphabet()
    with pytest.raises(ValueError):
        named_level_index(alpha, "2+bogus2")


def test_objective_outside_index_is_an_error():
    # the temporal objective has degree-3 words; a degree-1 index cannot
    # realize them in any cell
    sc = temporal_scenario()
    res = sweep_classes(sc, 1, SweepConfig(seed=0, classes=[(1,) * 6]))
    assert res.partial
    assert "AssemblyError" in res.records[0]["error"]


def test_sweep_cache_hits(tmp_path):
    sc = chsh_scenario()
    cfg = SweepConfig(seed=0, classes=[(1, 1, 1, 1)], cache_dir=tmp_path)
    first = sweep_classes(sc, 2, cfg)
    second = sweep_classes(sc, 2, cfg)
    assert first.records[0]["cache_hit"] is False
    assert second.records[0]["cache_hit"] is True
    assert second.best_value == pytest.approx(first.best_value, abs=1e-12)


def test_dedup_sweep_agrees_with_full():
    swap = {"A1": ("B1", False), "B1": ("A1", False),
            "A2": ("B2", False), "B2": ("A2", False)}
    base = chsh_scenario()
    sc = Scenario(letters=base.letters, dims=base.dims, objective=base.objective,
                  symmetries=(swap,), name="chsh-sym")
    full = sweep_classes(sc, 2, SweepConfig(seed=0, dedup=False))
    ded = sweep_classes(sc, 2, SweepConfig(seed=0, dedup=True))
    assert len(ded.records) < len(full.records)
    assert sum(r["multiplicity"] for r in ded.records) == len(full.records)
    assert ded.best_value == pytest.approx(full.best_value, abs=1e-6)


def test_hybrid_chsh_tsirelson():
    sc = chsh_scenario(da=2, db=None)
    res = sweep_hybrid_classes(sc, 2, sym_degree=1, config=SweepConfig(seed=3))
    assert res.best_value == pytest.approx(TSIRELSON, abs=1e-6)
    assert not res.partial


def test_compute_bound_dispatches_hybrid():
    sc = chsh_scenario(da=2, db=None)
    res = compute_bound(sc, 2, SweepConfig(seed=3), sym_level=1)
    assert res.best_value == pytest.approx(TSIRELSON, abs=1e-6)
    assert res.meta.get("kind") == "hybrid"


def test_hybrid_needs_an_unconstrained_party():
    sc = chsh_scenario()
    with pytest.raises(AssemblyError):
        sweep_hybrid_classes(sc, 2, sym_degree=1, config=SweepConfig(seed=0))
