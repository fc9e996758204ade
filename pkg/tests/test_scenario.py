import pytest

from dimbound import LetterSpec, Scenario

from conftest import chsh_scenario, qrac_scenario


def test_letter_kinds_validated():
    with pytest.raises(ValueError):
        LetterSpec("X", "bogus", "A")


def test_duplicate_names_rejected():
    with pytest.raises(ValueError):
        Scenario(letters=(LetterSpec("X", "dichotomic", "A"),
                          LetterSpec("X", "dichotomic", "A")),
                 dims={"A": 2}, objective={})


def test_objective_must_use_known_letters(chsh):
    with pytest.raises(ValueError):
        Scenario(letters=chsh.letters, dims=chsh.dims,
                 objective={("A1", "Z9"): 1.0})


def test_digest_is_stable_and_sensitive(chsh):
    again = chsh_scenario()
    assert chsh.digest() == again.digest()
    bumped = chsh_scenario()
    bumped = Scenario(letters=bumped.letters, dims=bumped.dims,
                      objective={**bumped.objective, ("A1", "B1"): 2.0},
                      name=bumped.name)
    assert bumped.digest() != chsh.digest()
    smaller = chsh_scenario(da=3)
    assert smaller.digest() != chsh.digest()


def test_digest_ignores_name(chsh):
    renamed = Scenario(letters=chsh.letters, dims=chsh.dims,
                       objective=chsh.objective, name="other")
    assert renamed.digest() == chsh.digest()


def test_alphabet_roundtrip(chsh):
    alpha = chsh.alphabet()
    assert len(alpha) == 4
    assert [alpha[i].name for i in range(4)] == ["A1", "A2", "B1", "B2"]
    assert alpha.letter("B2").party == "B"


def test_rank_classes_dichotomic(chsh):
    # each dichotomic letter contributes the rank of its +1 eigenprojector
    classes = chsh.rank_classes(dedup=False)
    assert len(classes) == 3 ** 4
    ranks = {c.ranks for c in classes}
    assert (0, 0, 0, 0) in ranks and (2, 2, 2, 2) in ranks


def test_rank_classes_state_preps_not_classified():
    sc = qrac_scenario(2)
    # two projector letters classify, the four rank-one preparations do not
    classes = sc.rank_classes(dedup=False)
    assert len(classes) == 9


def test_rank_classes_group_completeness():
    letters = tuple(LetterSpec(f"E{b}", "projector", "A", group="Y")
                    for b in range(1, 4))
    sc = Scenario(letters=letters, dims={"A": 2}, objective={})
    classes = sc.rank_classes(dedup=False)
    assert all(sum(c.ranks) == 2 for c in classes)


def test_unconstrained_parties(chsh):
    hybrid = Scenario(letters=chsh.letters, dims={"A": 2, "B": None},
                      objective=chsh.objective)
    assert tuple(hybrid.finite_parties()) == ("A",)
    assert tuple(hybrid.unconstrained_parties()) == ("B",)
    assert not chsh.unconstrained_parties()


def test_symmetry_validation_rejects_unknown_letter(chsh):
    with pytest.raises(ValueError):
        Scenario(letters=chsh.letters, dims=chsh.dims,
                 objective=chsh.objective,
                 symmetries=({"A1": ("Z1", False)},))


def test_symmetry_must_be_bijection(chsh):
    with pytest.raises(ValueError):
        Scenario(letters=chsh.letters, dims=chsh.dims,
                 objective=chsh.objective,
                 symmetries=({"A1": ("A2", False)},))


def test_flip_only_for_binary_letters():
    letters = (LetterSpec("U", "unitary", "A"), LetterSpec("V", "unitary", "A"))
    with pytest.raises(ValueError):
        Scenario(letters=letters, dims={"A": 2}, objective={},
                 symmetries=({"U": ("V", True), "V": ("U", True)},))
