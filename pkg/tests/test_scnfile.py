import pytest

from dimbound.scnfile import (RunSpec, ScnParseError, load_scenario,
                              parse_scenario_text, serialize_scenario)

MINIMAL = """
# two-setting correlation toy
[variables]
A1 dichotomic A
A2 dichotomic A
B1 dichotomic B

[objective]
1.0 A1 B1
-0.5 A2 B1
0.25 1

[model]
dim A = 2
dim B = inf
name = toy
"""


def test_parse_minimal():
    sc, run = parse_scenario_text(MINIMAL)
    assert sc.name == "toy"
    assert sc.dims == {"A": 2, "B": None}
    assert [s.name for s in sc.letters] == ["A1", "A2", "B1"]
    assert sc.objective[("A1", "B1")] == 1.0
    assert sc.objective[()] == 0.25
    assert run.level == "2"
    assert run.restarts is None


def test_roundtrip_all_bundled_examples(examples_dir):
    paths = sorted(examples_dir.glob("*.scn"))
    assert len(paths) >= 10
    for path in paths:
        sc, run = load_scenario(path)
        sc2, run2 = parse_scenario_text(serialize_scenario(sc, run), source=path.name)
        assert sc2.digest() == sc.digest(), path.name
        assert run2 == run, path.name
        assert sc2.name == sc.name


def test_name_defaults_to_file_stem(tmp_path):
    p = tmp_path / "nameless.scn"
    p.write_text("[variables]\nA1 dichotomic A\n[objective]\n1 A1\n[model]\ndim A = 2\n")
    sc, _ = load_scenario(p)
    assert sc.name == "nameless"


def test_run_section_typed_values():
    text = MINIMAL + "\n[run]\nlevel = 2+cross\nseed = 7\ndedup = true\nclasses = 1,1 ; 0,1\n"
    _, run = parse_scenario_text(text)
    assert run.level == "2+cross"
    assert run.seed == 7
    assert run.dedup is True
    assert run.classes == ((1, 1), (0, 1))


def test_constraints_and_povm_flag():
    text = """
[variables]
E1 projector A
E2 projector A
r1 state-prep A
[constraints]
Y = E1 + E2
[objective]
1 r1 E1
[model]
dim A = 2
povm = Y
"""
    sc, _ = parse_scenario_text(text)
    groups = sc.groups()
    assert set(groups) == {"Y"}
    assert [m.name for m in groups["Y"]] == ["E1", "E2"]
    assert sc.povm_groups == frozenset({"Y"})


def test_symmetry_block_with_flip():
    text = """
[variables]
A1 dichotomic A
A2 dichotomic A
[objective]
1 A1 A2 A1
[model]
dim A = 2
[symmetries]
A1->A2 A2->~A1
"""
    # structurally fine, so it parses; the numerical audit must still refuse
    # to deduplicate because the generator changes the objective value
    sc, _ = parse_scenario_text(text)
    assert sc.symmetries == ({"A1": ("A2", False), "A2": ("A1", True)},)
    from dimbound.relax import AssemblyError, check_symmetries
    with pytest.raises(AssemblyError, match="objective"):
        check_symmetries(sc)


def test_symmetry_non_bijection_rejected():
    text = """
[variables]
A1 dichotomic A
A2 dichotomic A
[objective]
1 A1 A2
[model]
dim A = 2
[symmetries]
A1->A2
"""
    with pytest.raises(ScnParseError, match="bijection"):
        parse_scenario_text(text)


@pytest.mark.parametrize("mutation, fragment", [
    ("A1 dichotomic A\nA1 dichotomic A\nB1 dichotomic B", "duplicate"),
    ("A1 spooky A\nB1 dichotomic B", "kind"),
    ("", "unknown variable"),
])
def test_variable_section_errors(mutation, fragment):
    text = f"[variables]\n{mutation}\n[objective]\n1 A1 B1\n[model]\ndim A = 2\ndim B = 2\n"
    with pytest.raises(ScnParseError, match=fragment):
        parse_scenario_text(text)


def test_unknown_letter_in_objective():
    text = "[variables]\nA1 dichotomic A\n[objective]\n1 A9\n[model]\ndim A = 2\n"
    with pytest.raises(ScnParseError, match="A9"):
        parse_scenario_text(text)


def test_missing_dimension_rejected():
    text = "[variables]\nA1 dichotomic A\nB1 dichotomic B\n[objective]\n1 A1 B1\n[model]\ndim A = 2\n"
    with pytest.raises(ScnParseError, match="B"):
        parse_scenario_text(text)


def test_bad_run_key_rejected():
    text = MINIMAL + "\n[run]\nturbo = yes\n"
    with pytest.raises(ScnParseError, match="turbo"):
        parse_scenario_text(text)


def test_povm_unknown_group_rejected():
    text = MINIMAL + "\npovm = Z\n"
    with pytest.raises(ScnParseError, match="Z"):
        parse_scenario_text(text)


def test_error_carries_source_and_line():
    text = "[variables]\nA1 dichotomic A\n[objective]\nxyz A1\n[model]\ndim A = 2\n"
    with pytest.raises(ScnParseError) as exc:
        parse_scenario_text(text, source="bad.scn")
    assert exc.value.source == "bad.scn"
    assert exc.value.line == 4
    assert str(exc.value).startswith("bad.scn:4:")


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_scenario(tmp_path / "absent.scn")
