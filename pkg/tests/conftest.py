import itertools
from pathlib import Path

import pytest

from dimbound import LetterSpec, Scenario

EXAMPLES = Path(__file__).resolve().parent.parent / "examples"


def chsh_scenario(da=2, db=2):
    letters = (
        LetterSpec("A1", "dichotomic", "A"),
        LetterSpec("A2", "dichotomic", "A"),
        LetterSpec("B1", "dichotomic", "B"),
        LetterSpec("B2", "dichotomic", "B"),
    )
    objective = {("A1", "B1"): 1.0, ("A1", "B2"): 1.0,
                 ("A2", "B1"): 1.0, ("A2", "B2"): -1.0}
    return Scenario(letters=letters, dims={"A": da, "B": db},
                    objective=objective, name="chsh")


def qrac_scenario(n=2, dim=2, field="complex"):
    letters = []
    objective = {}
    for bits in itertools.product((0, 1), repeat=n):
        name = "r" + "".join(map(str, bits))
        letters.append(LetterSpec(name, "state_prep", "A"))
        for y in range(n):
            if bits[y]:
                objective[(name,)] = objective.get((name,), 0.0) + 1.0 / (n * 2 ** n)
            w = (name, f"F{y+1}")
            objective[w] = objective.get(w, 0.0) + (1 - 2 * bits[y]) / (n * 2 ** n)
    for y in range(n):
        letters.append(LetterSpec(f"F{y+1}", "projector", "A"))
    return Scenario(letters=tuple(letters), dims={"A": dim}, objective=objective,
                    field_kind=field, state_model="tracial", name=f"qrac{n}1")


def temporal_scenario(dim=2):
    letters = [LetterSpec(f"X{c1}{c2}", "dichotomic", "A")
               for c1, c2 in itertools.product((0, 1), repeat=2)]
    letters += [LetterSpec("Y1", "dichotomic", "A"),
                LetterSpec("Y2", "dichotomic", "A")]
    objective = {}
    for c1, c2 in itertools.product((0, 1), repeat=2):
        for j, cj in ((1, c1), (2, c2)):
            w = (f"X{c1}{c2}", f"Y{j}", f"X{c1}{c2}")
            objective[w] = objective.get(w, 0.0) + (-1.0 if cj else 1.0)
    return Scenario(letters=tuple(letters), dims={"A": dim}, objective=objective,
                    name="temporal")


@pytest.fixture
def chsh():
    return chsh_scenario()


@pytest.fixture
def qrac21():
    return qrac_scenario(2)


@pytest.fixture
def temporal():
    return temporal_scenario()


@pytest.fixture
def examples_dir():
    return EXAMPLES
