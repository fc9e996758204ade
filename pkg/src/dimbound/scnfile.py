"""Scenario file parsing and serialization.

A scenario file is a line-oriented text document with ``[section]`` headers.
``#`` starts a comment, blank lines are ignored.  Sections:

``[variables]``
    One operator variable per line: ``NAME KIND PARTY``.  Kinds are
    ``dichotomic``, ``projector``, ``unitary``, ``hermitian`` and
    ``state-prep``.

``[constraints]``
    Completeness groups: ``GROUP = NAME + NAME + ...`` declares that the
    named projectors resolve the identity.

``[objective]``
    One term per line: ``COEFF NAME NAME ...``.  The bare token ``1``
    denotes the empty word, so ``0.5 1`` is a constant term.

``[model]``
    ``dim PARTY = D`` with ``D`` a positive integer or ``inf``;
    ``field = complex|real``; ``state = random_pure|maximally_entangled|
    tracial``; ``povm = GROUP, GROUP`` flags groups sampled as general
    POVMs; ``name = ...`` labels the scenario.

``[run]``
    Solve-time knobs: ``level``, ``sym_level``, ``eps``, ``confirmations``,
    ``seed``, ``dedup``, ``jobs``, ``gap_tol``, ``feas_tol``, ``max_iter``,
    ``max_samples``, ``restarts`` and ``classes`` (semicolon-separated rank
    tuples such as ``1,1,0 ; 1,2,0``).

``[symmetries]``
    One rank-class symmetry generator per line, written as space-separated
    ``SRC->DST`` items; ``SRC->~DST`` marks an outcome flip.

Parse errors carry the offending line number.  ``parses -> serialize ->
parse`` is the identity on the (Scenario, RunSpec) pair.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

from .scenario import KINDS, LetterSpec, Scenario

_SECTIONS = ("variables", "constraints", "objective", "model", "run", "symmetries")


class ScnParseError(ValueError):
    """Scenario file rejection, anchored to a source line."""

    def __init__(self, message: str, source: str = "<scn>", line: int = 0):
        super().__init__(f"{source}:{line}: {message}" if line else f"{source}: {message}")
        self.source = source
        self.line = line


@dataclass(frozen=True)
class RunSpec:
    """Solve-time settings carried by a scenario file's [run] section."""

    level: str = "2"
    sym_level: str | None = None
    eps: float | None = None
    confirmations: int | None = None
    seed: int | None = None
    dedup: bool | None = None
    jobs: int | None = None
    gap_tol: float | None = None
    feas_tol: float | None = None
    max_iter: int | None = None
    max_samples: int | None = None
    restarts: int | None = None
    classes: tuple[tuple[int, ...], ...] | None = None


_RUN_TYPES = {
    "level": str,
    "sym_level": str,
    "eps": float,
    "confirmations": int,
    "seed": int,
    "dedup": bool,
    "jobs": int,
    "gap_tol": float,
    "feas_tol": float,
    "max_iter": int,
    "max_samples": int,
    "restarts": int,
    "classes": tuple,
}


def _coeff(token: str, err) -> complex:
    try:
        return complex(token)
    except ValueError:
        raise err(f"bad coefficient {token!r}") from None


def _format_coeff(c: complex) -> str:
    c = complex(c)
    if c.imag == 0.0:
        return repr(c.real)
    return repr(c).strip("()")


def parse_scenario_text(text: str, source: str = "<scn>") -> tuple[Scenario, RunSpec]:
    """Parse a scenario document; raise ScnParseError with a line number."""
    letters: list[LetterSpec] = []
    group_of: dict[str, str] = {}
    group_order: dict[str, list[str]] = {}
    objective: dict[tuple[str, ...], complex] = {}
    dims: dict[str, int | None] = {}
    model = {"field": "complex", "state": "random_pure", "name": ""}
    povm: set[str] = set()
    run: dict[str, object] = {}
    generators: list[dict[str, tuple[str, bool]]] = []

    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        def err(msg):
            return ScnParseError(msg, source, lineno)

        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise err("unterminated section header")
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise err(f"unknown section [{section}]")
            continue
        if section is None:
            raise err("content before the first [section]")

        if section == "variables":
            parts = line.split()
            if len(parts) != 3:
                raise err("expected: NAME KIND PARTY")
            name, kind, party = parts
            kind = kind.replace("-", "_")
            if kind not in KINDS:
                raise err(f"unknown kind {parts[1]!r}")
            if any(s.name == name for s in letters):
                raise err(f"duplicate variable {name!r}")
            letters.append(LetterSpec(name, kind, party))

        elif section == "constraints":
            gname, eq, rhs = line.partition("=")
            if not eq:
                raise err("expected: GROUP = NAME + NAME + ...")
            gname = gname.strip()
            members = [m.strip() for m in rhs.split("+")]
            if not gname or any(not m for m in members):
                raise err("empty group name or member")
            known = {s.name for s in letters}
            for m in members:
                if m not in known:
                    raise err(f"unknown variable {m!r} in group {gname!r}")
                if m in group_of:
                    raise err(f"variable {m!r} already grouped")
                group_of[m] = gname
            group_order.setdefault(gname, []).extend(members)

        elif section == "objective":
            parts = line.split()
            coeff = _coeff(parts[0], err)
            names = tuple(parts[1:])
            if names == ("1",):
                names = ()
            known = {s.name for s in letters}
            for n in names:
                if n not in known:
                    raise err(f"unknown variable {n!r} in objective")
            if names in objective:
                raise err(f"duplicate objective word {' '.join(names) or '1'}")
            objective[names] = coeff

        elif section == "model":
            key, eq, value = (p.strip() for p in line.partition("="))
            if not eq:
                raise err("expected: KEY = VALUE")
            if key.startswith("dim"):
                party = key[3:].strip()
                if not party:
                    raise err("expected: dim PARTY = D")
                if value == "inf":
                    dims[party] = None
                else:
                    try:
                        dims[party] = int(value)
                    except ValueError:
                        raise err(f"bad dimension {value!r}") from None
            elif key in ("field", "state", "name"):
                model[key] = value
            elif key == "povm":
                povm.update(g.strip() for g in value.split(",") if g.strip())
            else:
                raise err(f"unknown model key {key!r}")

        elif section == "run":
            key, eq, value = (p.strip() for p in line.partition("="))
            if not eq or key not in _RUN_TYPES:
                raise err(f"unknown run key {key!r}")
            typ = _RUN_TYPES[key]
            try:
                if typ is bool:
                    if value.lower() not in ("true", "false"):
                        raise ValueError
                    run[key] = value.lower() == "true"
                elif typ is tuple:
                    run[key] = tuple(
                        tuple(int(r) for r in part.split(","))
                        for part in value.split(";") if part.strip())
                else:
                    run[key] = typ(value)
            except ValueError:
                raise err(f"bad value {value!r} for {key!r}") from None

        elif section == "symmetries":
            gen: dict[str, tuple[str, bool]] = {}
            known = {s.name for s in letters}
            for item in line.split():
                src, arrow, dst = item.partition("->")
                flip = dst.startswith("~")
                if flip:
                    dst = dst[1:]
                if not arrow or src not in known or dst not in known:
                    raise err(f"bad symmetry item {item!r}")
                if src in gen:
                    raise err(f"duplicate source {src!r} in generator")
                gen[src] = (dst, flip)
            generators.append(gen)

    resolved = tuple(
        LetterSpec(s.name, s.kind, s.party, group=group_of.get(s.name))
        for s in letters)
    parties = {s.party for s in resolved}
    for p in parties - set(dims):
        raise ScnParseError(f"party {p!r} has no dim entry", source)
    for g in povm - set(group_order):
        raise ScnParseError(f"povm flag names unknown group {g!r}", source)

    try:
        scenario = Scenario(
            letters=resolved,
            dims=dims,
            objective=objective,
            field_kind=model["field"],
            state_model=model["state"],
            povm_groups=frozenset(povm),
            symmetries=tuple(generators),
            name=model["name"],
        )
    except ValueError as exc:
        raise ScnParseError(str(exc), source) from exc
    return scenario, RunSpec(**run)


def load_scenario(path: str) -> tuple[Scenario, RunSpec]:
    """Parse a scenario file; an empty [model] name defaults to the stem."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    scenario, run = parse_scenario_text(text, source=path)
    if not scenario.name:
        stem = os.path.splitext(os.path.basename(path))[0]
        scenario = Scenario(
            letters=scenario.letters, dims=scenario.dims,
            objective=scenario.objective, field_kind=scenario.field_kind,
            state_model=scenario.state_model, povm_groups=scenario.povm_groups,
            symmetries=scenario.symmetries, name=stem)
    return scenario, run


def serialize_scenario(scenario: Scenario, run: RunSpec = RunSpec()) -> str:
    """Render a scenario (plus run settings) back into document form."""
    out = ["[variables]"]
    for s in scenario.letters:
        out.append(f"{s.name} {s.kind.replace('_', '-')} {s.party}")

    groups = scenario.groups()
    if groups:
        out.append("")
        out.append("[constraints]")
        for gname, members in groups.items():
            out.append(f"{gname} = " + " + ".join(m.name for m in members))

    out.append("")
    out.append("[objective]")
    for word, coeff in scenario.objective.items():
        body = " ".join(word) if word else "1"
        out.append(f"{_format_coeff(coeff)} {body}")

    out.append("")
    out.append("[model]")
    for party, d in scenario.dims.items():
        out.append(f"dim {party} = {'inf' if d is None else d}")
    out.append(f"field = {scenario.field_kind}")
    out.append(f"state = {scenario.state_model}")
    if scenario.povm_groups:
        out.append("povm = " + ", ".join(sorted(scenario.povm_groups)))
    if scenario.name:
        out.append(f"name = {scenario.name}")

    run_lines = []
    default = RunSpec()
    for f in fields(RunSpec):
        value = getattr(run, f.name)
        if value == getattr(default, f.name):
            continue
        if f.name == "classes":
            text = " ; ".join(",".join(str(r) for r in cl) for cl in value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = str(value)
        run_lines.append(f"{f.name} = {text}")
    if run_lines:
        out.append("")
        out.append("[run]")
        out.extend(run_lines)

    if scenario.symmetries:
        out.append("")
        out.append("[symmetries]")
        for gen in scenario.symmetries:
            items = [f"{src}->{'~' if flip else ''}{dst}"
                     for src, (dst, flip) in gen.items()]
            out.append(" ".join(items))

    return "\n".join(out) + "\n"
