"""Scenario declarations.

A Scenario bundles everything the pipeline needs to know about a problem:
the operator variables (letters) with their kinds and parties, per-party
dimension constraints (an int, or None for unconstrained), completeness
groups (projectors resolving the identity), the objective polynomial, the
number field, the state model, and optional rank-class symmetries.

The scenario is purely declarative; sampling, moment construction and
relaxation assembly consume it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .algebra import Alphabet, Letter, RankClass, RankSymmetry, Word, enumerate_rank_classes

KINDS = ("dichotomic", "projector", "unitary", "hermitian", "state_prep")
STATE_MODELS = ("random_pure", "maximally_entangled", "tracial")
FIELDS = ("complex", "real")

# kind -> rewrite rule of the letter
_KIND_RULE = {
    "dichotomic": "dichotomic",
    "projector": "idempotent",
    "state_prep": "idempotent",  # preparations are rank-one projectors
    "unitary": "unitary",
    "hermitian": "none",
}


@dataclass(frozen=True)
class LetterSpec:
    """Declaration of one operator variable.

    ``group`` names the completeness group for multi-outcome projective
    measurements (members sum to the identity).  ``classed`` opts a letter in
    or out of rank classification; None picks the kind's default (dichotomic
    and projector letters are classified, preparations are fixed to rank one,
    unitary and plain Hermitian letters carry no rank).
    """

    name: str
    kind: str
    party: str = "A"
    group: str | None = None
    classed: bool | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown letter kind {self.kind!r}")

    @property
    def rank_classified(self) -> bool:
        if self.classed is not None:
            return self.classed
        return self.kind in ("dichotomic", "projector")


@dataclass(frozen=True)
class Scenario:
    letters: tuple[LetterSpec, ...]
    dims: dict[str, int | None]
    objective: dict[tuple[str, ...], complex]
    field_kind: str = "complex"
    state_model: str = "random_pure"
    povm_groups: frozenset[str] = frozenset()
    symmetries: tuple[dict[str, tuple[str, bool]], ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        if self.field_kind not in FIELDS:
            raise ValueError(f"unknown field {self.field_kind!r}")
        if self.state_model not in STATE_MODELS:
            raise ValueError(f"unknown state model {self.state_model!r}")
        self.validate()

    # -- structure ---------------------------------------------------------

    def validate(self):
        names = [l.name for l in self.letters]
        if len(set(names)) != len(names):
            raise ValueError("duplicate letter names")
        for spec in self.letters:
            if spec.party not in self.dims:
                raise ValueError(f"letter {spec.name!r} references undeclared party {spec.party!r}")
        for gname, members in self.groups().items():
            parties = {m.party for m in members}
            if len(parties) != 1:
                raise ValueError(f"completeness group {gname!r} spans several parties")
            if any(m.kind != "projector" for m in members):
                raise ValueError(f"completeness group {gname!r} must consist of projector letters")
        for g in self.povm_groups:
            if g not in self.groups():
                raise ValueError(f"povm flag on unknown group {g!r}")
        for w in self.objective:
            for n in w:
                if n not in names and not (n.endswith("*") and n[:-1] in names):
                    raise ValueError(f"objective references unknown letter {n!r}")
        if self.state_model == "maximally_entangled":
            finite = [d for d in self.dims.values() if d is not None]
            if len(self.dims) != 2 or len(finite) != 2 or finite[0] != finite[1]:
                raise ValueError("maximally entangled state needs two parties of equal finite dimension")
        if self.state_model == "tracial":
            finite = [p for p, d in self.dims.items() if d is not None]
            if len(self.dims) != 1 or len(finite) != 1:
                raise ValueError("tracial state model expects a single finite party")
        for gen in self.symmetries:
            self._check_generator(gen)

    def groups(self) -> dict[str, list[LetterSpec]]:
        out: dict[str, list[LetterSpec]] = {}
        for spec in self.letters:
            if spec.group is not None:
                out.setdefault(spec.group, []).append(spec)
        return out

    def alphabet(self) -> Alphabet:
        """Alphabet of the scenario; unitary letters get an adjoint partner."""
        letters: list[Letter] = []
        for spec in self.letters:
            letters.append(
                Letter(
                    index=len(letters),
                    name=spec.name,
                    rule=_KIND_RULE[spec.kind],
                    party=spec.party,
                    hermitian=spec.kind != "unitary",
                    adjoint_of=None,
                )
            )
        # Adjoint partners for unitary letters go after all declared letters.
        partner: dict[int, int] = {}
        for spec, let in zip(self.letters, list(letters)):
            if spec.kind == "unitary":
                j = len(letters)
                partner[let.index] = j
                letters.append(
                    Letter(index=j, name=spec.name + "*", rule="unitary",
                           party=spec.party, hermitian=False, adjoint_of=let.index)
                )
        if partner:
            fixed = []
            for let in letters:
                if let.index in partner:
                    fixed.append(Letter(let.index, let.name, let.rule, let.party,
                                        hermitian=False, adjoint_of=partner[let.index]))
                else:
                    fixed.append(let)
            letters = fixed
        return Alphabet(letters)

    def objective_poly(self, alphabet: Alphabet | None = None) -> dict[Word, complex]:
        """The objective over id-words.  The empty word is the constant."""
        alphabet = alphabet or self.alphabet()
        return {alphabet.word(w): complex(c) for w, c in self.objective.items()}

    # -- dimensions --------------------------------------------------------

    @property
    def parties(self) -> tuple[str, ...]:
        order: dict[str, int] = {}
        for spec in self.letters:
            order.setdefault(spec.party, len(order))
        for p in self.dims:
            order.setdefault(p, len(order))
        return tuple(order)

    def finite_parties(self) -> tuple[str, ...]:
        return tuple(p for p in self.parties if self.dims[p] is not None)

    def unconstrained_parties(self) -> tuple[str, ...]:
        return tuple(p for p in self.parties if self.dims[p] is None)

    def joint_dim(self) -> int:
        d = 1
        for p in self.finite_parties():
            d *= self.dims[p]
        return d

    # -- rank classification -----------------------------------------------

    def classified_letters(self) -> list[LetterSpec]:
        """Rank-classified letters, in declaration order."""
        return [s for s in self.letters if s.rank_classified]

    def rank_domains(self):
        """(domains, groups, caps) feeding enumerate_rank_classes."""
        classified = self.classified_letters()
        position = {s.name: i for i, s in enumerate(classified)}
        domains, caps = [], []
        for spec in classified:
            D = self.dims[spec.party]
            if D is None:
                raise ValueError(f"letter {spec.name!r} is rank-classified but its party is unconstrained")
            domains.append(tuple(range(D + 1)))
            caps.append(D)
        groups = []
        for gname, members in self.groups().items():
            if all(m.rank_classified for m in members):
                D = self.dims[members[0].party]
                groups.append((tuple(position[m.name] for m in members), D))
        return domains, groups, tuple(caps)

    def rank_classes(self, dedup: bool = False) -> list[RankClass]:
        domains, groups, caps = self.rank_domains()
        syms = self.rank_symmetries() if dedup else ()
        return enumerate_rank_classes(domains, groups=groups, symmetries=syms,
                                      caps=caps, dedup=dedup)

    # -- symmetries ----------------------------------------------------------

    def _normalized_generator(self, gen: dict[str, tuple[str, bool]]):
        """Complete a sparse generator with identity entries."""
        full = {s.name: (s.name, False) for s in self.letters}
        full.update(gen)
        return full

    def _check_generator(self, gen):
        by_name = {s.name: s for s in self.letters}
        full = self._normalized_generator(gen)
        for src, (dst, flipped) in full.items():
            if src not in by_name or dst not in by_name:
                raise ValueError(f"symmetry references unknown letter {src!r} or {dst!r}")
            a, b = by_name[src], by_name[dst]
            if a.kind != b.kind or self.dims[a.party] != self.dims[b.party]:
                raise ValueError(f"symmetry maps {src!r} to incompatible letter {dst!r}")
            if flipped and a.kind not in ("dichotomic", "projector"):
                raise ValueError(f"flip only makes sense for binary letters, not {src!r}")
        targets = [dst for dst, _ in full.values()]
        if len(set(targets)) != len(targets):
            raise ValueError("symmetry is not a bijection on letters")

    def rank_symmetries(self) -> tuple[RankSymmetry, ...]:
        """Scenario symmetries as actions on rank vectors."""
        classified = self.classified_letters()
        position = {s.name: i for i, s in enumerate(classified)}
        out = []
        for gen in self.symmetries:
            full = self._normalized_generator(gen)
            source = [0] * len(classified)
            flip = [False] * len(classified)
            for src, (dst, flipped) in full.items():
                if src in position:
                    if dst not in position:
                        raise ValueError(f"symmetry maps classified letter {src!r} to unclassified {dst!r}")
                    source[position[dst]] = position[src]
                    flip[position[dst]] = flipped
            out.append(RankSymmetry(tuple(source), tuple(flip)))
        return tuple(out)

    # -- identity ------------------------------------------------------------

    def canonical_key(self) -> str:
        """Stable textual fingerprint (used for cache keys)."""
        parts = [f"field={self.field_kind}", f"state={self.state_model}"]
        for p in self.parties:
            parts.append(f"dim[{p}]={self.dims[p]}")
        for s in self.letters:
            parts.append(f"letter={s.name}:{s.kind}:{s.party}:{s.group}:{s.rank_classified}")
        for g in sorted(self.povm_groups):
            parts.append(f"povm={g}")
        for w in sorted(self.objective, key=lambda w: (len(w), w)):
            c = complex(self.objective[w])
            parts.append(f"obj={' '.join(w)}:{c.real:.17g}:{c.imag:.17g}")
        for gen in self.symmetries:
            items = sorted((k, v[0], v[1]) for k, v in gen.items())
            parts.append("sym=" + ";".join(f"{a}>{'~' if f else ''}{b}" for a, b, f in items))
        return "\n".join(parts)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_key().encode()).hexdigest()[:16]
