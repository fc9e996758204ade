"""Free *-algebra bookkeeping: letters, words, rewrite rules, rank classes.

Operator variables are "letters" and monomials are "words" (tuples of letter
ids).  A word index in graded lexicographic order labels the rows and columns
of every moment matrix in the package, so the conventions here (identity
first, degree-major order, adjoint by reversal) are relied on everywhere else.

Letters may carry a local rewrite rule:

``none``        plain Hermitian operator, no simplification
``dichotomic``  X* = X and X X = 1
``idempotent``  E* = E and E E = E
``unitary``     U U* = U* U = 1 (the letter and its adjoint are distinct ids)

Letters of distinct parties commute; canonical words list parties in the
order they first appear in the alphabet.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

Word = tuple[int, ...]
EPSILON: Word = ()

RULES = ("none", "dichotomic", "idempotent", "unitary")


@dataclass(frozen=True)
class Letter:
    """A single operator variable.

    ``adjoint_of`` points at the partner id for non-Hermitian letters (the
    two ids of a unitary and its adjoint reference each other);  Hermitian
    letters leave it as None.
    """

    index: int
    name: str
    rule: str = "none"
    party: str = "A"
    hermitian: bool = True
    adjoint_of: int | None = None

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rewrite rule {self.rule!r}")
        if not self.hermitian and self.adjoint_of is None:
            raise ValueError(f"non-Hermitian letter {self.name!r} needs adjoint_of")


class Alphabet:
    """An ordered collection of letters with their rewrite rules.

    Words over the alphabet are tuples of letter indices.  All word-level
    operations (adjoint, canonical reduction, enumeration) live here.
    """

    def __init__(self, letters):
        self.letters = tuple(letters)
        for i, let in enumerate(self.letters):
            if let.index != i:
                raise ValueError("letter indices must match their position")
        self._by_name = {let.name: let for let in self.letters}
        if len(self._by_name) != len(self.letters):
            raise ValueError("duplicate letter names")
        # Parties ordered by first appearance; used for cross-party sorting.
        order: dict[str, int] = {}
        for let in self.letters:
            order.setdefault(let.party, len(order))
        self._party_rank = order

    def __len__(self):
        return len(self.letters)

    def __getitem__(self, index: int) -> Letter:
        return self.letters[index]

    @property
    def parties(self) -> tuple[str, ...]:
        return tuple(self._party_rank)

    def letter(self, name: str) -> Letter:
        return self._by_name[name]

    def word(self, names) -> Word:
        """Build a word from letter names (an iterable of strings)."""
        return tuple(self._by_name[n].index for n in names)

    def word_names(self, word: Word) -> tuple[str, ...]:
        return tuple(self.letters[i].name for i in word)

    def adjoint_letter(self, index: int) -> int:
        let = self.letters[index]
        return index if let.hermitian else let.adjoint_of

    def adjoint(self, word: Word) -> Word:
        """Adjoint of a word: reverse order, conjugate each letter."""
        return tuple(self.adjoint_letter(i) for i in reversed(word))

    def reduce(self, word: Word) -> Word:
        """Canonical form of a word under commutation and local rules.

        Letters of different parties commute, so the word is first stably
        sorted into party blocks; then adjacent-pair rules are applied until
        nothing changes.  The rewrite system is length-reducing and confluent
        for the rule kinds supported here, so the result is canonical.
        """
        if len(self._party_rank) > 1:
            word = tuple(sorted(word, key=lambda i: self._party_rank[self.letters[i].party]))
        w = list(word)
        changed = True
        while changed:
            changed = False
            j = 0
            while j + 1 < len(w):
                a, b = w[j], w[j + 1]
                rule = self.letters[a].rule
                if a == b and rule == "dichotomic":
                    del w[j : j + 2]
                    changed = True
                    j = max(j - 1, 0)
                elif a == b and rule == "idempotent":
                    del w[j]
                    changed = True
                    j = max(j - 1, 0)
                elif rule == "unitary" and self.adjoint_letter(a) == b:
                    del w[j : j + 2]
                    changed = True
                    j = max(j - 1, 0)
                else:
                    j += 1
        return tuple(w)

    def words(self, degree: int, reduced: bool = False):
        """Graded-lex word index up to ``degree``, identity word first.

        With ``reduced=True`` only canonical representatives are kept (one
        word per equivalence class of the rewrite rules); otherwise the raw
        index over all letter tuples is returned.
        """
        return enumerate_words(self, degree, reduced=reduced)


def enumerate_words(alphabet: Alphabet, degree: int, reduced: bool = False) -> list[Word]:
    """All words of degree <= ``degree`` in graded lexicographic order.

    The identity word () comes first.  When ``reduced`` is set, a word is
    kept only if it is its own canonical form, which enumerates each
    equivalence class exactly once.
    """
    ids = range(len(alphabet))
    out: list[Word] = []
    for d in range(degree + 1):
        for tup in itertools.product(ids, repeat=d):
            if reduced and alphabet.reduce(tup) != tup:
                continue
            out.append(tup)
    return out


# ---------------------------------------------------------------------------
# Polynomials: {word: coefficient} dictionaries.


def poly_reduce(poly: dict[Word, complex], alphabet: Alphabet) -> dict[Word, complex]:
    """Collect coefficients on canonical words."""
    out: dict[Word, complex] = {}
    for w, c in poly.items():
        r = alphabet.reduce(w)
        out[r] = out.get(r, 0.0) + complex(c)
    return out

def poly_adjoint(poly: dict[Word, complex], alphabet: Alphabet) -> dict[Word, complex]:
    out: dict[Word, complex] = {}
    for w, c in poly.items():
        wa = alphabet.reduce(alphabet.adjoint(w))
        out[wa] = out.get(wa, 0.0) + complex(c).conjugate()
    return out

def poly_hermitize(poly: dict[Word, complex], alphabet: Alphabet) -> dict[Word, complex]:
    """(p + p*)/2 on canonical words, dropping cancelled terms."""
    red = poly_reduce(poly, alphabet)
    adj = poly_adjoint(poly, alphabet)
    out: dict[Word, complex] = {}
    for w in set(red) | set(adj):
        c = 0.5 * (red.get(w, 0.0) + adj.get(w, 0.0))
        if c != 0:
            out[w] = c
    return out

def poly_is_hermitian(poly: dict[Word, complex], alphabet: Alphabet, tol: float = 0.0) -> bool:
    """Hermitian modulo the rewrite rules (p equals its adjoint as a form)."""
    red = poly_reduce(poly, alphabet)
    adj = poly_adjoint(poly, alphabet)
    words = set(red) | set(adj)
    return all(abs(red.get(w, 0.0) - adj.get(w, 0.0)) <= tol for w in words)

def poly_degree(poly: dict[Word, complex]) -> int:
    return max((len(w) for w in poly), default=0)


# ---------------------------------------------------------------------------
# Rank classes.


@dataclass(frozen=True)
class RankClass:
    """One admissible rank assignment for the rank-classified objects.

    ``ranks`` follows the scenario's declared order of classified objects.
    ``multiplicity`` counts the orbit size when symmetry deduplication merged
    equivalent assignments (1 otherwise).
    """

    ranks: tuple[int, ...]
    multiplicity: int = 1

    def __iter__(self):
        return iter(self.ranks)


@dataclass(frozen=True)
class RankSymmetry:
    """A relabeling acting on rank vectors.

    ``source[i]`` is the position whose rank moves to slot i, and
    ``flip[i]`` complements it to cap - r (outcome swap of a binary object).
    """

    source: tuple[int, ...]
    flip: tuple[bool, ...] = field(default=())

    def apply(self, ranks: tuple[int, ...], caps: tuple[int, ...]) -> tuple[int, ...]:
        flip = self.flip or (False,) * len(ranks)
        return tuple(
            caps[i] - ranks[s] if f else ranks[s]
            for i, (s, f) in enumerate(zip(self.source, flip))
        )


def enumerate_rank_classes(
    domains,
    groups=(),
    symmetries=(),
    caps=None,
    dedup: bool = False,
) -> list[RankClass]:
    """Enumerate admissible rank vectors.

    Parameters
    ----------
    domains : sequence of sequences of int
        Admissible ranks for each classified object, in declaration order.
    groups : sequence of (positions, total)
        Completeness constraints: the ranks at ``positions`` must sum to
        ``total`` (projectors resolving the identity).  Violating vectors are
        pruned here, before any sampling happens.
    symmetries : sequence of RankSymmetry
        Relabelings declared by the scenario.  Only used when ``dedup``.
    caps : sequence of int, optional
        Per-object complement caps (usually the party dimension), required
        when a symmetry uses flips.
    dedup : bool
        When set, return one representative per symmetry orbit with its
        multiplicity.  Default off: the full list, multiplicity 1 each.
    """
    all_vecs = []
    for vec in itertools.product(*[tuple(d) for d in domains]):
        ok = True
        for positions, total in groups:
            if sum(vec[p] for p in positions) != total:
                ok = False
                break
        if ok:
            all_vecs.append(vec)
    if not dedup or not symmetries:
        return [RankClass(v) for v in all_vecs]

    if caps is None:
        raise ValueError("caps are required for symmetry deduplication")
    caps = tuple(caps)
    admissible = set(all_vecs)
    seen: set[tuple[int, ...]] = set()
    out = []
    for vec in all_vecs:
        if vec in seen:
            continue
        # Orbit closure under the generated group.
        orbit = {vec}
        frontier = [vec]
        while frontier:
            cur = frontier.pop()
            for g in symmetries:
                nxt = g.apply(cur, caps)
                if nxt not in orbit:
                    orbit.add(nxt)
                    frontier.append(nxt)
        if not orbit <= admissible:
            raise ValueError(
                "symmetry maps an admissible rank vector outside the admissible set"
            )
        seen |= orbit
        out.append(RankClass(min(orbit), multiplicity=len(orbit)))
    return out
