"""Random representations of a scenario at fixed finite dimensions.

A representation assigns to every letter a concrete matrix satisfying its
defining constraint (dichotomic, projector, unitary, rank-one preparation),
drawn Haar-style within the letter's rank class, plus a state matching the
scenario's state model.  Multi-party letters act on the tensor product in
party order, A (x) 1 style, so different parties commute by construction.

Randomness is reproducible: each (class index, sample index) pair gets its
own stream derived from one master seed, so results do not depend on the
order in which classes are processed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import RankClass, Word
from .scenario import Scenario


def stream_rng(master_seed: int, class_index: int, sample_index: int) -> np.random.Generator:
    """Independent generator for one (class, sample) cell of the run."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(class_index, sample_index))
    return np.random.default_rng(ss)


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rng: np.random.Generator, rows: int, cols: int, field_kind: str = "complex"):
    if field_kind == "real":
        return rng.standard_normal((rows, cols))
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_isometry(rng, dim: int, rank: int, field_kind: str = "complex"):
    """dim x rank isometry, Haar-distributed column span.

    QR of a Ginibre block with the phase of the R diagonal pushed into Q,
    which removes the sign ambiguity of numpy's QR and makes the
    distribution exactly invariant.
    """
    if rank == 0:
        dtype = float if field_kind == "real" else complex
        return np.zeros((dim, rank), dtype=dtype)
    g = ginibre(rng, dim, rank, field_kind)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_unitary(rng, dim: int, field_kind: str = "complex"):
    return random_isometry(rng, dim, dim, field_kind)


def random_projector(rng, dim: int, rank: int, field_kind: str = "complex"):
    if rank == 0:
        dtype = float if field_kind == "real" else complex
        return np.zeros((dim, dim), dtype=dtype)
    if rank == dim:
        dtype = float if field_kind == "real" else complex
        return np.eye(dim, dtype=dtype)
    w = random_isometry(rng, dim, rank, field_kind)
    return w @ w.conj().T


def random_pure_state(rng, dim: int, field_kind: str = "complex"):
    v = ginibre(rng, dim, 1, field_kind)[:, 0]
    return v / np.linalg.norm(v)


def matrix_rank_svd(mat, threshold: float = 1e-8) -> int:
    """Numerical rank by singular values above a fixed threshold."""
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s > threshold))


@dataclass
class Representation:
    """Concrete matrices for every letter, plus the state.

    ``local`` holds each letter's matrix on its own party factor; ``ops``
    holds the embedded joint-space matrices.  ``psi`` is set for pure-state
    models, ``rho`` always (identity, unnormalized, for the tracial model).
    """

    scenario: Scenario
    party_dims: dict[str, int]
    local: dict[int, np.ndarray]
    ops: dict[int, np.ndarray]
    rho: np.ndarray
    psi: np.ndarray | None = None
    rank_class: RankClass | None = None
    meta: dict = field(default_factory=dict)

    @property
    def joint_dim(self) -> int:
        return self.rho.shape[0]

    def word_matrix(self, word: Word) -> np.ndarray:
        out = np.eye(self.joint_dim, dtype=self.rho.dtype)
        for i in word:
            out = out @ self.ops[i]
        return out

    def moment(self, word: Word) -> complex:
        """tr(rho w) for one word (direct evaluation)."""
        return complex(np.trace(self.rho @ self.word_matrix(word)))


def embed(local: np.ndarray, party: str, party_dims: dict[str, int]) -> np.ndarray:
    """1 (x) ... (x) local (x) ... (x) 1 in party order."""
    out = None
    for p, d in party_dims.items():
        blk = local if p == party else np.eye(d)
        out = blk if out is None else np.kron(out, blk)
    return out.astype(complex) if np.iscomplexobj(local) else out


def sample_representation(scenario: Scenario, rank_class: RankClass | None = None,
                          seed=0) -> Representation:
    """Draw one random representation of ``scenario`` in ``rank_class``.

    Unconstrained parties must not appear (their letters are handled by the
    symbolic side of the pipeline).  Letters are sampled party-locally and
    embedded; completeness groups get one Haar unitary whose column blocks
    realize the declared ranks.
    """
    rng = _as_rng(seed)
    if scenario.unconstrained_parties():
        raise ValueError("cannot sample a representation with unconstrained parties")
    fk = scenario.field_kind
    party_dims = {p: scenario.dims[p] for p in scenario.parties}

    classified = scenario.classified_letters()
    position = {s.name: i for i, s in enumerate(classified)}
    if rank_class is None:
        # generic class: dichotomic/projector letters at balanced rank
        ranks = tuple(scenario.dims[s.party] // 2 or 1 for s in classified)
        rank_class = RankClass(ranks)
    if len(rank_class.ranks) != len(classified):
        raise ValueError("rank class length does not match classified letters")

    by_name = {s.name: i for i, s in enumerate(scenario.letters)}
    alphabet = scenario.alphabet()
    local: dict[int, np.ndarray] = {}

    grouped = {m.name for members in scenario.groups().values() for m in members}
    for gname, members in scenario.groups().items():
        D = party_dims[members[0].party]
        classed = [m.name in position for m in members]
        if all(classed):
            ranks = [rank_class.ranks[position[m.name]] for m in members]
            if sum(ranks) != D:
                raise ValueError(f"group {gname!r} ranks {tuple(ranks)} do not sum to dim {D}")
            u = haar_unitary(rng, D, fk)
            start = 0
            for m, r in zip(members, ranks):
                block = u[:, start:start + r]
                local[by_name[m.name]] = block @ block.conj().T
                start += r
        elif not any(classed):
            # No rank structure declared (POVM group): random full POVM
            # E_a = S^{-1/2} W_a S^{-1/2} with W_a Wishart, sum_a E_a = 1.
            ws = []
            for _ in members:
                g = ginibre(rng, D, D, fk)
                ws.append(g @ g.conj().T)
            s = sum(ws)
            vals, vecs = np.linalg.eigh(s)
            s_isqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
            for m, w in zip(members, ws):
                local[by_name[m.name]] = s_isqrt @ w @ s_isqrt
        else:
            raise ValueError(f"group {gname!r} mixes classified and unclassified members")

    for idx, spec in enumerate(scenario.letters):
        if spec.name in grouped:
            continue
        D = party_dims[spec.party]
        if spec.kind == "dichotomic":
            r = rank_class.ranks[position[spec.name]] if spec.name in position else D // 2
            local[idx] = 2.0 * random_projector(rng, D, r, fk) - np.eye(D)
        elif spec.kind == "projector":
            r = rank_class.ranks[position[spec.name]] if spec.name in position else D // 2
            local[idx] = random_projector(rng, D, r, fk)
        elif spec.kind == "state_prep":
            if spec.name in position:
                r = rank_class.ranks[position[spec.name]]
                local[idx] = random_projector(rng, D, r, fk)
            else:
                v = random_pure_state(rng, D, fk)
                local[idx] = np.outer(v, v.conj())
        elif spec.kind == "unitary":
            local[idx] = haar_unitary(rng, D, fk)
        elif spec.kind == "hermitian":
            g = ginibre(rng, D, D, fk)
            local[idx] = (g + g.conj().T) / 2.0

    ops = {}
    for idx, spec in enumerate(scenario.letters):
        ops[idx] = embed(local[idx], spec.party, party_dims)
    # adjoint partners of unitary letters
    for let in alphabet.letters[len(scenario.letters):]:
        base = let.adjoint_of
        local[let.index] = local[base].conj().T
        ops[let.index] = ops[base].conj().T

    joint = 1
    for d in party_dims.values():
        joint *= d
    psi = None
    if scenario.state_model == "random_pure":
        psi = random_pure_state(rng, joint, fk)
        rho = np.outer(psi, psi.conj())
    elif scenario.state_model == "maximally_entangled":
        pa, pb = scenario.parties
        D = party_dims[pa]
        psi = np.eye(D).reshape(-1) / np.sqrt(D)
        rho = np.outer(psi, psi.conj())
    else:  # tracial: unnormalized identity
        rho = np.eye(joint, dtype=float if fk == "real" else complex)

    return Representation(scenario=scenario, party_dims=party_dims, local=local,
                          ops=ops, rho=rho, psi=psi, rank_class=rank_class)


def sample_bell_representation(scenario: Scenario, rank_class=None, seed=0) -> Representation:
    """Multi-party wrapper of sample_representation (tensor embedding)."""
    if len(scenario.parties) < 2:
        raise ValueError("Bell sampling expects at least two parties")
    return sample_representation(scenario, rank_class, seed)


def sample_dilated_povm(d: int, D: int, seed=0, field_kind: str = "complex"):
    """Random d-outcome POVM on C^D via a projective Naimark dilation.

    Returns (M, E, U): M[a] = U (|a><a| (x) 1_D) U* are orthogonal projectors
    on C^d (x) C^D summing to the identity, and E[a] = V* M[a] V with
    V = |0> (x) 1_D are the induced effects on C^D, so that
    tr((|0><0| (x) rho) M[a]) = tr(rho E[a]) for every state rho.  The
    induced POVM is generically not projective.
    """
    rng = _as_rng(seed)
    u = haar_unitary(rng, d * D, field_kind)
    ms, es = [], []
    for a in range(d):
        block = u[:, a * D:(a + 1) * D]   # U (|a> (x) 1_D)
        m = block @ block.conj().T
        ms.append(m)
        es.append(m[:D, :D].copy())       # <0| (x) 1 block
    return ms, es, u


def sample_dilated_povm_representation(scenario: Scenario, rank_class=None, seed=0) -> Representation:
    """Representation where the scenario's POVM group is Naimark-dilated.

    The single finite party of dimension D is extended to C^d (x) C^D with d
    the number of POVM outcomes; POVM-group letters become the dilated
    projectors, every other letter A becomes 1_d (x) A, and the state is
    |0><0| (x) rho.  Moments of words linear in the POVM letters then equal
    the POVM moments on C^D.
    """
    rng = _as_rng(seed)
    if len(scenario.povm_groups) != 1:
        raise ValueError("dilated sampling expects exactly one POVM group")
    (gname,) = tuple(scenario.povm_groups)
    members = scenario.groups()[gname]
    d = len(members)

    base = sample_representation(scenario, rank_class, rng)
    D = base.joint_dim
    ms, es, u = sample_dilated_povm(d, D, rng, scenario.field_kind)

    by_name = {s.name: i for i, s in enumerate(scenario.letters)}
    ops = {}
    for idx in base.ops:
        ops[idx] = np.kron(np.eye(d), base.ops[idx])
    for a, m in enumerate(members):
        ops[by_name[m.name]] = ms[a]

    e0 = np.zeros((d, d))
    e0[0, 0] = 1.0
    rho = np.kron(e0, base.rho)
    psi = None
    if base.psi is not None:
        zero = np.zeros(d)
        zero[0] = 1.0
        psi = np.kron(zero, base.psi)
    meta = {"dilation_group": gname, "induced_effects": es, "dilation_unitary": u}
    return Representation(scenario=scenario, party_dims={"dilated": d * D},
                          local=ops, ops=ops, rho=rho, psi=psi,
                          rank_class=base.rank_class, meta=meta)


# ---------------------------------------------------------------------------
# Checks and evaluation.


def representation_residuals(rep: Representation) -> dict[str, float]:
    """Max violation of each defining constraint, for validation.

    Values are relative to the identity's norm on the relevant space, so a
    healthy sample sits at ~1e-15 and anything above 1e-12 is suspect.
    """
    sc = rep.scenario
    out: dict[str, float] = {}
    povm_letters = {m.name for g in sc.povm_groups for m in sc.groups()[g]}
    maxdev = 0.0
    for idx, spec in enumerate(sc.letters):
        a = rep.local[idx]
        eye = np.eye(a.shape[0])
        scale = np.sqrt(a.shape[0])
        if spec.name in povm_letters:
            # POVM effect: Hermitian and PSD, not necessarily idempotent
            herm = np.linalg.norm(a - a.conj().T)
            lmin = float(np.linalg.eigvalsh((a + a.conj().T) / 2.0)[0])
            dev = (herm + max(0.0, -lmin)) / scale
        elif spec.kind == "dichotomic":
            dev = np.linalg.norm(a @ a - eye) / scale
        elif spec.kind in ("projector", "state_prep"):
            dev = np.linalg.norm(a @ a - a) / scale
        elif spec.kind == "unitary":
            dev = np.linalg.norm(a @ a.conj().T - eye) / scale
        else:
            dev = np.linalg.norm(a - a.conj().T) / scale
        maxdev = max(maxdev, float(dev))
    out["letters"] = maxdev
    gdev = 0.0
    by_name = {s.name: i for i, s in enumerate(sc.letters)}
    for members in sc.groups().values():
        tot = sum(rep.local[by_name[m.name]] for m in members)
        gdev = max(gdev, float(np.linalg.norm(tot - np.eye(tot.shape[0])) / np.sqrt(tot.shape[0])))
    out["groups"] = gdev
    if sc.state_model == "tracial":
        out["state"] = float(np.linalg.norm(rep.rho - np.eye(rep.joint_dim)))
    else:
        herm = np.linalg.norm(rep.rho - rep.rho.conj().T)
        out["state"] = float(abs(np.trace(rep.rho) - 1.0) + herm)
    return out


def measured_ranks(rep: Representation, threshold: float = 1e-8) -> tuple[int, ...]:
    """Ranks of the classified objects of a sample (E = (X+1)/2 for dichotomic)."""
    sc = rep.scenario
    by_name = {s.name: i for i, s in enumerate(sc.letters)}
    ranks = []
    for spec in sc.classified_letters():
        a = rep.local[by_name[spec.name]]
        if spec.kind == "dichotomic":
            a = (a + np.eye(a.shape[0])) / 2.0
        ranks.append(matrix_rank_svd(a, threshold))
    return tuple(ranks)


def evaluate_objective(rep: Representation, poly=None) -> float:
    """<psi| p(X) |psi> (or tr(rho p(X))) for the scenario objective."""
    sc = rep.scenario
    if poly is None:
        poly = sc.objective_poly()
    val = 0.0 + 0.0j
    for w, c in poly.items():
        val += c * rep.moment(w)
    return float(val.real)


def relabel_representation(rep: Representation, generator: dict[str, tuple[str, bool]]) -> Representation:
    """Apply a scenario symmetry to a sample (letters permuted, flips applied).

    Used to validate declared symmetries numerically: the relabeled sample
    must be a representation of the image rank class with the same objective
    value.  Party-permuting generators transpose the state's tensor factors.
    """
    sc = rep.scenario
    full = sc._normalized_generator(generator)
    by_name = {s.name: i for i, s in enumerate(sc.letters)}
    spec_by_name = {s.name: s for s in sc.letters}

    party_map: dict[str, str] = {}
    for src, (dst, _) in full.items():
        pa, pb = spec_by_name[src].party, spec_by_name[dst].party
        if pa in party_map and party_map[pa] != pb:
            raise ValueError("symmetry maps one party to two different parties")
        party_map[pa] = pb

    local = {}
    for src, (dst, flipped) in full.items():
        a = rep.local[by_name[src]]
        if flipped:
            kind = spec_by_name[src].kind
            a = -a if kind == "dichotomic" else np.eye(a.shape[0]) - a
        local[by_name[dst]] = a

    parties = list(rep.party_dims)
    perm = [parties.index(party_map.get(p, p)) for p in parties]
    psi, rho = rep.psi, rep.rho
    if perm != list(range(len(parties))):
        shape = [rep.party_dims[p] for p in parties]
        if psi is not None:
            psi = psi.reshape(shape).transpose(perm).reshape(-1)
            rho = np.outer(psi, psi.conj())
        else:
            rho = rep.rho.reshape(shape + shape).transpose(perm + [p + len(shape) for p in perm])
            rho = rho.reshape(rep.joint_dim, rep.joint_dim)

    ops = {idx: embed(local[idx], sc.letters[idx].party, rep.party_dims)
           for idx in range(len(sc.letters))}
    ranks = None
    if rep.rank_class is not None:
        classified = sc.classified_letters()
        position = {s.name: i for i, s in enumerate(classified)}
        new = [0] * len(classified)
        for src, (dst, flipped) in full.items():
            if src in position:
                r = rep.rank_class.ranks[position[src]]
                cap = sc.dims[spec_by_name[src].party]
                new[position[dst]] = cap - r if flipped else r
        ranks = RankClass(tuple(new))
    return Representation(scenario=sc, party_dims=rep.party_dims, local=local,
                          ops=ops, rho=rho, psi=psi, rank_class=ranks)
