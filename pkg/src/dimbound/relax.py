"""Assembly of span SDPs and rank-class sweeps.

Given an orthonormal basis {Gamma_j} of the sampled moment-matrix span, the
dimension-constrained relaxation of one rank class is

    maximize   sum_w p_w M[entry(w)]
    subject to M = sum_j c_j Gamma_j,   M[eps, eps] = nu,   V M V* >= 0

with V the support isometry of the average sample.  A full bound at fixed
dimension is the maximum of the per-class values over all admissible rank
classes (the sweep).  Scenarios without dimension constraints are assembled
from the symbolic indicator basis instead, and mixed scenarios (one finite
party, the rest unconstrained) from the tensor elements of moment.py.
"""

from __future__ import annotations

import concurrent.futures
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import Alphabet, RankClass, Word, enumerate_words, poly_hermitize
from .basis import (BasisResult, BasisExhausted, DegenerateSupport, accumulate_basis,
                    cache_path, load_basis, orthonormalize_stack, save_basis,
                    support_isometry)
from .moment import (build_moment_matrix, build_symbolic_basis, realify,
                     word_entry_table)
from .sampler import (evaluate_objective, relabel_representation,
                      sample_representation, stream_rng)
from .scenario import Scenario, _KIND_RULE
from .solver import SolveReport, SolverError, solve_sdp


class AssemblyError(ValueError):
    pass


@dataclass
class SdpInstance:
    """One ready-to-solve span SDP: max f.x s.t. e.x = nu, sum x_j mats_j >= 0."""

    mats: np.ndarray
    f: np.ndarray
    e: np.ndarray
    nu: float
    x0: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def solve(self, **kwargs) -> SolveReport:
        return solve_sdp(self.mats, self.f, self.e, self.nu, x0=self.x0, **kwargs)


@dataclass
class SweepConfig:
    """Knobs shared by the sweep drivers.

    ``eps``/``confirmations`` control the span accumulation, ``cutoff`` the
    support isometry, the *_tol fields the solver.  ``dedup`` folds rank
    classes along the scenario's declared symmetries (after a numerical
    check of each generator).  ``index`` overrides the word list.
    """

    eps: float = 1e-7
    confirmations: int = 5
    cutoff: float = 1e-9
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 200
    seed: int = 0
    dedup: bool = False
    jobs: int = 1
    realify: bool = True
    index: list[Word] | None = None
    classes: list[tuple[int, ...]] | None = None
    check_samples: int = 2
    max_samples: int | None = None
    cache_dir: str | None = None
    verbose: bool = False


def normalization_value(scenario: Scenario) -> float:
    """M[eps, eps]: 1 for normalized states, D for the tracial model."""
    if scenario.state_model == "tracial":
        return float(scenario.joint_dim())
    return 1.0


def objective_vector(gammas: np.ndarray, poly, table, alphabet) -> np.ndarray:
    """f_j = sum_w p_w Gamma_j[entry(w)], with a clear error for missing words."""
    N = gammas.shape[0]
    f = np.zeros(N)
    for w, c in poly.items():
        key = alphabet.reduce(w)
        if key not in table:
            raise AssemblyError(
                f"objective word {'.'.join(alphabet.word_names(w)) or '1'} "
                f"cannot be realized as u*v over the word index; "
                f"increase the level or extend the word list")
        i, j = table[key]
        f += (c * gammas[:, i, j]).real
    return f


def assemble_sdp(basis: BasisResult, alphabet: Alphabet, index: list[Word],
                 objective, nu: float, entry_table=None,
                 cutoff: float = 1e-9) -> SdpInstance:
    """Span SDP of one accumulated basis.

    The objective is Hermitian-symmetrized first, entries are read off the
    raw (unprojected) basis matrices, and the PSD block is conjugated by the
    support isometry.  The average sample's coefficients are attached as a
    strictly feasible warm start.
    """
    if index[0] != ():
        raise AssemblyError("word index must start with the identity word")
    poly = poly_hermitize(objective, alphabet)
    if entry_table is None:
        entry_table = word_entry_table(alphabet, index)
    if basis.isometry is None:
        basis.isometry = support_isometry(basis.mean, cutoff)
    f = objective_vector(basis.gamma, poly, entry_table, alphabet)
    e = basis.gamma[:, 0, 0].real.copy()
    mats = basis.projected()
    if np.iscomplexobj(mats):
        herm = np.abs(mats - np.transpose(mats, (0, 2, 1)).conj()).max()
        if herm < 1e-12:
            mats = mats.real.copy()
    x0 = basis.coefficients(basis.mean).real
    meta = {"n_index": len(index), "n_support": mats.shape[1], "basis_size": basis.size,
            "samples": basis.samples_used}
    return SdpInstance(mats=mats, f=f, e=e, nu=float(nu), x0=x0, meta=meta)


# ---------------------------------------------------------------------------
# Finite-dimension rank-class sweep.


def class_stream(scenario: Scenario, rank_class: RankClass, class_index: int,
                 seed: int, index, alphabet, do_realify: bool, limit: int):
    """Moment-matrix sample stream for one rank class (seeded per sample)."""
    for s in range(limit):
        rng = stream_rng(seed, class_index, s)
        rep = sample_representation(scenario, rank_class, rng)
        g = build_moment_matrix(rep, index=index, alphabet=alphabet)
        yield realify(g) if do_realify else g


def _default_limit(index_size: int, config: SweepConfig) -> int:
    if config.max_samples is not None:
        return config.max_samples
    # worst case the span is all of Sym(n); add slack for the confirmations
    return index_size * (index_size + 1) // 2 + 64


def run_class(scenario: Scenario, rank_class: RankClass, class_index: int,
              index, alphabet, entry_table, nu: float, config: SweepConfig) -> dict:
    """Accumulate, assemble and solve one rank class; returns a plain record."""
    t0 = time.perf_counter()
    rec: dict = {"ranks": tuple(rank_class.ranks), "multiplicity": rank_class.multiplicity,
                 "class_index": class_index, "status": "failed", "value": None}
    try:
        basis = None
        ckey = None
        if config.cache_dir is not None:
            ckey = _class_cache_key(scenario, rank_class, index, config)
            basis = load_basis(cache_path(config.cache_dir, ckey))
            rec["cache_hit"] = basis is not None
        if basis is None:
            limit = _default_limit(len(index), config)
            stream = class_stream(scenario, rank_class, class_index, config.seed,
                                  index, alphabet, config.realify, limit)
            basis = accumulate_basis(stream, eps=config.eps,
                                     confirmations=config.confirmations)
            basis.isometry = support_isometry(basis.mean, config.cutoff)
            if config.cache_dir is not None:
                save_basis(cache_path(config.cache_dir, ckey), basis)
        rec["N"] = basis.size
        rec["samples"] = basis.samples_used
        rec["n_support"] = basis.isometry.shape[0]

        recon = 0.0
        for t in range(config.check_samples):
            rng = stream_rng(config.seed, class_index, basis.samples_used + t)
            rep = sample_representation(scenario, rank_class, rng)
            g = build_moment_matrix(rep, index=index, alphabet=alphabet)
            if config.realify:
                g = realify(g)
            recon = max(recon, basis.reconstruction_residual(g))
        rec["recon_residual"] = recon

        inst = assemble_sdp(basis, alphabet, index, scenario.objective_poly(alphabet),
                            nu, entry_table=entry_table, cutoff=config.cutoff)
        report = inst.solve(gap_tol=config.gap_tol, feas_tol=config.feas_tol,
                            max_iter=config.max_iter, verbose=config.verbose)
        rec.update(status=report.status, value=report.primal_value,
                   dual_value=report.dual_value, gap=report.gap,
                   psd_residual=report.psd_residual,
                   equality_residual=report.equality_residual,
                   iterations=report.iterations)
    except (BasisExhausted, DegenerateSupport, AssemblyError, SolverError,
            np.linalg.LinAlgError) as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
    rec["time"] = time.perf_counter() - t0
    return rec


def _class_cache_key(scenario, rank_class, index, config) -> str:
    import hashlib
    h = hashlib.sha256()
    h.update(scenario.canonical_key().encode())
    h.update(repr((tuple(rank_class.ranks), tuple(index), config.eps,
                   config.confirmations, config.cutoff, config.seed,
                   config.realify)).encode())
    return h.hexdigest()[:24]


@dataclass
class SweepResult:
    best_value: float | None
    best_class: tuple[int, ...] | None
    records: list[dict]
    partial: bool
    meta: dict = field(default_factory=dict)

    @property
    def values(self):
        return [r["value"] for r in self.records if r["value"] is not None]


def _sweep_task(args):
    return run_class(*args)


def check_symmetries(scenario: Scenario, tol: float = 1e-8) -> None:
    """Verify each declared symmetry on a sampled representation.

    A generator must leave the objective value invariant when the letters of
    a sample are relabeled accordingly; otherwise deduplicated sweeps would
    silently drop classes with different values.
    """
    if not scenario.symmetries:
        return
    classes = scenario.rank_classes(dedup=False)
    pick = classes[0]
    for cl in classes:
        if all(0 < r for r in cl.ranks):
            pick = cl
            break
    rep = sample_representation(scenario, pick, seed=20240817)
    base = evaluate_objective(rep)
    scale = max(1.0, abs(base))
    for gen in scenario.symmetries:
        relabeled = relabel_representation(rep, gen)
        other = evaluate_objective(relabeled)
        if abs(other - base) > tol * scale:
            raise AssemblyError(
                f"declared symmetry changes the objective value "
                f"({base:.12g} -> {other:.12g}); refusing to deduplicate")


def sweep_classes(scenario: Scenario, degree: int,
                  config: SweepConfig = SweepConfig(),
                  progress=None) -> SweepResult:
    """Solve the relaxation for every admissible rank class, take the max.

    Classes violating completeness rank sums never appear (pruned during
    enumeration).  A class whose accumulation or solve fails is recorded
    with its error and the sweep is marked partial; the returned best value
    is the maximum over classes with solver status "optimal".
    """
    alphabet = scenario.alphabet()
    index = config.index if config.index is not None else enumerate_words(alphabet, degree)
    entry_table = word_entry_table(alphabet, index)
    nu = normalization_value(scenario)
    if config.dedup:
        check_symmetries(scenario)
    classes = scenario.rank_classes(dedup=config.dedup)
    if config.classes is not None:
        wanted = {tuple(c) for c in config.classes}
        classes = [c for c in classes if tuple(c.ranks) in wanted]
    tasks = [(scenario, cl, i, index, alphabet, entry_table, nu, config)
             for i, cl in enumerate(classes)]

    records: list[dict] = []
    if config.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.jobs) as ex:
            for rec in ex.map(_sweep_task, tasks):
                records.append(rec)
                if progress:
                    progress(rec)
    else:
        for task in tasks:
            rec = _sweep_task(task)
            records.append(rec)
            if progress:
                progress(rec)

    solved = [r for r in records if r["status"] == "optimal"]
    partial = len(solved) < len(records)
    best = max(solved, key=lambda r: r["value"], default=None)
    return SweepResult(
        best_value=best["value"] if best else None,
        best_class=best["ranks"] if best else None,
        records=records, partial=partial,
        meta={"degree": degree, "n_index": len(index), "n_classes": len(classes),
              "seed": config.seed, "dedup": config.dedup, "scenario": scenario.name},
    )


# ---------------------------------------------------------------------------
# Unconstrained (symbolic) and hybrid assembly.


def assemble_unconstrained_sdp(alphabet: Alphabet, degree: int, objective,
                               index: list[Word] | None = None) -> SdpInstance:
    """Moment relaxation with no dimension constraint (symbolic basis).

    The real basis elements are the indicator matrices of self-adjoint word
    pairs; they are mutually orthogonal by construction so no pruning is
    needed.
    """
    sym = build_symbolic_basis(alphabet, degree, index=index)
    mats, pairs = sym.real_elements()
    poly = poly_hermitize(objective, alphabet)
    table = word_entry_table(alphabet, sym.index)
    f = objective_vector(mats, poly, table, alphabet)
    e = mats[:, 0, 0].copy()
    meta = {"n_index": len(sym.index), "pairs": len(pairs), "kind": "unconstrained"}
    return SdpInstance(mats=mats, f=f, e=e, nu=1.0, meta=meta)


def _hermitian_stream_to_realpair(stream):
    # real vectorization of Hermitian matrices, so Gram-Schmidt takes only
    # real combinations and the recovered basis matrices stay Hermitian
    for g in stream:
        if np.iscomplexobj(g):
            h = (g + g.conj().T) / 2.0
            yield np.stack([h.real, h.imag])
        else:
            yield np.stack([g, np.zeros_like(g)])


def finite_party_scenario(scenario: Scenario, party: str) -> Scenario:
    """Sub-scenario with only one party's letters (for hybrid finite bases)."""
    letters = tuple(s for s in scenario.letters if s.party == party)
    return Scenario(letters=letters, dims={party: scenario.dims[party]},
                    objective={}, field_kind=scenario.field_kind,
                    state_model="random_pure", name=f"{scenario.name}[{party}]")


def split_word_by_party(alphabet: Alphabet, word: Word, party: str):
    """(letters of ``party``, the rest), each in original order."""
    fin = tuple(i for i in word if alphabet[i].party == party)
    sym = tuple(i for i in word if alphabet[i].party != party)
    return fin, sym


def _translate(word: Word, src: Alphabet, dst: Alphabet) -> Word:
    return tuple(dst.letter(src[i].name).index for i in word)


def assemble_hybrid_sdp(scenario: Scenario, fin_degree: int,
                        sym_index: list[Word] | None = None,
                        sym_degree: int | None = None,
                        rank_class: RankClass | None = None,
                        class_index: int = 0,
                        config: SweepConfig = SweepConfig()) -> SdpInstance:
    """Mixed relaxation: one finite party, the other parties unconstrained.

    The finite factor is an accumulated basis of complex moment matrices of
    the finite party alone (reduced word index, real-linear Gram-Schmidt so
    the basis matrices stay Hermitian); the unconstrained factor is the
    symbolic indicator basis.  Their tensor elements are orthonormalized
    and the program reads entries exactly like the finite case.
    """
    finite = scenario.finite_parties()
    if len(finite) != 1 or not scenario.unconstrained_parties():
        raise AssemblyError("hybrid assembly needs exactly one finite party and "
                            "at least one unconstrained party")
    party = finite[0]
    full_alpha = scenario.alphabet()

    fin_sc = finite_party_scenario(scenario, party)
    fin_alpha = fin_sc.alphabet()
    fin_index = enumerate_words(fin_alpha, fin_degree, reduced=True)
    limit = _default_limit(2 * len(fin_index), config)

    def fin_stream():
        for s in range(limit):
            rng = stream_rng(config.seed, class_index, s)
            rep = sample_representation(fin_sc, rank_class, rng)
            yield build_moment_matrix(rep, index=fin_index, alphabet=fin_alpha)

    acc = accumulate_basis(_hermitian_stream_to_realpair(fin_stream()),
                           eps=config.eps, confirmations=config.confirmations)
    fin_gammas = acc.gamma[:, 0] + 1j * acc.gamma[:, 1]

    from .algebra import Letter
    sym_specs = [s for s in scenario.letters if s.party != party]
    if any(s.kind == "unitary" for s in sym_specs):
        raise AssemblyError("unitary letters are not supported on the "
                            "unconstrained side of a hybrid program")
    sym_alpha = Alphabet([
        Letter(i, s.name, rule=_KIND_RULE[s.kind], party=s.party)
        for i, s in enumerate(sym_specs)])
    if sym_index is None:
        if sym_degree is None:
            raise AssemblyError("need sym_degree or an explicit sym_index")
        sym_index = enumerate_words(sym_alpha, sym_degree, reduced=True)
    sym = build_symbolic_basis(sym_alpha, 0, index=sym_index)

    # The full element set {Re(G_j) x S_u, Im(G_j) x A_u} is orthogonal
    # across word classes u and across the sym/anti split, so it suffices to
    # orthonormalize the small finite-side stacks and normalize the factors.
    sym_parts, anti_parts = sym.split_elements()
    re_basis = orthonormalize_stack(np.ascontiguousarray(fin_gammas.real), eps=1e-9)
    im_basis = orthonormalize_stack(np.ascontiguousarray(fin_gammas.imag), eps=1e-9)
    blocks = []
    for s_u in sym_parts:
        s_hat = s_u / np.linalg.norm(s_u)
        blocks.extend(np.kron(r, s_hat) for r in re_basis)
    for a_u in anti_parts:
        a_hat = a_u / np.linalg.norm(a_u)
        blocks.extend(np.kron(im, a_hat) for im in im_basis)
    mats = np.stack(blocks)

    fin_table = word_entry_table(fin_alpha, fin_index)
    sym_table = word_entry_table(sym_alpha, sym_index)
    ns = len(sym_index)
    poly = poly_hermitize(scenario.objective_poly(full_alpha), full_alpha)
    f = np.zeros(mats.shape[0])
    for w, c in poly.items():
        wf, ws = split_word_by_party(full_alpha, w, party)
        kf = fin_alpha.reduce(_translate(wf, full_alpha, fin_alpha))
        ks = sym_alpha.reduce(_translate(ws, full_alpha, sym_alpha))
        if kf not in fin_table or ks not in sym_table:
            raise AssemblyError(
                f"objective word {'.'.join(full_alpha.word_names(w)) or '1'} "
                f"cannot be realized over the hybrid index")
        (i1, j1), (i2, j2) = fin_table[kf], sym_table[ks]
        f += (c * mats[:, i1 * ns + i2, j1 * ns + j2]).real
    e = mats[:, 0, 0].copy()

    # degenerate rank classes leave a common kernel (duplicate index rows),
    # emptying the interior; conjugate the PSD block onto the common range
    R = np.einsum("kab,kcb->ac", mats, mats, optimize=True)
    w, U = np.linalg.eigh(R)
    V = U[:, w > config.cutoff * w[-1]].T
    mats = np.einsum("ra,kab,sb->krs", V, mats, V, optimize=True)
    meta = {"kind": "hybrid", "n_fin": len(fin_index), "n_sym": ns,
            "fin_basis": int(fin_gammas.shape[0]),
            "re_rank": int(re_basis.shape[0]), "im_rank": int(im_basis.shape[0]),
            "independent": int(mats.shape[0]), "n_support": int(mats.shape[1]),
            "fin_samples": acc.samples_used}
    return SdpInstance(mats=mats, f=f, e=e, nu=1.0, meta=meta)


def sweep_hybrid_classes(scenario: Scenario, fin_degree: int,
                         sym_index: list[Word] | None = None,
                         sym_degree: int | None = None,
                         config: SweepConfig = SweepConfig()) -> SweepResult:
    """Hybrid bound maximized over the finite party's rank classes."""
    finite = scenario.finite_parties()
    if len(finite) != 1:
        raise AssemblyError("hybrid sweep needs exactly one finite party")
    fin_sc = finite_party_scenario(scenario, finite[0])
    classes = fin_sc.rank_classes(dedup=config.dedup)
    if config.classes is not None:
        wanted = {tuple(c) for c in config.classes}
        classes = [c for c in classes if tuple(c.ranks) in wanted]
    records = []
    for i, cl in enumerate(classes):
        t0 = time.perf_counter()
        rec = {"ranks": tuple(cl.ranks), "multiplicity": cl.multiplicity,
               "class_index": i, "status": "failed", "value": None}
        try:
            inst = assemble_hybrid_sdp(scenario, fin_degree, sym_index=sym_index,
                                       sym_degree=sym_degree, rank_class=cl,
                                       class_index=i, config=config)
            report = inst.solve(gap_tol=config.gap_tol, feas_tol=config.feas_tol,
                                max_iter=config.max_iter, verbose=config.verbose)
            rec.update(status=report.status, value=report.primal_value,
                       dual_value=report.dual_value, gap=report.gap,
                       N=inst.meta["independent"])
        except (BasisExhausted, DegenerateSupport, AssemblyError, SolverError,
                np.linalg.LinAlgError) as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
        rec["time"] = time.perf_counter() - t0
        records.append(rec)
    solved = [r for r in records if r["status"] == "optimal"]
    best = max(solved, key=lambda r: r["value"], default=None)
    return SweepResult(best_value=best["value"] if best else None,
                       best_class=best["ranks"] if best else None,
                       records=records, partial=len(solved) < len(records),
                       meta={"fin_degree": fin_degree, "kind": "hybrid",
                             "scenario": scenario.name})


def named_level_index(alphabet: Alphabet, level) -> list[Word]:
    """Word index for a named level: an integer degree plus extensions.

    "K" is the full degree-K index.  "K+cross" adds the degree-2 products of
    letters from distinct parties (the usual intermediate levels).  A party
    pattern such as "2+AAB+ABB" adds every reduced word whose per-position
    party string equals the pattern; patterns assume single-letter party
    names.
    """
    parts = [p.strip() for p in str(level).split("+")]
    words = enumerate_words(alphabet, int(parts[0]), reduced=True)
    seen = set(words)
    added = []
    n = len(alphabet)
    for extra in parts[1:]:
        if extra == "cross":
            for i in range(n):
                for j in range(n):
                    if alphabet[i].party == alphabet[j].party:
                        continue
                    w = alphabet.reduce((i, j))
                    if w not in seen:
                        seen.add(w)
                        added.append(w)
        elif extra.isalpha() and extra.isupper():
            for w in enumerate_words(alphabet, len(extra), reduced=True):
                if len(w) != len(extra):
                    continue
                if "".join(alphabet[i].party for i in w) != extra:
                    continue
                if w not in seen:
                    seen.add(w)
                    added.append(w)
        else:
            raise ValueError(f"unknown level extension {extra!r}")
    if added:
        words = words + sorted(added, key=lambda w: (len(w), w))
    return words


def compute_bound(scenario: Scenario, degree, config: SweepConfig = SweepConfig(),
                  sym_level=None, progress=None) -> SweepResult:
    """Upper bound for any scenario, dispatching on its dimension pattern.

    All parties finite: rank-class sweep.  All parties unconstrained: one
    symbolic program.  Mixed: hybrid sweep over the finite party's classes,
    with ``sym_level`` naming the unconstrained-side index (defaults to the
    same level as ``degree``).
    """
    finite = scenario.finite_parties()
    unconstrained = scenario.unconstrained_parties()
    base_degree = int(str(degree).split("+")[0])
    if not unconstrained:
        cfg = config
        if "+" in str(degree) and config.index is None:
            cfg = replace(config, index=named_level_index(scenario.alphabet(), degree))
        return sweep_classes(scenario, base_degree, cfg, progress=progress)
    if not finite:
        alphabet = scenario.alphabet()
        index = config.index if config.index is not None else \
            named_level_index(alphabet, degree)
        inst = assemble_unconstrained_sdp(alphabet, 0, scenario.objective_poly(alphabet),
                                          index=index)
        t0 = time.perf_counter()
        rec = {"ranks": None, "multiplicity": 1, "class_index": 0,
               "status": "failed", "value": None, "N": inst.mats.shape[0]}
        try:
            report = inst.solve(gap_tol=config.gap_tol, feas_tol=config.feas_tol,
                                max_iter=config.max_iter, verbose=config.verbose)
            rec.update(status=report.status, value=report.primal_value,
                       dual_value=report.dual_value, gap=report.gap,
                       psd_residual=report.psd_residual,
                       equality_residual=report.equality_residual,
                       iterations=report.iterations)
        except (SolverError, np.linalg.LinAlgError) as exc:
            rec["error"] = f"{type(exc).__name__}: {exc}"
        rec["time"] = time.perf_counter() - t0
        if progress:
            progress(rec)
        solved = rec["status"] == "optimal"
        return SweepResult(best_value=rec["value"] if solved else None,
                           best_class=None, records=[rec], partial=not solved,
                           meta={"kind": "unconstrained", "level": str(degree),
                                 "n_index": inst.meta["n_index"],
                                 "scenario": scenario.name})
    # mixed: finite side at integer degree, symbolic side at sym_level
    party = finite[0]
    sym_specs = [s for s in scenario.letters if s.party != party]
    from .algebra import Letter
    sym_alpha = Alphabet([Letter(i, s.name, rule=_KIND_RULE[s.kind], party=s.party)
                          for i, s in enumerate(sym_specs)])
    sym_index = config.index if config.index is not None else \
        named_level_index(sym_alpha, sym_level if sym_level is not None else degree)
    cfg = replace(config, index=None)
    return sweep_hybrid_classes(scenario, base_degree, sym_index=sym_index, config=cfg)
