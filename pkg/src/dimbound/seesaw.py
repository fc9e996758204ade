"""Variational lower bounds by alternating block maximization (see-saw).

Each block update (the state, one operator letter, or one completeness
group) is the exact optimum with everything else held fixed, so the value
trajectory is nondecreasing; the result after many random restarts is a
certified lower bound matching witness included.  Rank classes can be
pinned (updates preserve the active class) or left free, in which case
spectral updates are allowed to migrate ranks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import RankClass
from .sampler import Representation, embed, evaluate_objective, sample_representation
from .scenario import Scenario

PAULI = np.array([
    [[0.0, 1.0], [1.0, 0.0]],
    [[0.0, -1.0j], [1.0j, 0.0]],
    [[1.0, 0.0], [0.0, -1.0]],
])


class SeesawError(RuntimeError):
    pass


@dataclass
class SeesawResult:
    value: float
    rep: Representation
    values: list[float]
    trajectory: list[float]
    meta: dict = field(default_factory=dict)


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(restart,)))


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2.0


def _ptrace_keep(mat: np.ndarray, dims: list[int], keep: int) -> np.ndarray:
    """Partial trace onto one tensor factor: tr((1 (x) L (x) 1) M) = tr(L out)."""
    n = len(dims)
    if n == 1:
        return mat
    t = mat.reshape(*dims, *dims)
    row = [chr(ord("a") + i) for i in range(n)]
    col = list(row)
    col[keep] = chr(ord("a") + n)
    spec = "".join(row) + "".join(col) + "->" + row[keep] + col[keep]
    return np.einsum(spec, t)


def _prod(ops, iterable, dim) -> np.ndarray:
    out = None
    for i in iterable:
        out = ops[i] if out is None else out @ ops[i]
    return np.eye(dim, dtype=complex) if out is None else out


def _top_r_projector(h: np.ndarray, r: int) -> np.ndarray:
    n = h.shape[0]
    if r <= 0:
        return np.zeros_like(h)
    if r >= n:
        return np.eye(n, dtype=h.dtype)
    _, vecs = np.linalg.eigh(h)
    v = vecs[:, n - r:]
    return v @ v.conj().T

def _positive_projector(h: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(h)
    v = vecs[:, vals > 0]
    return v @ v.conj().T


def max_quadratic_on_sphere(q: np.ndarray, t: np.ndarray) -> np.ndarray:
    """argmax of a'Qa + t'a over the unit sphere (trust-region subproblem).

    Stationarity gives a = (2(lam - Q))^{-1} t with multiplier lam >= the top
    eigenvalue of Q; the secular equation |a(lam)| = 1 is solved by bisection,
    with the standard hard-case fallback when t has no component on the top
    eigenspace.
    """
    q = _hermitize(q).real
    mu, v = np.linalg.eigh(q)
    b = v.T @ t
    top = mu[-1]
    bn = np.linalg.norm(b)
    if bn < 1e-14:
        return v[:, -1]

    def coeffs(lam):
        return b / (2.0 * (lam - mu))

    def g(lam):
        return float(np.sum((b / (2.0 * (lam - mu))) ** 2))

    lo = top + 1e-300
    hi = top + bn / 2.0 + 1e-15
    while g(hi) > 1.0:  # numerical slack; widen
        hi = top + 2.0 * (hi - top)
    # hard case: even lam -> top+ cannot reach |a| = 1
    near = np.abs(mu - top) < 1e-12 * max(1.0, abs(top))
    if np.all(np.abs(b[near]) < 1e-12):
        denom = 2.0 * (top - mu)
        a = np.divide(b, denom, out=np.zeros_like(b), where=~near)
        s2 = 1.0 - float(a @ a)
        if s2 > 0:
            a = a + np.sqrt(s2) * (np.arange(len(mu)) == len(mu) - 1)
            return v @ a
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if g(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    a = coeffs(hi)
    nrm = np.linalg.norm(a)
    if nrm > 0:
        a = a / nrm
    return v @ a


class _Engine:
    """One see-saw run on a mutable representation."""

    def __init__(self, scenario: Scenario, rep: Representation, poly):
        self.sc = scenario
        self.rep = rep
        self.poly = poly
        self.dims = [scenario.dims[p] for p in scenario.parties]
        self.party_pos = {p: i for i, p in enumerate(scenario.parties)}
        self.by_name = {s.name: i for i, s in enumerate(scenario.letters)}
        self.trajectory = [evaluate_objective(rep, poly)]

    # -- bookkeeping -------------------------------------------------------

    def value(self) -> float:
        return evaluate_objective(self.rep, self.poly)

    def _record(self, label: str):
        v = self.value()
        prev = self.trajectory[-1]
        if v < prev - 1e-10 * max(1.0, abs(prev)):
            raise SeesawError(f"{label} update decreased the objective "
                              f"({prev:.12g} -> {v:.12g})")
        self.trajectory.append(v)

    def _set_local(self, idx: int, mat: np.ndarray):
        rep = self.rep
        spec = self.sc.letters[idx]
        rep.local[idx] = mat
        rep.ops[idx] = embed(mat, spec.party, rep.party_dims)

    def _effective(self, idx: int):
        """R with tr(letter R) the letter-linear part; None if nonlinear."""
        rep = self.rep
        d = rep.rho.shape[0]
        r = np.zeros((d, d), dtype=complex)
        nonlinear = False
        for w, c in self.poly.items():
            k = w.count(idx)
            if k == 0:
                continue
            if k > 1:
                nonlinear = True
                continue
            p = w.index(idx)
            pre = _prod(rep.ops, w[:p], d)
            post = _prod(rep.ops, w[p + 1:], d)
            r += c * (post @ rep.rho @ pre)
        return r, nonlinear

    def _local_effective(self, idx: int):
        r, nonlinear = self._effective(idx)
        keep = self.party_pos[self.sc.letters[idx].party]
        return _hermitize(_ptrace_keep(r, self.dims, keep)), nonlinear

    # -- block updates -----------------------------------------------------

    def update_state(self):
        if self.sc.state_model != "random_pure":
            return
        rep = self.rep
        d = rep.rho.shape[0]
        h = np.zeros((d, d), dtype=complex)
        for w, c in self.poly.items():
            h += c * _prod(rep.ops, w, d)
        _, vecs = np.linalg.eigh(_hermitize(h))
        psi = vecs[:, -1]
        rep.psi = psi
        rep.rho = np.outer(psi, psi.conj())
        self._record("state")

    def update_letter(self, idx: int, rank: int | None):
        spec = self.sc.letters[idx]
        D = self.sc.dims[spec.party]
        r, nonlinear = self._local_effective(idx)
        if nonlinear:
            self._update_qubit_quadratic(idx, rank)
            return
        if spec.kind == "dichotomic":
            if rank is None:
                proj = _positive_projector(r)
            elif rank in (0, D):
                self._record(spec.name)
                return
            else:
                proj = _top_r_projector(r, rank)
            new = 2.0 * proj - np.eye(D)
        elif spec.kind == "projector":
            proj = _positive_projector(r) if rank is None else _top_r_projector(r, rank)
            new = proj
        elif spec.kind == "state_prep":
            _, vecs = np.linalg.eigh(r)
            v = vecs[:, -1]
            new = np.outer(v, v.conj())
        else:
            raise SeesawError(f"no see-saw update for letter kind {spec.kind!r}")
        if self.sc.field_kind == "real":
            new = new.real
        self._set_local(idx, new)
        self._record(spec.name)

    def _update_qubit_quadratic(self, idx: int, rank: int | None):
        """Dichotomic letter appearing twice per word, on a qubit party.

        Within the rank-1 class X = a.sigma with |a| = 1; the objective is a
        quadratic a'Qa + t'a on the sphere, solved exactly.
        """
        spec = self.sc.letters[idx]
        D = self.sc.dims[spec.party]
        if spec.kind != "dichotomic" or D != 2:
            raise SeesawError(
                f"letter {spec.name!r} appears more than once per objective "
                f"word; only qubit dichotomic letters support this")
        rep = self.rep
        d = rep.rho.shape[0]
        sig = [embed(PAULI[k], spec.party, rep.party_dims) for k in range(3)]
        q = np.zeros((3, 3))
        t = np.zeros(3)
        for w, c in self.poly.items():
            k = w.count(idx)
            if k == 0:
                continue
            if k > 2:
                raise SeesawError(f"letter {spec.name!r} appears {k} times in one "
                                  f"objective word; see-saw supports at most 2")
            if k == 1:
                p = w.index(idx)
                pre = _prod(rep.ops, w[:p], d)
                post = _prod(rep.ops, w[p + 1:], d)
                for i in range(3):
                    t[i] += (c * np.trace(rep.rho @ pre @ sig[i] @ post)).real
            else:
                p1 = w.index(idx)
                p2 = w.index(idx, p1 + 1)
                pre = _prod(rep.ops, w[:p1], d)
                mid = _prod(rep.ops, w[p1 + 1:p2], d)
                post = _prod(rep.ops, w[p2 + 1:], d)
                for i in range(3):
                    left = rep.rho @ pre @ sig[i] @ mid
                    for j in range(3):
                        q[i, j] += (c * np.trace(left @ sig[j] @ post)).real
        if self.sc.field_kind == "real":
            # real qubits have no sigma_y component
            keep = np.array([0, 2])
            a2 = max_quadratic_on_sphere(q[np.ix_(keep, keep)], t[keep])
            a = np.zeros(3)
            a[keep] = a2
        else:
            a = max_quadratic_on_sphere((q + q.T) / 2.0, t)
        cand = np.tensordot(a, PAULI, axes=1)
        if self.sc.field_kind == "real":
            cand = cand.real
        old = self.rep.local[idx]
        best, best_v = None, -np.inf
        if rank == 1:
            options = [cand]
        elif rank is None:
            options = [cand, np.eye(2), -np.eye(2)]
        else:
            options = [np.eye(2) if rank == 2 else -np.eye(2)]
        for m in options:
            self._set_local(idx, m)
            v = self.value()
            if v > best_v:
                best, best_v = m, v
        self._set_local(idx, best if best is not None else old)
        self._record(spec.name)

    def update_group(self, gname: str, members, ranks):
        rep = self.rep
        free = ranks is None
        idxs = [self.by_name[m.name] for m in members]
        povm = gname in self.sc.povm_groups
        for ai in range(len(idxs)):
            for bi in range(ai + 1, len(idxs)):
                ia, ib = idxs[ai], idxs[bi]
                ra, _ = self._local_effective(ia)
                rbm, _ = self._local_effective(ib)
                ea, eb = rep.local[ia], rep.local[ib]
                s = ea + eb
                if povm:
                    vals, vecs = np.linalg.eigh(_hermitize(s))
                    vals = np.clip(vals, 0.0, None)
                    root = (vecs * np.sqrt(vals)) @ vecs.conj().T
                    pi = _positive_projector(_hermitize(root @ (ra - rbm) @ root))
                    new_a = _hermitize(root @ pi @ root)
                else:
                    vals, vecs = np.linalg.eigh(_hermitize(s))
                    bvecs = vecs[:, vals > 0.5]
                    sub = _hermitize(bvecs.conj().T @ (ra - rbm) @ bvecs)
                    svals, svecs = np.linalg.eigh(sub)
                    if free:
                        w = svecs[:, svals > 0]
                    else:
                        keep = ranks[ai]
                        w = svecs[:, sub.shape[0] - keep:] if keep > 0 else svecs[:, :0]
                    pa = (bvecs @ w) @ (bvecs @ w).conj().T
                    new_a = pa
                if self.sc.field_kind == "real":
                    new_a = new_a.real
                    s = s.real
                self._set_local(ia, new_a)
                self._set_local(ib, s - new_a)
                self._record(gname)


def _cyclic_canon(word, alphabet):
    best = alphabet.reduce(word)
    changed = True
    while changed:
        changed = False
        for i in range(1, len(best)):
            r = alphabet.reduce(best[i:] + best[:i])
            if (len(r), r) < (len(best), best):
                best = r
                changed = True
    return best


def _trace_hermitian(poly, alphabet) -> bool:
    """Hermitian as a trace functional (words compared up to rotation)."""
    fwd: dict = {}
    bwd: dict = {}
    for w, c in poly.items():
        k = _cyclic_canon(w, alphabet)
        fwd[k] = fwd.get(k, 0.0) + complex(c)
        ka = _cyclic_canon(alphabet.adjoint(w), alphabet)
        bwd[ka] = bwd.get(ka, 0.0) + complex(c).conjugate()
    return all(abs(fwd.get(k, 0.0) - bwd.get(k, 0.0)) <= 1e-12
               for k in set(fwd) | set(bwd))


def seesaw_lower_bound(scenario: Scenario, rank_class: RankClass | None = None,
                       restarts: int = 50, max_sweeps: int = 500,
                       tol: float = 1e-9, seed: int = 0) -> SeesawResult:
    """Best lower bound over random restarts of alternating maximization.

    With ``rank_class`` given, spectral updates preserve the class; without
    it each restart starts from a random admissible class and updates are
    free to change ranks.  Raises on non-Hermitian objectives.
    """
    from .algebra import poly_is_hermitian

    if scenario.unconstrained_parties():
        raise ValueError("see-saw needs a finite dimension for every party")
    alphabet = scenario.alphabet()
    poly = scenario.objective_poly(alphabet)
    if not poly_is_hermitian(poly, alphabet):
        # tracial objectives only need Hermiticity under the trace
        if scenario.state_model != "tracial" or not _trace_hermitian(poly, alphabet):
            raise ValueError("see-saw objective must be Hermitian")

    if rank_class is not None and not isinstance(rank_class, RankClass):
        rank_class = RankClass(tuple(rank_class))
    classified = scenario.classified_letters()
    position = {s.name: i for i, s in enumerate(classified)}
    groups = scenario.groups()
    grouped = {m.name for ms in groups.values() for m in ms}

    generic = rank_class
    classes: list[RankClass] = []
    if rank_class is None:
        classes = scenario.rank_classes(dedup=False)
        # degenerate ranks (0 or D) pin a letter to a constant, which breeds
        # weak local maxima; half the restarts begin in the least degenerate
        caps = [scenario.dims[s.party] for s in classified]
        generic = min(classes, key=lambda c: (
            sum(1 for r, cap in zip(c.ranks, caps) if r in (0, cap)),
            -min(c.ranks, default=0)))

    best: SeesawResult | None = None
    values = []
    for rt in range(restarts):
        rng = _restart_rng(seed, rt)
        if rank_class is not None:
            cl = rank_class
        elif rt % 2 == 0:
            cl = generic
        else:
            cl = classes[rng.integers(len(classes))]
        rep = sample_representation(scenario, cl, rng)
        eng = _Engine(scenario, rep, poly)
        fixed = rank_class is not None
        prev = eng.trajectory[-1]
        for _ in range(max_sweeps):
            eng.update_state()
            for gname, members in groups.items():
                ranks = None
                if fixed and all(m.name in position for m in members):
                    ranks = [cl.ranks[position[m.name]] for m in members]
                eng.update_group(gname, members, ranks)
            for i, spec in enumerate(scenario.letters):
                if spec.name in grouped:
                    continue
                rk = None
                if spec.name in position:
                    rk = cl.ranks[position[spec.name]] if fixed else None
                elif spec.kind == "state_prep":
                    rk = 1
                eng.update_letter(i, rk)
            cur = eng.trajectory[-1]
            if cur - prev <= tol * max(1.0, abs(cur)):
                break
            prev = cur
        v = eng.trajectory[-1]
        values.append(v)
        if best is None or v > best.value:
            best = SeesawResult(value=v, rep=rep, values=[], trajectory=eng.trajectory,
                                meta={"restart": rt, "class": tuple(cl.ranks)})
    assert best is not None
    best.values = values
    best.meta.update(restarts=restarts, seed=seed, scenario=scenario.name)
    return best
