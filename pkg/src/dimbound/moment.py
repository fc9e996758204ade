"""Moment matrices of sampled representations, and their symbolic cousins.

For a representation with state rho and word index [u_1, ..., u_W], the
moment matrix is G[u, v] = tr(rho u* v).  It is assembled through a
column-stacking scheme: the vectorized word operators |w> are built degree
by degree, tensoring the letter stack onto the previous block and
contracting the inner pair of indices (one einsum per degree), and then
G = C* (1 (x) conj(rho)) C in one shot.  A straightforward
product-of-matrices evaluation is kept alongside as the test oracle.

The symbolic side provides the indicator basis N_u of unconstrained moment
matrices (N_u[v, w] = 1 iff v* w reduces to u) and the mixed
finite x unconstrained element set used by hybrid relaxations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import Alphabet, Word, enumerate_words, poly_degree
from .sampler import Representation


def _raw_word_count(n_letters: int, degree: int) -> int:
    return sum(n_letters ** d for d in range(degree + 1))


def word_stack(rep: Representation, degree: int, alphabet: Alphabet | None = None) -> np.ndarray:
    """Vectorized operators of all raw words up to ``degree``.

    Returns C with shape (D, D, W): C[:, :, w] is the matrix of the w-th raw
    word in graded lex order.  Built per degree: the stack of degree d is the
    letter stack tensored onto the degree d-1 stack with the adjacent pair of
    indices contracted, which is a single einsum per degree.
    """
    alphabet = alphabet or rep.scenario.alphabet()
    n = len(alphabet)
    D = rep.joint_dim
    complex_any = any(np.iscomplexobj(rep.ops[i]) for i in range(n)) or np.iscomplexobj(rep.rho)
    dtype = complex if complex_any else float
    lam = np.empty((n, D, D), dtype=dtype)
    for i in range(n):
        lam[i] = rep.ops[i]

    blocks = [np.eye(D, dtype=dtype)[:, :, None]]
    for _ in range(degree):
        prev = blocks[-1]                       # (D, D, W_prev)
        nxt = np.einsum("lab,bcw->aclw", lam, prev, optimize=True)
        blocks.append(nxt.reshape(D, D, n * prev.shape[2]))
    return np.concatenate(blocks, axis=2)


def build_moment_matrix(rep: Representation, degree: int | None = None,
                        index: list[Word] | None = None,
                        alphabet: Alphabet | None = None) -> np.ndarray:
    """Moment matrix G[u, v] = tr(rho u* v) over a word index.

    ``index`` defaults to the raw (un-deduplicated) graded-lex index up to
    ``degree``; a custom word list selects the corresponding columns of the
    raw stack.  The state is the representation's rho (the unnormalized
    identity for tracial scenarios), so G[eps, eps] is 1 or D accordingly.
    """
    alphabet = alphabet or rep.scenario.alphabet()
    if index is None:
        if degree is None:
            raise ValueError("need a degree or an explicit word index")
        index = enumerate_words(alphabet, degree)
        cols = None
    else:
        degree = max((len(w) for w in index), default=0)
        n = len(alphabet)
        # position of a word inside the raw graded-lex stack
        def pos(w: Word) -> int:
            p = _raw_word_count(n, len(w) - 1) if w else 0
            for i, l in enumerate(w):
                p += l * n ** (len(w) - 1 - i)
            return p
        cols = [pos(w) for w in index]

    C = word_stack(rep, degree, alphabet)
    if cols is not None:
        C = C[:, :, cols]
    rho = rep.rho
    # G = C* (1 (x) conj(rho)) C:  tr(rho U* V) = sum_kj conj(U[k,j]) (V rho^T*)[k,j]
    P = np.einsum("kiw,ij->kjw", C, rho, optimize=True)
    D = C.shape[0]
    W = C.shape[2]
    G = C.reshape(D * D, W).conj().T @ P.reshape(D * D, W)
    return G


def build_moment_matrix_direct(rep: Representation, degree: int | None = None,
                               index: list[Word] | None = None,
                               alphabet: Alphabet | None = None) -> np.ndarray:
    """Oracle: the same moment matrix by explicit word products and traces."""
    alphabet = alphabet or rep.scenario.alphabet()
    if index is None:
        index = enumerate_words(alphabet, degree)
    mats = [rep.word_matrix(w) for w in index]
    W = len(index)
    G = np.empty((W, W), dtype=complex)
    for i, U in enumerate(mats):
        TU = rep.rho @ U.conj().T
        for j, V in enumerate(mats):
            G[i, j] = np.trace(TU @ V)
    return G


def build_localizing_matrix(rep: Representation, q_poly: dict[Word, complex],
                            degree: int, alphabet: Alphabet | None = None) -> np.ndarray:
    """Localizing matrix G_q[u, v] = tr(rho u* q(X) v).

    The index is truncated to degree - ceil(deg(q)/2) so every entry stays a
    moment of degree at most 2*degree.
    """
    alphabet = alphabet or rep.scenario.alphabet()
    dq = poly_degree(q_poly)
    trunc = degree - (dq + 1) // 2
    if trunc < 0:
        raise ValueError(f"level {degree} too small for a constraint of degree {dq}")
    qmat = sum(c * rep.word_matrix(w) for w, c in q_poly.items())
    C = word_stack(rep, trunc, alphabet)
    QC = np.einsum("km,miw->kiw", qmat, C, optimize=True)
    P = np.einsum("kiw,ij->kjw", QC, rep.rho, optimize=True)
    D = C.shape[0]
    W = C.shape[2]
    return C.reshape(D * D, W).conj().T @ P.reshape(D * D, W)


def realify(G: np.ndarray) -> np.ndarray:
    """(G + conj(G))/2 as a real array; valid for real-coefficient objectives."""
    return np.ascontiguousarray(G.real) if np.iscomplexobj(G) else G


# ---------------------------------------------------------------------------
# Symbolic (unconstrained-dimension) moment structure.


@dataclass
class SymbolicBasis:
    """Indicator decomposition of unconstrained moment matrices.

    ``index`` is the reduced word index; ``classes`` lists the canonical
    words u, and ``mats[i]`` is the 0/1 matrix N_u with N_u[v, w] = 1 iff
    reduce(v* w) = classes[i].  The N_u partition the all-ones matrix.
    """

    alphabet: Alphabet
    index: list[Word]
    classes: list[Word]
    mats: np.ndarray  # (n_classes, W, W)

    def real_elements(self) -> tuple[np.ndarray, list[tuple[Word, Word]]]:
        """Symmetric span elements of realified moment matrices.

        One element per self-adjoint pair {u, u*}: N_u for u = u*, else
        N_u + N_u^T (which equals N_u + N_{u*}).  Returns the stack and the
        pair list in matching order.
        """
        by_class = {u: i for i, u in enumerate(self.classes)}
        done: set[Word] = set()
        mats, pairs = [], []
        for u in self.classes:
            if u in done:
                continue
            ua = self.alphabet.reduce(self.alphabet.adjoint(u))
            done.add(u)
            done.add(ua)
            if ua == u:
                mats.append(self.mats[by_class[u]])
            else:
                mats.append(self.mats[by_class[u]] + self.mats[by_class[u]].T)
            pairs.append((u, ua))
        return np.stack(mats), pairs

    def split_elements(self) -> tuple[np.ndarray, np.ndarray]:
        """(symmetric, antisymmetric) word-class elements.

        Symmetric: N_u + N_{u*} per pair (N_u alone when u = u*).
        Antisymmetric: N_u - N_{u*} per strict pair.  Elements of different
        pairs have disjoint support, so each stack is orthogonal; symmetric
        and antisymmetric matrices are mutually orthogonal as well.
        """
        by_class = {u: i for i, u in enumerate(self.classes)}
        done: set[Word] = set()
        sym_parts, anti_parts = [], []
        for u in self.classes:
            if u in done:
                continue
            ua = self.alphabet.reduce(self.alphabet.adjoint(u))
            done.add(u)
            done.add(ua)
            if ua == u:
                sym_parts.append(self.mats[by_class[u]])
            else:
                sym_parts.append(self.mats[by_class[u]] + self.mats[by_class[ua]])
                anti_parts.append(self.mats[by_class[u]] - self.mats[by_class[ua]])
        anti = np.stack(anti_parts) if anti_parts else np.zeros((0,) + self.mats.shape[1:])
        return np.stack(sym_parts), anti


def build_symbolic_basis(alphabet: Alphabet, degree: int,
                         index: list[Word] | None = None) -> SymbolicBasis:
    """Group the cells of the symbolic moment matrix by reduced word."""
    if index is None:
        index = enumerate_words(alphabet, degree, reduced=True)
    W = len(index)
    adjoints = [alphabet.adjoint(w) for w in index]
    classes: list[Word] = []
    where: dict[Word, int] = {}
    cells: list[list[tuple[int, int]]] = []
    for i in range(W):
        for j in range(W):
            u = alphabet.reduce(adjoints[i] + index[j])
            k = where.get(u)
            if k is None:
                k = len(classes)
                where[u] = k
                classes.append(u)
                cells.append([])
            cells[k].append((i, j))
    mats = np.zeros((len(classes), W, W))
    for k, cc in enumerate(cells):
        for i, j in cc:
            mats[k, i, j] = 1.0
    return SymbolicBasis(alphabet, index, classes, mats)


def build_hybrid_elements(finite_mats: np.ndarray, sym: SymbolicBasis) -> np.ndarray:
    """Span elements of realified finite x unconstrained moment matrices.

    For each complex Hermitian finite-party basis matrix M_j and each
    self-adjoint word pair {u, u*}: Re(M_j) (x) (N_u + N_{u*}) and, when
    u != u*, Im(M_j) (x) (N_u - N_{u*}).  Both kinds are real symmetric.
    The resulting set generally has linear dependencies; orthonormalize
    before assembling an SDP over it.
    """
    by_class = {u: i for i, u in enumerate(sym.classes)}
    done: set[Word] = set()
    sym_parts: list[np.ndarray] = []
    anti_parts: list[np.ndarray] = []
    for u in sym.classes:
        if u in done:
            continue
        ua = sym.alphabet.reduce(sym.alphabet.adjoint(u))
        done.add(u)
        done.add(ua)
        if ua == u:
            sym_parts.append(sym.mats[by_class[u]])
        else:
            nu, nua = sym.mats[by_class[u]], sym.mats[by_class[ua]]
            sym_parts.append(nu + nua)
            anti_parts.append(nu - nua)
    out = []
    for M in finite_mats:
        R, I = np.ascontiguousarray(M.real), np.ascontiguousarray(M.imag)
        for S in sym_parts:
            out.append(np.kron(R, S))
        if np.any(I):
            for A in anti_parts:
                out.append(np.kron(I, A))
    return np.stack(out)


# ---------------------------------------------------------------------------
# Word -> matrix-entry lookup (shared by the assembly code).


def word_entry_table(alphabet: Alphabet, index: list[Word]) -> dict[Word, tuple[int, int]]:
    """First (row, col) realizing each reduced word as index[row]* index[col].

    Entries of a span element at positions carrying the same reduced word
    agree (the equality holds for every sample, hence on the span), so any
    representative cell is as good as another; the scan order makes the
    choice deterministic.
    """
    table: dict[Word, tuple[int, int]] = {}
    adjoints = [alphabet.adjoint(w) for w in index]
    for i in range(len(index)):
        for j in range(len(index)):
            u = alphabet.reduce(adjoints[i] + index[j])
            table.setdefault(u, (i, j))
    return table
