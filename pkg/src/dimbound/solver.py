"""Embedded dense semidefinite solver.

Instances produced by the assembly layer all have the shape

    maximize    f . x
    subject to  e . x = nu
                S(x) = sum_j x_j G_j  is positive semidefinite

with G_j a (Hilbert-Schmidt orthonormal) stack of real symmetric matrices
(complex Hermitian stacks are realified to doubled real symmetric ones,
which preserves both positivity and the entry functionals f and e).

The normalization is eliminated against the coefficient with the largest
|e_j|, leaving a standard dual-form SDP  max b.y  s.t.  C - sum y_i A_i >= 0
that is solved by a primal-dual predictor-corrector interior-point method
with HKM directions and a Mehrotra centering heuristic.  The Schur
complement  B_ij = <A_i, X A_j S^{-1}>  is symmetric positive definite and
is formed with two batched matrix products plus one (m x n^2)(n^2 x m) GEMM
per iteration, which dominates the cost.

The report carries the certificate data the rest of the package relies on:
the maximization value (primal_value), the minimization certificate from the
companion problem (dual_value, an upper bound on the exact optimum), the
complementarity gap and feasibility residuals, so a returned bound is valid
up to gap + residual slack.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np


class SolverError(RuntimeError):
    pass


@dataclass
class SolveReport:
    status: str                   # optimal | inaccurate | infeasible | unbounded | failed
    primal_value: float
    dual_value: float
    gap: float
    psd_residual: float
    equality_residual: float
    iterations: int
    wall_time: float
    x: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def realify_hermitian_stack(mats: np.ndarray) -> np.ndarray:
    """Hermitian H -> [[Re H, -Im H], [Im H, Re H]], PSD iff H is."""
    m, n = mats.shape[0], mats.shape[1]
    out = np.empty((m, 2 * n, 2 * n))
    out[:, :n, :n] = mats.real
    out[:, n:, n:] = mats.real
    out[:, :n, n:] = -mats.imag
    out[:, n:, :n] = mats.imag
    return out


def _max_step(L: np.ndarray, dM: np.ndarray) -> float:
    """sup {a : M + a dM > 0} given the Cholesky factor L of M."""
    Y = np.linalg.solve(L, dM)
    W = np.linalg.solve(L, Y.T).T
    W = (W + W.T) / 2.0
    lmin = float(np.linalg.eigvalsh(W)[0])
    if lmin >= -1e-14:
        return np.inf
    return -1.0 / lmin


def _chol_with_jitter(B: np.ndarray):
    scale = max(float(np.mean(np.diag(B))), 1e-300)
    jitter = 0.0
    for k in range(6):
        try:
            return np.linalg.cholesky(B + jitter * np.eye(B.shape[0])), jitter
        except np.linalg.LinAlgError:
            jitter = scale * 10.0 ** (-14 + 2 * k)
    return None, jitter


def solve_sdp(mats: np.ndarray, objective: np.ndarray, normal: np.ndarray,
              nu: float, gap_tol: float = 1e-8, feas_tol: float = 1e-8,
              max_iter: int = 200, x0: np.ndarray | None = None,
              verbose: bool = False) -> SolveReport:
    """Solve  max f.x  s.t.  e.x = nu,  sum_j x_j G_j >= 0.

    ``x0`` may carry a warm start (coefficients of a strictly feasible
    point, such as the average sample of the span); it is used when it
    passes a Cholesky check and ignored otherwise.
    """
    t0 = time.perf_counter()
    mats = np.asarray(mats)
    if np.iscomplexobj(mats):
        herm = np.abs(mats - np.transpose(mats, (0, 2, 1)).conj()).max() if mats.size else 0.0
        if herm > 1e-10:
            raise SolverError("complex instance matrices must be Hermitian")
        mats = realify_hermitian_stack(mats)
    f = np.asarray(objective, dtype=float)
    e = np.asarray(normal, dtype=float)
    m, n = mats.shape[0], mats.shape[1]
    if m == 0 or n == 0:
        raise SolverError("empty instance")

    j0 = int(np.argmax(np.abs(e)))
    if abs(e[j0]) <= 1e-12 * max(1.0, float(np.linalg.norm(e))):
        return SolveReport("infeasible", -np.inf, np.inf, np.inf, np.inf, np.inf,
                           0, time.perf_counter() - t0,
                           meta={"reason": "normalization entry not reachable in the span"})

    others = [j for j in range(m) if j != j0]
    C = (nu / e[j0]) * mats[j0]
    b = f[others] - f[j0] * e[others] / e[j0]
    const = nu * f[j0] / e[j0]
    # S(x) = C - sum_i y_i A_i with y the free coefficients
    A = -(mats[others] - np.einsum("i,ab->iab", e[others] / e[j0], mats[j0]))
    mr = len(others)

    def full_x(y: np.ndarray) -> np.ndarray:
        x = np.empty(m)
        x[others] = y
        x[j0] = (nu - e[others] @ y) / e[j0]
        return x

    def finish(status, y, X, S, iters):
        x = full_x(y)
        Sx = np.tensordot(x, mats, axes=1)
        lmin = float(np.linalg.eigvalsh((Sx + Sx.T) / 2.0)[0])
        pv = float(b @ y + const)
        dv = float(np.tensordot(C, X) + const) if X is not None else np.inf
        return SolveReport(
            status=status, primal_value=pv, dual_value=dv, gap=dv - pv,
            psd_residual=max(0.0, -lmin),
            equality_residual=float(abs(e @ x - nu)),
            iterations=iters, wall_time=time.perf_counter() - t0, x=x,
            meta={"n": n, "m": m},
        )

    if mr == 0:
        lmin = float(np.linalg.eigvalsh((C + C.T) / 2.0)[0])
        status = "optimal" if lmin >= -feas_tol * max(1.0, abs(nu)) else "infeasible"
        rep = finish(status, np.zeros(0), None, None, 0)
        rep.dual_value = rep.primal_value
        rep.gap = 0.0
        return rep

    Aflat = A.reshape(mr, n * n)
    Cnorm = 1.0 + float(np.linalg.norm(C))
    bnorm = 1.0 + float(np.linalg.norm(b))

    # Feasible-side warm start when the caller supplies one.
    y = np.zeros(mr)
    S = None
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if abs(e @ x0 - nu) <= 1e-8 * max(1.0, abs(nu)):
            S_try = np.tensordot(x0, mats, axes=1)
            S_try = (S_try + S_try.T) / 2.0
            try:
                np.linalg.cholesky(S_try - 1e-12 * np.eye(n))
                y = x0[others].copy()
                S = S_try
            except np.linalg.LinAlgError:
                S = None
    if S is None:
        beta = max(1.0, abs(nu), float(np.abs(C).max()))
        S = beta * np.eye(n)
    alpha = max(1.0, abs(nu), bnorm) * np.sqrt(n)
    X = alpha * np.eye(n)

    best = None
    best_merit = np.inf
    status = "inaccurate"
    it = 0
    mu = np.tensordot(X, S) / n

    for it in range(1, max_iter + 1):
        Rd = C - np.tensordot(y, A, axes=1) - S
        rp = b - Aflat @ X.ravel()
        mu = np.tensordot(X, S) / n
        pobj = float(np.tensordot(C, X)) + const
        dobj = float(b @ y) + const
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        compl = np.tensordot(X, S) / (1.0 + abs(pobj) + abs(dobj))
        pinf = float(np.linalg.norm(rp)) / bnorm
        dinf = float(np.linalg.norm(Rd)) / Cnorm
        merit = max(relgap, compl, pinf, dinf)
        if merit < best_merit:
            best_merit = merit
            best = (y.copy(), X.copy(), S.copy(), it - 1)
        if verbose:
            print(f"  it {it:3d}  gap {relgap:9.2e} compl {compl:9.2e} "
                  f"pinf {pinf:9.2e} dinf {dinf:9.2e} mu {mu:9.2e}")
        if max(relgap, compl) <= gap_tol and pinf <= feas_tol and dinf <= feas_tol:
            return finish("optimal", y, X, S, it - 1)
        if dobj > 1e12 * (1.0 + abs(const)):
            return finish("unbounded", y, X, S, it - 1)
        if pobj < -1e12 * (1.0 + abs(const)):
            return finish("infeasible", y, X, S, it - 1)

        try:
            Ls = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            break
        Sinv = np.linalg.inv(S)
        Sinv = (Sinv + Sinv.T) / 2.0

        # Schur complement B_ij = <A_i, X A_j S^{-1}>
        K = np.matmul(np.matmul(X[None, :, :], A), Sinv[None, :, :])
        B = Aflat @ K.reshape(mr, n * n).T
        B = (B + B.T) / 2.0
        LB, _ = _chol_with_jitter(B)
        if LB is None:
            break

        def schur_solve(rhs):
            z = np.linalg.solve(LB, rhs)
            return np.linalg.solve(LB.T, z)

        XRdSinv_contrib = Aflat @ (X @ Rd @ Sinv).ravel()
        a_sinv = Aflat @ Sinv.ravel()

        # Predictor (affine scaling).
        rhs_aff = b + XRdSinv_contrib
        dy_aff = schur_solve(rhs_aff)
        dS_aff = Rd - np.tensordot(dy_aff, A, axes=1)
        dX_aff = -X - (X @ dS_aff) @ Sinv
        dX_aff = (dX_aff + dX_aff.T) / 2.0

        try:
            Lx = np.linalg.cholesky(X)
        except np.linalg.LinAlgError:
            break
        ap_aff = min(1.0, _max_step(Lx, dX_aff))
        ad_aff = min(1.0, _max_step(Ls, dS_aff))
        mu_aff = np.tensordot(X + ap_aff * dX_aff, S + ad_aff * dS_aff) / n
        sigma = min(1.0, max((max(mu_aff, 0.0) / mu) ** 3, 1e-10))

        # Corrector with Mehrotra second-order term.
        cross = Aflat @ (dX_aff @ dS_aff @ Sinv).ravel()
        rhs = b - sigma * mu * a_sinv + XRdSinv_contrib + cross
        dy = schur_solve(rhs)
        dS = Rd - np.tensordot(dy, A, axes=1)
        dX = sigma * mu * Sinv - X - (X @ dS + dX_aff @ dS_aff) @ Sinv
        dX = (dX + dX.T) / 2.0

        tau = 0.98
        ap = min(1.0, tau * _max_step(Lx, dX))
        ad = min(1.0, tau * _max_step(Ls, dS))
        # keep iterates safely positive definite
        for _ in range(40):
            Xn = X + ap * dX
            try:
                np.linalg.cholesky(Xn)
                break
            except np.linalg.LinAlgError:
                ap *= 0.8
        else:
            break
        for _ in range(40):
            Sn = S + ad * dS
            try:
                np.linalg.cholesky(Sn)
                break
            except np.linalg.LinAlgError:
                ad *= 0.8
        else:
            break
        X = Xn
        S = Sn
        y = y + ad * dy
        if mu < 1e-300:
            break

    if best is None:
        return finish("failed", y, X, S, it)
    y, X, S, its = best
    loose = max(1e-5, 1e3 * gap_tol)
    status = "optimal" if best_merit <= max(gap_tol, feas_tol) else (
        "inaccurate" if best_merit <= loose else "failed")
    return finish(status, y, X, S, its)


# ---------------------------------------------------------------------------
# Sparse text export (SDPA-style), for cross-checking with external solvers.


def export_sdpa(mats, objective, normal, nu, path, comment: str = "") -> None:
    """Write the instance in SDPA sparse format.

    Encodes  max f.x  s.t.  sum_j x_j F_j - F0 >= 0  with two blocks: the
    PSD span block, and a diagonal 2-block enforcing e.x - nu >= 0 and
    nu - e.x >= 0 (the eliminated equality).  Upper-triangular entries only,
    1-based indices, one entry per line: var block i j value.
    """
    mats = np.asarray(mats)
    if np.iscomplexobj(mats):
        mats = realify_hermitian_stack(mats)
    f = np.asarray(objective, dtype=float)
    e = np.asarray(normal, dtype=float)
    m, n = mats.shape[0], mats.shape[1]
    lines = []
    if comment:
        for ln in comment.splitlines():
            lines.append(f'"{ln}"')
    lines.append(f"{m} = mDIM")
    lines.append("2 = nBLOCK")
    lines.append(f"{n} -2 = bLOCKsTRUCT")
    lines.append(" ".join(f"{v:.17g}" for v in f))
    # F0: zero PSD block; LP block diag(nu, -nu)
    if nu != 0.0:
        lines.append(f"0 2 1 1 {nu:.17g}")
        lines.append(f"0 2 2 2 {-nu:.17g}")
    for j in range(m):
        G = mats[j]
        for r in range(n):
            for c in range(r, n):
                v = G[r, c]
                if v != 0.0:
                    lines.append(f"{j + 1} 1 {r + 1} {c + 1} {v:.17g}")
        if e[j] != 0.0:
            lines.append(f"{j + 1} 2 1 1 {e[j]:.17g}")
            lines.append(f"{j + 1} 2 2 2 {-e[j]:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sdpa(path):
    """Parse a file written by export_sdpa back into (mats, f, e, nu).

    Only the two-block layout produced by export_sdpa is supported; used to
    round-trip the export in tests.
    """
    entries = []
    header = []
    with open(path) as fh:
        for raw in fh:
            ln = raw.strip()
            if not ln or ln.startswith('"'):
                continue
            header.append(ln) if len(header) < 4 else entries.append(ln)
    m = int(header[0].split()[0])
    sizes = header[2].split("=")[0].split()
    n = int(sizes[0])
    f = np.array([float(v) for v in header[3].split()], dtype=float)
    mats = np.zeros((m, n, n))
    e = np.zeros(m)
    nu = 0.0
    for ln in entries:
        var, blk, i, j, val = ln.split()
        var, blk, i, j, val = int(var), int(blk), int(i), int(j), float(val)
        if blk == 1:
            mats[var - 1, i - 1, j - 1] = val
            mats[var - 1, j - 1, i - 1] = val
        elif blk == 2 and i == 1:
            if var == 0:
                nu = val
            else:
                e[var - 1] = val
    return mats, f, e, nu
