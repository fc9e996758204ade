"""Orthonormal bases of sampled moment-matrix spans.

The span of the feasible moment matrices of a rank class is estimated by
modified Gram-Schmidt over a stream of random samples: each incoming matrix
is projected against the accepted basis (twice, the second pass mops up the
rounding of the first), and accepted when a significant residual is left.
The stream is considered exhausted once ``confirmations`` consecutive
samples in a row are rejected, which with probability one means the span is
complete, because a random sample lands outside a proper subspace of the
span almost surely.

The running average T of all samples is kept as well; its eigenvectors
above a relative cutoff give the support isometry V which compresses every
basis matrix to the common support, restoring strict feasibility of the
semidefinite program assembled downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class BasisExhausted(RuntimeError):
    """Raised when the sample stream ends before the span stabilizes.

    The partial accumulation is attached so callers can inspect or resume.
    """

    def __init__(self, message: str, partial: "BasisResult"):
        super().__init__(message)
        self.partial = partial


class DegenerateSupport(RuntimeError):
    """Raised when the average sample is numerically zero."""


@dataclass
class BasisResult:
    """Outcome of a span accumulation.

    ``gamma``: (N, n, n) orthonormal basis of the sampled span (Hilbert-
    Schmidt inner product).  ``mean``: average T of all drawn samples.
    ``isometry``: support isometry V (rows orthonormal), set by
    ``support_isometry``; None until computed.
    """

    gamma: np.ndarray
    mean: np.ndarray
    samples_used: int
    eps: float
    confirmations: int
    isometry: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.gamma.shape[0]

    def projected(self) -> np.ndarray:
        """V gamma V* for every basis matrix."""
        if self.isometry is None:
            return self.gamma
        V = self.isometry
        return np.einsum("ra,iab,sb->irs", V, self.gamma, V.conj(), optimize=True)

    def coefficients(self, mat: np.ndarray) -> np.ndarray:
        """Expansion coefficients of a matrix over the basis."""
        N = self.size
        flat = self.gamma.reshape(N, -1)
        return flat.conj() @ mat.ravel()

    def reconstruction_residual(self, mat: np.ndarray) -> float:
        """Relative distance of a matrix from the span (0 when inside)."""
        nrm = np.linalg.norm(mat)
        if nrm == 0:
            return 0.0
        c = self.coefficients(mat)
        recon = np.tensordot(c, self.gamma, axes=1)
        return float(np.linalg.norm(mat - recon) / nrm)


def accumulate_basis(stream, eps: float = 1e-7, confirmations: int = 5) -> BasisResult:
    """Modified Gram-Schmidt over a stream of matrices.

    A sample whose residual after projection is at most ``eps`` times its
    own norm is rejected; ``confirmations`` consecutive rejections terminate
    the accumulation.  Each accepted vector gets one full re-orthogonalization
    pass, keeping pairwise inner products at the 1e-14 level.  If the stream
    raises StopIteration first, BasisExhausted carries the partial result.
    """
    buf = None          # (capacity, n*n) row buffer, grown geometrically
    nrows = 0
    mean = None
    shape = None
    count = 0
    rejected = 0
    it = iter(stream)
    while rejected < confirmations:
        try:
            sample = next(it)
        except StopIteration:
            partial = _pack(buf, nrows, mean, shape, count, eps, confirmations)
            raise BasisExhausted(
                f"stream exhausted after {count} samples with {nrows} basis "
                f"matrices and only {rejected}/{confirmations} confirmations",
                partial,
            ) from None
        sample = np.asarray(sample)
        if shape is None:
            shape = sample.shape
            mean = np.zeros(shape, dtype=np.promote_types(sample.dtype, float))
            buf = np.empty((128, sample.size), dtype=mean.dtype)
        mean += sample
        count += 1
        v = sample.ravel().astype(mean.dtype)
        nrm0 = np.linalg.norm(v)
        if nrows:
            Q = buf[:nrows]
            v -= Q.T @ (Q.conj() @ v)
            v -= Q.T @ (Q.conj() @ v)
        res = np.linalg.norm(v)
        if res <= eps * nrm0 or nrm0 == 0.0:
            rejected += 1
        else:
            if nrows == buf.shape[0]:
                buf = np.concatenate([buf, np.empty_like(buf)], axis=0)
            buf[nrows] = v / res
            nrows += 1
            rejected = 0
    return _pack(buf, nrows, mean, shape, count, eps, confirmations)


def _pack(buf, nrows, mean, shape, count, eps, confirmations) -> BasisResult:
    if shape is None:
        raise BasisExhausted("empty stream", BasisResult(
            np.zeros((0, 0, 0)), np.zeros((0, 0)), 0, eps, confirmations))
    if nrows:
        gamma = buf[:nrows].reshape(nrows, *shape).copy()
    else:
        gamma = np.zeros((0, *shape), dtype=mean.dtype)
    return BasisResult(gamma=gamma, mean=mean / max(count, 1), samples_used=count,
                       eps=eps, confirmations=confirmations)


def orthonormalize_stack(mats: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the span of a finite matrix stack (MGS, two-pass).

    Unlike accumulate_basis this consumes a fixed list, so exhaustion is the
    normal exit; used to prune linearly dependent element sets.
    """
    rows: list[np.ndarray] = []
    for m in mats:
        v = m.ravel().astype(complex if np.iscomplexobj(mats) else float)
        nrm0 = np.linalg.norm(v)
        if nrm0 == 0:
            continue
        if rows:
            Q = np.asarray(rows)
            v = v - Q.T @ (Q.conj() @ v)
            v = v - Q.T @ (Q.conj() @ v)
        res = np.linalg.norm(v)
        if res > eps * nrm0:
            rows.append(v / res)
    if not rows:
        return np.zeros((0, *mats.shape[1:]), dtype=mats.dtype)
    return np.asarray(rows).reshape(len(rows), *mats.shape[1:])


def support_isometry(mean: np.ndarray, cutoff: float = 1e-9) -> np.ndarray:
    """Isometry onto the support of the (PSD) average sample.

    Rows are the eigenvectors of T with eigenvalue above ``cutoff`` times
    the top eigenvalue.  V T V* is then positive definite, and conjugating
    the span by V loses nothing: every sample is PSD, so its support lies
    inside the support of the average.
    """
    T = (mean + mean.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(T)
    top = vals[-1] if vals.size else 0.0
    if not np.isfinite(top) or top <= 0.0:
        raise DegenerateSupport("average sample is numerically zero")
    keep = vals > cutoff * top
    V = vecs[:, keep].conj().T
    return np.ascontiguousarray(V)


# ---------------------------------------------------------------------------
# Disk cache.  Keyed by the caller (scenario digest, class, level, ...).


def cache_path(root, key: str) -> Path:
    return Path(root) / f"{key}.npz"


def save_basis(path, basis: BasisResult) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = dict(gamma=basis.gamma, mean=basis.mean,
                   samples_used=basis.samples_used, eps=basis.eps,
                   confirmations=basis.confirmations)
    if basis.isometry is not None:
        payload["isometry"] = basis.isometry
    np.savez_compressed(path, **payload)


def load_basis(path) -> BasisResult | None:
    path = Path(path)
    if not path.exists():
        return None
    with np.load(path) as data:
        iso = data["isometry"] if "isometry" in data.files else None
        return BasisResult(gamma=data["gamma"], mean=data["mean"],
                           samples_used=int(data["samples_used"]),
                           eps=float(data["eps"]),
                           confirmations=int(data["confirmations"]),
                           isometry=iso)
