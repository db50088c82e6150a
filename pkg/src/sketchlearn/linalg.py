"""Dense SVD via one-sided Jacobi rotations, plus truncated pseudo-inverse factors.

Matrices are plain 2-D float64 ``numpy.ndarray`` in row-major order. The
Jacobi path is the reference engine for the small matrices produced by the
sampling sketch; ``method="auto"`` hands large inputs to LAPACK, which is
the exact-SVD baseline the sketch is benchmarked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllSingularValuesFiltered,
    DimensionMismatch,
    EmptyMatrix,
    NonFinite,
)

# One-sided Jacobi: rotate while |a_p . a_q| > tol * ||a_p|| * ||a_q||.
JACOBI_TOL = 1e-12
MAX_SWEEPS = 60
# min(m, n) above which "auto" routes to LAPACK instead of Jacobi sweeps.
LAPACK_CUTOVER = 128

DEFAULT_RCOND = 1e-12


@dataclass(frozen=True)
class SvdResult:
    """Economy SVD ``A = U @ diag(sigma) @ V.T``.

    ``U`` is m x r and ``V`` is n x r with orthonormal columns,
    r = min(m, n); ``sigma`` is nonincreasing and nonnegative.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class LowRankFactors:
    """Rank-``k`` factorization ``U @ diag(sigma) @ V.T``.

    ``sigma`` entries are strictly positive. Factors from the exact SVD have
    orthonormal columns; sketch-produced factors are only approximately
    orthonormal. ``reduced`` marks that an rcond floor dropped singular
    values below the requested rank.
    """

    k: int
    sigma: np.ndarray
    u: np.ndarray
    v: np.ndarray
    reduced: bool = field(default=False, compare=False)


def _check_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.size == 0:
        raise EmptyMatrix("matrix has no entries")
    if not np.isfinite(a).all():
        raise NonFinite("matrix contains NaN or Inf")
    return a


def _complete_basis(u: np.ndarray, missing: np.ndarray) -> None:
    """Fill zero columns of ``u`` with unit vectors orthogonal to the rest.

    Candidates are standard basis vectors tried in index order, so the
    completion is deterministic. Mutates ``u`` in place.
    """
    m = u.shape[0]
    for j in np.flatnonzero(missing):
        best, best_norm = None, 0.0
        for cand in range(m):
            e = np.zeros(m)
            e[cand] = 1.0
            e -= u @ (u.T @ e)
            norm = np.linalg.norm(e)
            if norm > best_norm:
                best, best_norm = e, norm
            if norm > 0.5:
                break
        e = best / best_norm
        # Second projection pass keeps the column orthogonal when the best
        # residual was small.
        e -= u @ (u.T @ e)
        u[:, j] = e / np.linalg.norm(e)


def _jacobi_tall(b: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One-sided Jacobi on a tall matrix (rows >= cols); returns (U, sigma, V)."""
    # Column-major storage makes every column a contiguous view, so the
    # per-rotation axpy updates run at memcpy speed.
    b = np.array(b, dtype=np.float64, order="F")
    n = b.shape[1]
    v = np.asfortranarray(np.eye(n))

    for _ in range(MAX_SWEEPS):
        rotated = False
        # Squared column norms, refreshed once per sweep and maintained
        # through the exact rotation identities in between; the sweep that
        # declares convergence performs no rotations, so its test used
        # fresh values.
        norms = np.einsum("ij,ij->j", b, b)
        for p in range(n - 1):
            bp = b[:, p]
            vp = v[:, p]
            for q in range(p + 1, n):
                bq = b[:, q]
                apq = float(bp @ bq)
                app = norms[p]
                aqq = norms[q]
                # sqrt before multiplying so tiny norms cannot underflow.
                if abs(apq) <= JACOBI_TOL * (math.sqrt(app) * math.sqrt(aqq)):
                    continue
                rotated = True
                # Angle zeroing the (p, q) Gram off-diagonal; atan2 keeps
                # this finite even when the entries are denormal.
                theta = 0.5 * math.atan2(2.0 * apq, aqq - app)
                c = math.cos(theta)
                s = math.sin(theta)
                new_p = c * bp - s * bq
                bq[:] = s * bp + c * bq
                bp[:] = new_p
                vq = v[:, q]
                new_vp = c * vp - s * vq
                vq[:] = s * vp + c * vq
                vp[:] = new_vp
                # Gram diagonal after the rotation (off-diagonal goes to 0);
                # clamped because cancellation can push a vanishing column's
                # norm a few ulps below zero.
                cc, ss, cs = c * c, s * s, 2.0 * c * s
                norms[p] = max(0.0, cc * app - cs * apq + ss * aqq)
                norms[q] = max(0.0, ss * app + cs * apq + cc * aqq)
        if not rotated:
            break

    sigma = np.linalg.norm(b, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    b = b[:, order]
    v = v[:, order]

    # Columns numerically indistinct from zero get basis-completed instead
    # of normalized; their sigma stays as computed (tiny or exactly 0).
    tiny = sigma[0] * b.shape[0] * np.finfo(np.float64).eps if sigma[0] > 0 else 0.0
    missing = sigma <= tiny
    u = np.zeros_like(b)
    keep = ~missing
    u[:, keep] = b[:, keep] / sigma[keep]
    if missing.any():
        _complete_basis(u, missing)
    return u, sigma, v


def svd_dense(a, method: str = "auto") -> SvdResult:
    """Economy singular value decomposition of a dense matrix.

    Parameters
    ----------
    a : array_like, shape (m, n)
        Matrix to decompose; entries must be finite.
    method : {"auto", "jacobi", "lapack"}
        "jacobi" runs one-sided rotation sweeps on the smaller side,
        "lapack" calls ``numpy.linalg.svd``, and "auto" picks Jacobi when
        min(m, n) <= 128.

    Returns
    -------
    SvdResult
        Singular values sorted nonincreasing (stable on ties), singular
        vectors with orthonormal columns. Deterministic for fixed input.
    """
    a = _check_matrix(a)
    m, n = a.shape
    if method == "auto":
        method = "lapack" if min(m, n) > LAPACK_CUTOVER else "jacobi"
    if method == "lapack":
        u, sigma, vt = np.linalg.svd(a, full_matrices=False)
        return SvdResult(u=u, sigma=sigma, v=vt.T.copy())
    if method != "jacobi":
        raise ValueError(f"unknown method {method!r}")
    if m >= n:
        u, sigma, v = _jacobi_tall(a)
    else:
        v, sigma, u = _jacobi_tall(a.T)
    return SvdResult(u=u, sigma=sigma, v=v)


def _factor_parts(f: SvdResult | LowRankFactors):
    if isinstance(f, SvdResult):
        return f.u, f.sigma, f.v
    return f.u, f.sigma, f.v


def truncated_pinv(
    f: SvdResult | LowRankFactors, k: int, rcond: float = DEFAULT_RCOND
) -> LowRankFactors:
    """Factors of the rank-``k`` truncated pseudo-inverse.

    Keeps the top ``k' = min(k, #{sigma_i > rcond * max sigma})`` triplets
    and returns factors representing ``sum_i (1/sigma_i) v_i u_i^T``; the
    roles of U and V swap so the result maps the codomain back to the
    domain. Raises :class:`AllSingularValuesFiltered` when nothing survives
    the floor.
    """
    if k < 1:
        raise ValueError(f"rank must be >= 1, got {k}")
    if not 0.0 <= rcond < 1.0:
        raise ValueError(f"rcond must lie in [0, 1), got {rcond}")
    u, sigma, v = _factor_parts(f)
    cutoff = rcond * sigma.max() if sigma.size else 0.0
    usable = int(np.count_nonzero(sigma > cutoff))
    kept = min(k, usable)
    if kept == 0:
        raise AllSingularValuesFiltered(
            f"no singular values above rcond={rcond} floor"
        )
    return LowRankFactors(
        k=kept,
        sigma=1.0 / sigma[:kept],
        u=v[:, :kept].copy(),
        v=u[:, :kept].copy(),
        reduced=kept < min(k, sigma.size),
    )


def apply_factors(f: LowRankFactors, y: np.ndarray) -> np.ndarray:
    """Evaluate ``U @ diag(sigma) @ V.T @ y`` without materializing the matrix."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != f.v.shape[0]:
        raise DimensionMismatch(
            f"vector of length {f.v.shape[0]} required, got shape {y.shape}"
        )
    return f.u @ (f.sigma * (f.v.T @ y))
