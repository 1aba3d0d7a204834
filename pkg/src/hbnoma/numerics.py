"""Minimal complex linear-algebra kernel.

Matrices are plain numpy complex128 2-D arrays. Three operations cover every
need of the precoder and bound modules: Hermitian eigendecomposition,
Hermitian positive-definite solve, and the dominant eigenvalue of a Gram
matrix M M^H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NotHermitian, SingularMatrix

HERMITIAN_TOL = 1e-10
PIVOT_MIN = 1e-12
POWER_ITER_TOL = 1e-10
POWER_ITER_CAP = 10_000


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalues (real, ascending) and matching orthonormal eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray


def _as_complex_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise NotHermitian(f"expected a 2-D array, got ndim={m.ndim}")
    if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
        raise NotHermitian("matrix has non-finite entries")
    return m


def hermitian_eig(a) -> EigenPair:
    """Eigendecomposition of a square Hermitian matrix.

    Returns values sorted ascending with orthonormal eigenvectors such that
    A = V diag(values) V^H.
    """
    m = _as_complex_matrix(a)
    n, k = m.shape
    if n != k:
        raise NotHermitian(f"matrix is {n}x{k}, not square")
    asym = np.max(np.abs(m - m.conj().T)) if n else 0.0
    if asym > HERMITIAN_TOL:
        raise NotHermitian(f"max |A - A^H| = {asym:.3e} exceeds {HERMITIAN_TOL}")
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return EigenPair(values=values, vectors=vectors)


def _cholesky_lower(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    low = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j].real - np.sum((low[j, :j] * low[j, :j].conj()).real)
        if pivot < PIVOT_MIN:
            raise SingularMatrix(
                f"pivot {pivot:.3e} below {PIVOT_MIN} at row {j}; "
                "matrix is not safely positive definite"
            )
        low[j, j] = math.sqrt(pivot)
        if j + 1 < n:
            low[j + 1 :, j] = (a[j + 1 :, j] - low[j + 1 :, :j] @ low[j, :j].conj()) / low[j, j].real
    return low


def hermitian_solve(a, b) -> np.ndarray:
    """Solve A X = B for Hermitian positive-definite A via Cholesky.

    Pivots below 1e-12 raise SingularMatrix: in this pipeline that means two
    cluster steering directions (near-)coincide.
    """
    m = _as_complex_matrix(a)
    n, k = m.shape
    if n != k:
        raise NotHermitian(f"matrix is {n}x{k}, not square")
    rhs = np.asarray(b, dtype=np.complex128)
    squeeze = rhs.ndim == 1
    if squeeze:
        rhs = rhs.reshape(-1, 1)
    if rhs.shape[0] != n:
        raise SingularMatrix(f"shape mismatch: A is {n}x{n}, B has {rhs.shape[0]} rows")
    low = _cholesky_lower(m)
    # forward substitution L y = B
    y = np.zeros_like(rhs)
    for i in range(n):
        y[i] = (rhs[i] - low[i, :i] @ y[:i]) / low[i, i].real
    # back substitution L^H x = y
    x = np.zeros_like(rhs)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - low[i + 1 :, i].conj() @ x[i + 1 :]) / low[i, i].real
    return x[:, 0] if squeeze else x


def hermitian_inverse(a) -> np.ndarray:
    """Inverse of a Hermitian positive-definite matrix."""
    m = _as_complex_matrix(a)
    return hermitian_solve(m, np.eye(m.shape[0], dtype=np.complex128))


def gram_max_eigen(m) -> float:
    """Largest eigenvalue of M M^H by power iteration.

    Relative tolerance 1e-10 on the Rayleigh quotient, 1e4 iteration cap with
    one perturbed restart before failing.
    """
    mat = _as_complex_matrix(m)
    if mat.size == 0:
        return 0.0
    gram = mat @ mat.conj().T
    n = gram.shape[0]
    if n == 1:
        return float(gram[0, 0].real)
    if not np.any(gram):
        return 0.0

    def iterate(start: np.ndarray) -> float | None:
        v = start / np.linalg.norm(start)
        lam = float((v.conj() @ (gram @ v)).real)
        for _ in range(POWER_ITER_CAP):
            w = gram @ v
            norm_w = np.linalg.norm(w)
            if norm_w == 0.0:
                return None
            v = w / norm_w
            new_lam = float((v.conj() @ (gram @ v)).real)
            if abs(new_lam - lam) <= POWER_ITER_TOL * max(abs(new_lam), 1e-300):
                return new_lam
            lam = new_lam
        return None

    rng = np.random.default_rng(0x9E3779B9)
    start = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    result = iterate(start)
    if result is None:
        perturbed = start + rng.standard_normal(n) + 1j * rng.standard_normal(n)
        result = iterate(perturbed)
    if result is None:
        raise NoConvergence(f"power iteration did not converge in {POWER_ITER_CAP} steps")
    return max(result, 0.0)
