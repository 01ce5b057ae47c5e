"""Symmetric eigendecomposition via cyclic Jacobi rotations.

Adequate for correlation matrices up to a few hundred columns, which is all
the PCA report needs. Convergence target is the off-diagonal Frobenius norm
relative to the matrix norm.
"""

from __future__ import annotations

import numpy as np

from .errors import ConvergenceError


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching eigenvector columns of symmetric a.

    Raises ConvergenceError if the off-diagonal norm has not fallen below
    tol * ||a||_F after max_sweeps cyclic sweeps.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"need a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("matrix is not symmetric")
    p = a.shape[0]
    A = a.copy()
    V = np.eye(p)
    norm = float(np.linalg.norm(A))
    if p == 1 or norm == 0.0:
        return A.diagonal().copy(), V
    target = tol * norm
    iu = np.triu_indices(p, k=1)

    def off_norm() -> float:
        # summed directly over off-diagonal entries; the ||A||^2 - ||diag||^2
        # form cancels catastrophically near convergence
        return float(np.sqrt(2.0 * np.sum(A[iu] ** 2)))

    for _ in range(max_sweeps):
        if off_norm() <= target:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = A[i, j]
                if abs(aij) <= target / (p * p):
                    continue
                diff = A[j, j] - A[i, i]
                if abs(aij) < 1e-300 * abs(diff):
                    t = aij / diff
                else:
                    theta = diff / (2.0 * aij)
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns i and j
                row_i = A[i, :].copy()
                row_j = A[j, :].copy()
                A[i, :] = c * row_i - s * row_j
                A[j, :] = s * row_i + c * row_j
                col_i = A[:, i].copy()
                col_j = A[:, j].copy()
                A[:, i] = c * col_i - s * col_j
                A[:, j] = s * col_i + c * col_j
                A[i, j] = 0.0
                A[j, i] = 0.0
                vi = V[:, i].copy()
                V[:, i] = c * vi - s * V[:, j]
                V[:, j] = s * vi + c * V[:, j]
    else:
        if off_norm() > target:
            raise ConvergenceError(f"Jacobi sweep cap ({max_sweeps}) hit before reaching tolerance")

    values = A.diagonal().copy()
    order = np.argsort(values)[::-1]
    return values[order], V[:, order]
