"""Koopman eigenpairs from snapshot data in TT format (AMUSEt).

Two global SVDs reduce the regression to a small eigenproblem: with
``Psi(X) = U_X S_X V_X^T`` and ``Psi(Y) = U_Y S_Y V_Y^T``, the projection of
the Koopman matrix onto the whitened left-singular subspace of ``Psi(X)`` is

    M = S_X^{-1} (U_X^T U_Y) S_Y (V_Y^T V_X),

an (r x r) matrix whose eigenpairs lift to eigentensors ``Xi = U_X S_X A``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dictionary import MonomialDictionary, data_tensor_svd
from .tt import TTGlobalSVD, tt_overlap


@dataclass
class EigenSolution:
    """Eigenvalues of the Koopman matrix and the small eigenvector stack A.

    The eigentensor with respect to the original basis is
    ``Xi = U_X diag(sigma_X) A``; its TT cores are shared with ``svd_x.U``.
    """

    lambdas: np.ndarray
    A: np.ndarray
    svd_x: TTGlobalSVD
    svd_y: TTGlobalSVD
    reduced: np.ndarray
    eps: float = 1.0

    @property
    def rank(self) -> int:
        return len(self.lambdas)

    def xi_matrix(self, cap: int = 10**7) -> np.ndarray:
        """Dense (N_dic, r) eigentensor stack, for small dictionaries only."""
        return self.svd_x.U.to_matrix(cap=cap) @ (self.svd_x.sigma[:, None] * self.A)


def reduced_matrix(svd_x: TTGlobalSVD, svd_y: TTGlobalSVD) -> np.ndarray:
    """Whitened projection of the Koopman operator, shape (r_X, r_X).

    The TT overlap ``U_X^T U_Y`` is contracted core by core over all
    physical modes, so nothing dense in the dictionary size is formed.
    """
    if svd_x.V.shape[0] != svd_y.V.shape[0]:
        raise ValueError(
            f"snapshot counts differ: {svd_x.V.shape[0]} vs {svd_y.V.shape[0]}"
        )
    overlap = tt_overlap(svd_x.U, svd_y.U)  # (r_X, r_Y)
    right = svd_y.V.T @ svd_x.V  # (r_Y, r_X)
    return (overlap * svd_y.sigma[None, :]) @ right / svd_x.sigma[:, None]


def sort_eigenpairs(lam: np.ndarray, vecs: np.ndarray):
    """Order by descending modulus, ties broken by descending real part."""
    order = np.lexsort((-lam.real, -np.abs(lam)))
    return lam[order], vecs[:, order]


def amuset(X: np.ndarray, Y: np.ndarray, dic: MonomialDictionary,
           eps: float) -> EigenSolution:
    """Full AMUSEt pass: global SVDs of both transformed data tensors, the
    reduced matrix, and all eigenpairs of the small problem."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape != Y.shape:
        raise ValueError(f"snapshot matrices differ in shape: {X.shape} vs {Y.shape}")
    svd_x = data_tensor_svd(dic, X, eps)
    svd_y = data_tensor_svd(dic, Y, eps)
    M = reduced_matrix(svd_x, svd_y)
    lam, vecs = scipy.linalg.eig(M)
    lam, vecs = sort_eigenpairs(lam, vecs)
    return EigenSolution(lambdas=lam, A=vecs, svd_x=svd_x, svd_y=svd_y,
                         reduced=M, eps=eps)


def eigenvalues_to_csv(sol: EigenSolution, path) -> None:
    """Eigenvalue report: index, real part, imaginary part, modulus."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "re", "im", "abs"])
        for i, lam in enumerate(sol.lambdas):
            writer.writerow([i, repr(lam.real), repr(lam.imag), repr(abs(lam))])
