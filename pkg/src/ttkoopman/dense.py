"""Dense EDMD baseline: Koopman matrix, eigendecomposition logarithm,
vector-field rows.

This path materializes the full (N_dic x N_dic) operator and therefore only
works for small dictionaries, but it is exact enough to serve as the
cross-validation oracle for the tensor-train pipeline.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dictionary import MonomialDictionary, SnapshotSet, dictionary_matrix
from .errors import SingularLogarithmError, SizeCapError

DENSE_DICT_CAP = 2000
ZERO_EIGENVALUE_TOL = 1e-12
BRANCH_CUT_ANGLE = 1e-6
CONDITION_LIMIT = 1e12
IMAG_RATIO_LIMIT = 1e-6


@dataclass
class KoopmanMatrix:
    """Least-squares Koopman operator over the flattened dictionary."""

    K: np.ndarray
    dictionary: MonomialDictionary
    ts: float
    effective_rank: int


@dataclass
class DenseGenerator:
    """Generator matrix; row of the coordinate observable x_k holds the
    dictionary coefficients of F_k."""

    L: np.ndarray
    dictionary: MonomialDictionary
    ts: float
    imag_residual: float
    warnings: list[str] = field(default_factory=list)


def edmd(data: SnapshotSet, dic: MonomialDictionary,
         dense_cap: int = DENSE_DICT_CAP) -> KoopmanMatrix:
    """Koopman matrix K = Psi_Y Psi_X^+ with an SVD pseudo-inverse.

    Singular values below the numerical-rank cutoff are dropped; the
    retained count is recorded as ``effective_rank``.
    """
    if dic.size > dense_cap:
        raise SizeCapError(
            f"dictionary size {dic.size} exceeds the dense cap {dense_cap}"
        )
    if data.dimension != dic.d:
        raise ValueError(f"data dimension {data.dimension} != dictionary {dic.d}")
    psi_x = dictionary_matrix(dic, data.X, cap=np.inf)
    psi_y = dictionary_matrix(dic, data.Y, cap=np.inf)
    U, s, Vt = np.linalg.svd(psi_x, full_matrices=False)
    cutoff = np.finfo(s.dtype).eps * s[0] * max(psi_x.shape)
    rank = max(1, int(np.count_nonzero(s > cutoff)))
    pinv = (Vt[:rank].T / s[:rank]) @ U[:, :rank].T
    K = psi_y @ pinv
    return KoopmanMatrix(K=K, dictionary=dic, ts=data.ts, effective_rank=rank)


def matrix_log_generator(koopman: KoopmanMatrix) -> DenseGenerator:
    """Generator via eigendecomposition: L = P log(Sigma) P^{-1} / ts.

    The principal branch is used, so eigenvalues at zero raise and
    eigenvalues hugging the negative real axis attach a branch-cut warning.
    Complex round-off from conjugate pairs is discarded after checking it
    stays below ``IMAG_RATIO_LIMIT`` of the real part.
    """
    lam, P = scipy.linalg.eig(koopman.K)
    if np.min(np.abs(lam)) <= ZERO_EIGENVALUE_TOL:
        raise SingularLogarithmError(
            "Koopman matrix has a numerically zero eigenvalue; "
            "the principal logarithm is undefined"
        )
    notes = []
    cond = np.linalg.cond(P)
    if cond > CONDITION_LIMIT:
        notes.append(f"eigenvector matrix condition {cond:.2e} exceeds 1e12")
    if np.any(np.pi - np.abs(np.angle(lam)) < BRANCH_CUT_ANGLE):
        notes.append("eigenvalue within 1e-6 of the negative real axis (branch cut)")
    log_lam = np.log(lam.astype(complex)) / koopman.ts
    # L = P diag(log_lam) P^{-1} without forming the explicit inverse
    L = np.linalg.solve(P.T, (P * log_lam[None, :]).T).T
    imag_residual = float(np.max(np.abs(L.imag)))
    scale = float(np.max(np.abs(L.real)))
    if imag_residual >= IMAG_RATIO_LIMIT * max(scale, 1e-300):
        notes.append(
            f"imaginary residual {imag_residual:.2e} not below "
            f"{IMAG_RATIO_LIMIT:.0e} of the real scale {scale:.2e}"
        )
    return DenseGenerator(
        L=L.real.copy(),
        dictionary=koopman.dictionary,
        ts=koopman.ts,
        imag_residual=imag_residual,
        warnings=notes,
    )


def extract_row(gen: DenseGenerator, k: int) -> np.ndarray:
    """Dictionary coefficients of F_k: the generator row of the coordinate
    observable x_{k+1} (0-based k)."""
    if gen.dictionary.degree < 1:
        raise ValueError("dictionary must contain the coordinate observables")
    flat = gen.dictionary.flat_index(gen.dictionary.full_state_index(k))
    return gen.L[flat].copy()


def generator_to_csv(gen: DenseGenerator, path) -> None:
    """Write the generator with monomial row/column labels."""
    dic = gen.dictionary
    labels = [dic.monomial_string(dic.multi_index(i)) for i in range(dic.size)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + labels)
        for label, row in zip(labels, gen.L):
            writer.writerow([label] + [repr(v) for v in row])
