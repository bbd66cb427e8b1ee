"""Tensor-product monomial dictionaries and transformed-data SVDs.

The observable dictionary is the tensor product of per-dimension monomial
bases ``[1, x, x^2, ..., x^n]``.  Flattened vectors follow the blockwise
Kronecker convention: the first state dimension varies slowest, so for
``d=2, n=2`` the order is ``1, x2, x2^2, x1, x1*x2, ..., x1^2*x2^2``.
Index 1 of each per-dimension basis is the coordinate itself, which is what
generator-row extraction relies on.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import SizeCapError
from .tt import TTGlobalSVD, TTTensor, truncated_svd

KRONECKER_CAP = 10**7


@dataclass(frozen=True)
class MonomialDictionary:
    """Per-dimension monomials up to ``degree`` in each of ``d`` variables."""

    d: int
    degree: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("state dimension must be at least 1")
        if self.degree < 1:
            raise ValueError("degree must be at least 1")

    @property
    def mode_size(self) -> int:
        return self.degree + 1

    @property
    def size(self) -> int:
        """Total dictionary size (degree+1)**d."""
        return self.mode_size**self.d

    def flat_index(self, idx) -> int:
        """Position of a multi-index in the flattened Kronecker vector."""
        if len(idx) != self.d:
            raise ValueError(f"multi-index length {len(idx)} != dimension {self.d}")
        flat = 0
        for i in idx:
            if not 0 <= i < self.mode_size:
                raise IndexError(f"exponent {i} outside [0, {self.mode_size})")
            flat = flat * self.mode_size + i
        return flat

    def multi_index(self, flat: int) -> tuple[int, ...]:
        """Inverse of :meth:`flat_index`."""
        if not 0 <= flat < self.size:
            raise IndexError(f"flat index {flat} outside [0, {self.size})")
        idx = []
        for _ in range(self.d):
            flat, rem = divmod(flat, self.mode_size)
            idx.append(rem)
        return tuple(reversed(idx))

    def full_state_index(self, k: int) -> tuple[int, ...]:
        """Multi-index of the coordinate observable x_{k+1} (0-based k)."""
        if not 0 <= k < self.d:
            raise IndexError(f"dimension {k} outside [0, {self.d})")
        return tuple(1 if j == k else 0 for j in range(self.d))

    def monomial_string(self, idx) -> str:
        """Human-readable monomial, e.g. ``x1^2*x2``; the constant is ``1``."""
        parts = []
        for j, e in enumerate(idx):
            if e == 1:
                parts.append(f"x{j + 1}")
            elif e > 1:
                parts.append(f"x{j + 1}^{e}")
        return "*".join(parts) if parts else "1"

    def indices_up_to_total_degree(self, max_total: int):
        """All multi-indices with total degree at most ``max_total``, in
        lexicographic order of the flattened position."""
        for idx in product(range(self.mode_size), repeat=self.d):
            if sum(idx) <= max_total:
                yield idx


@dataclass
class SnapshotSet:
    """Paired state matrices; column k of Y is the flow of column k of X."""

    X: np.ndarray
    Y: np.ndarray
    ts: float

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if self.X.shape != self.Y.shape:
            raise ValueError(f"X and Y shapes differ: {self.X.shape} vs {self.Y.shape}")
        if self.ts <= 0:
            raise ValueError(f"sampling interval must be positive, got {self.ts}")

    @property
    def dimension(self) -> int:
        return self.X.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.X.shape[1]


def eval_1d(dic: MonomialDictionary, x):
    """Monomial values ``[1, x, ..., x^n]``.

    Scalar input gives a vector of length n+1; a length-N array gives an
    (n+1, N) matrix with one column per sample.
    """
    x = np.asarray(x, dtype=float)
    powers = np.arange(dic.mode_size)
    if x.ndim == 0:
        return x**powers
    return x[None, :] ** powers[:, None]


def eval_full(dic: MonomialDictionary, x) -> TTTensor:
    """Rank-one TT of the tensor-product dictionary at one state."""
    x = np.asarray(x, dtype=float)
    if x.shape != (dic.d,):
        raise ValueError(f"state must have shape ({dic.d},), got {x.shape}")
    cores = [eval_1d(dic, xi).reshape(1, dic.mode_size, 1) for xi in x]
    return TTTensor(cores)


def eval_full_dense(dic: MonomialDictionary, x, cap: int = KRONECKER_CAP) -> np.ndarray:
    """Flattened Kronecker dictionary vector of length (degree+1)**d."""
    if dic.size > cap:
        raise SizeCapError(f"dense dictionary of size {dic.size} exceeds cap {cap}")
    x = np.asarray(x, dtype=float)
    if x.shape != (dic.d,):
        raise ValueError(f"state must have shape ({dic.d},), got {x.shape}")
    vec = np.ones(1)
    for xi in x:
        vec = np.kron(vec, eval_1d(dic, xi))
    return vec


def dictionary_matrix(dic: MonomialDictionary, X: np.ndarray,
                      cap: int = KRONECKER_CAP) -> np.ndarray:
    """Stack ``eval_full_dense`` columns for every snapshot: an (N_dic, N) matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] != dic.d:
        raise ValueError(f"snapshot matrix must have {dic.d} rows, got {X.shape[0]}")
    n_samples = X.shape[1]
    if dic.size * n_samples > cap:
        raise SizeCapError(
            f"dense dictionary matrix of {dic.size * n_samples} entries exceeds cap {cap}"
        )
    mat = np.ones((1, n_samples))
    for k in range(dic.d):
        psi = eval_1d(dic, X[k])  # (n+1, N)
        mat = (mat[:, None, :] * psi[None, :, :]).reshape(-1, n_samples)
    return mat


def data_tensor_svd(dic: MonomialDictionary, X: np.ndarray, eps: float) -> TTGlobalSVD:
    """Global SVD of the transformed data tensor, streamed from snapshots.

    The order-(d+1) tensor with entries ``prod_k psi_{k,i_k}(x_m)`` over a
    trailing sample mode is never materialized.  A coefficient matrix R
    (rank x samples, starting from the all-ones row) is carried through the
    sweep: step k expands each column by the per-dimension basis values,
    takes a truncated SVD, emits the reshaped left factor as TT core k and
    keeps ``diag(sigma) @ V.T`` as the next R.  The final step's singular
    values and right factor complete the decomposition.

    The eps rule truncates the interior bonds only.  The final split, which
    faces the data mode and determines the retained subspace, keeps every
    numerically nonzero singular value: downstream coefficient extraction is
    exact only on the retained subspace, so discarding small but genuine
    directions there would bias the recovered vector fields.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] != dic.d:
        raise ValueError(f"snapshot matrix must have {dic.d} rows, got {X.shape[0]}")
    n_samples = X.shape[1]
    if n_samples < 1:
        raise ValueError("need at least one snapshot")
    R = np.ones((1, n_samples))
    cores = []
    sigma = V = None
    for k in range(dic.d):
        psi = eval_1d(dic, X[k])  # (n+1, N)
        B = (R[:, None, :] * psi[None, :, :]).reshape(-1, n_samples)
        step_eps = eps if k < dic.d - 1 else 1.0
        U, sigma, V, rank = truncated_svd(B, step_eps)
        cores.append(U.reshape(R.shape[0], dic.mode_size, rank))
        R = sigma[:, None] * V.T
    return TTGlobalSVD(U=TTTensor(cores), sigma=sigma, V=V)


def write_snapshot_csv(path, states: np.ndarray) -> None:
    """Write a (d, N) state sequence as CSV: header ``x1,...,xd``, one state
    per row, time-ordered."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    d = states.shape[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(d)])
        for col in states.T:
            writer.writerow([repr(v) for v in col])


def read_snapshot_csv(path) -> np.ndarray:
    """Read a snapshot CSV back into a (d, N) array."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "x1":
            raise ValueError(f"{path}: expected a header row starting with 'x1'")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no states found")
    states = np.asarray(rows, dtype=float).T
    if states.shape[0] != len(header):
        raise ValueError(f"{path}: row width differs from header width")
    return states
