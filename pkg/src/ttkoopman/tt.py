"""Tensor-train data structure and generic TT algebra.

A tensor train represents an order-d array through a chain of order-3 cores
``G_k`` of shape ``(r_{k-1}, n_k, r_k)``; entry ``(i_1, ..., i_d)`` is the
chained matrix product ``G_1[:, i_1, :] @ ... @ G_d[:, i_d, :]``.  The
leading rank is always 1.  The trailing rank is 1 for a proper tensor but
may exceed 1 for a *left factor* (the ``U`` part of a global SVD), in which
case entries are vectors over the open rank index.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateInputError, SizeCapError

DENSE_CAP = 10**7

_FIELD_TAGS = {"real": 0, "complex": 1}


class TTTensor:
    """Immutable-by-convention tensor train.

    Parameters
    ----------
    cores : list of ndarray
        Order-3 arrays, core k with shape ``(r_{k-1}, n_k, r_k)``.  Adjacent
        cores must agree on the shared rank; the leading rank must be 1.
    """

    def __init__(self, cores: list[np.ndarray]):
        if not cores:
            raise ValueError("a TT tensor needs at least one core")
        cores = [np.asarray(c) for c in cores]
        for k, c in enumerate(cores):
            if c.ndim != 3:
                raise ValueError(f"core {k} must be order 3, got shape {c.shape}")
        if cores[0].shape[0] != 1:
            raise ValueError(f"leading rank must be 1, got {cores[0].shape[0]}")
        for k in range(len(cores) - 1):
            if cores[k].shape[2] != cores[k + 1].shape[0]:
                raise ValueError(
                    f"rank mismatch between cores {k} and {k + 1}: "
                    f"{cores[k].shape[2]} vs {cores[k + 1].shape[0]}"
                )
        self.cores = cores

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def mode_sizes(self) -> list[int]:
        return [c.shape[1] for c in self.cores]

    @property
    def ranks(self) -> list[int]:
        return [self.cores[0].shape[0]] + [c.shape[2] for c in self.cores]

    @property
    def tail_rank(self) -> int:
        return self.cores[-1].shape[2]

    @property
    def scalar_field(self) -> str:
        return "complex" if any(np.iscomplexobj(c) for c in self.cores) else "real"

    @property
    def storage_count(self) -> int:
        """Total number of stored elements across all cores."""
        return int(sum(c.size for c in self.cores))

    def entry(self, idx):
        return tt_entry(self, idx)

    def to_dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        return tt_to_dense(self, cap=cap)

    def to_matrix(self, cap: int = DENSE_CAP) -> np.ndarray:
        """Matricize to shape ``(prod(mode_sizes), tail_rank)``."""
        dense = tt_to_dense(self, cap=cap)
        return dense.reshape(-1, self.tail_rank)

    def __repr__(self) -> str:
        return (
            f"TTTensor(modes={self.mode_sizes}, ranks={self.ranks}, "
            f"field={self.scalar_field})"
        )


@dataclass
class TTGlobalSVD:
    """Left-orthonormal TT factor, singular values and right factor.

    ``U`` is a tail-open TT whose final rank equals ``len(sigma)``;
    contracting it with itself over all physical modes gives the identity.
    ``V`` has shape ``(N, r)`` with orthonormal columns, so the source
    tensor is recovered (up to truncation) as ``U @ diag(sigma) @ V.T``.
    """

    U: TTTensor
    sigma: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.sigma)

    def reconstruct_dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        """Dense ``U @ diag(sigma) @ V.T`` reshaped to the source modes."""
        mat = self.U.to_matrix(cap=cap) @ (self.sigma[:, None] * self.V.T)
        return mat.reshape(*self.U.mode_sizes, self.V.shape[0])


def tt_entry(T: TTTensor, idx):
    """Evaluate one entry by chaining the per-mode core slices.

    Returns a scalar for a proper tensor; for a tail-open factor the
    result is a vector over the open rank index.
    """
    if len(idx) != T.order:
        raise ValueError(f"multi-index length {len(idx)} != order {T.order}")
    for k, (i, n) in enumerate(zip(idx, T.mode_sizes)):
        if not 0 <= i < n:
            raise IndexError(f"index {i} out of range [0, {n}) in mode {k}")
    vec = T.cores[0][:, idx[0], :]
    for k in range(1, T.order):
        vec = vec @ T.cores[k][:, idx[k], :]
    return vec[0, 0] if T.tail_rank == 1 else vec[0]


def tt_to_dense(T: TTTensor, cap: int = DENSE_CAP) -> np.ndarray:
    """Reconstruct the full array; guarded by an entry-count cap.

    Shape is ``mode_sizes`` for a proper tensor, with the open rank
    appended as a final axis for a tail-open factor.
    """
    total = int(np.prod(T.mode_sizes)) * T.tail_rank
    if total > cap:
        raise SizeCapError(f"dense reconstruction of {total} entries exceeds cap {cap}")
    mat = T.cores[0].reshape(T.mode_sizes[0], -1)
    for core in T.cores[1:]:
        r, n, r_next = core.shape
        mat = mat @ core.reshape(r, n * r_next)
        mat = mat.reshape(-1, r_next)
    if T.tail_rank == 1:
        return mat.reshape(T.mode_sizes)
    return mat.reshape(*T.mode_sizes, T.tail_rank)


def truncated_svd(M: np.ndarray, eps: float):
    """Truncated SVD retaining the smallest leading set of singular values
    whose cumulative fraction of the total reaches ``eps``.

    Values below ``machine_eps * sigma_1 * max(m, n)`` are always dropped
    so the retained spectrum stays safely invertible.

    Returns ``(U, sigma, V, r)`` where ``U`` (m, r) and ``V`` (n, r) have
    orthonormal columns and ``sigma`` is positive non-increasing.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={M.ndim}")
    if not np.any(M):
        raise DegenerateInputError("cannot compute the SVD of an all-zero matrix")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but sturdier
        U, s, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")
    tiny = np.finfo(s.dtype).eps * s[0] * max(M.shape)
    numerical_rank = max(1, int(np.count_nonzero(s > tiny)))
    cumulative = np.cumsum(s)
    fractions = cumulative / cumulative[-1]  # final entry is exactly 1.0
    r = int(np.searchsorted(fractions, eps, side="left")) + 1
    r = min(r, numerical_rank)
    return U[:, :r], s[:r].copy(), Vt[:r].T.copy(), r


def global_svd(T: TTTensor, eps: float) -> TTGlobalSVD:
    """Left-orthonormalizing sweep over a tensor with a trailing data mode.

    The first ``d`` cores are orthonormalized left to right (truncated SVD
    of the matricized core, fold ``sigma @ V.T`` into the next core); the
    factor remaining in the data core is split once more to produce the
    singular values and the right factor ``V`` of shape ``(N, r)``.

    The eps rule truncates interior bonds only; SVDs touching the data mode
    keep every numerically nonzero value (see ``data_tensor_svd`` for why).
    """
    if T.order < 2:
        raise ValueError("global SVD needs at least one physical mode plus a data mode")
    if T.tail_rank != 1:
        raise ValueError("global SVD expects a proper tensor (trailing rank 1)")
    cores = list(T.cores)
    d = T.order - 1
    for k in range(d):
        r_left, n, r_right = cores[k].shape
        step_eps = eps if k < d - 1 else 1.0
        U, s, V, _ = truncated_svd(cores[k].reshape(r_left * n, r_right), step_eps)
        cores[k] = U.reshape(r_left, n, -1)
        cores[k + 1] = np.tensordot(s[:, None] * V.T, cores[k + 1], axes=(1, 0))
    remainder = cores[d].reshape(cores[d].shape[0], -1)  # (r_d, N)
    U_tail, sigma, V, _ = truncated_svd(remainder, 1.0)
    cores[d - 1] = np.tensordot(cores[d - 1], U_tail, axes=(2, 0))
    return TTGlobalSVD(U=TTTensor(cores[:d]), sigma=sigma, V=V)


def contract_last_rank(T: TTTensor, M: np.ndarray) -> TTTensor:
    """Multiply the final core's open rank index by ``M``; other cores are shared."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != T.tail_rank:
        raise ValueError(
            f"matrix with {M.shape[0] if M.ndim == 2 else '?'} rows cannot contract "
            f"tail rank {T.tail_rank}"
        )
    new_last = np.tensordot(T.cores[-1], M, axes=(2, 0))
    return TTTensor(T.cores[:-1] + [new_last])


def tt_overlap(A: TTTensor, B: TTTensor) -> np.ndarray:
    """Full contraction of two TT factors over all physical modes.

    For tail-open factors the result has shape ``(A.tail_rank, B.tail_rank)``;
    left-orthonormality of a factor ``U`` means ``tt_overlap(U, U) == I``.
    Contraction runs core by core, so no dense intermediate is formed.
    """
    if A.mode_sizes != B.mode_sizes:
        raise ValueError(f"mode sizes differ: {A.mode_sizes} vs {B.mode_sizes}")
    env = np.ones((1, 1))
    for Ga, Gb in zip(A.cores, B.cores):
        tmp = np.tensordot(env, Gb, axes=(1, 0))  # (ra, n, rb')
        env = np.tensordot(Ga, tmp, axes=([0, 1], [0, 1]))  # (ra', rb')
    return env


def write_tt_stream(fh, T: TTTensor) -> None:
    """Write a TT container to an open binary stream.

    Layout (all integers little-endian int64): core count d, the d mode
    sizes, the d+1 ranks, a scalar-field tag (0 real, 1 complex); then the
    cores in order as little-endian float64 (real/imag pairs for complex).
    """
    tag = _FIELD_TAGS[T.scalar_field]
    header = [T.order, *T.mode_sizes, *T.ranks, tag]
    fh.write(struct.pack(f"<{len(header)}q", *header))
    for core in T.cores:
        dtype = "<c16" if tag == 1 else "<f8"
        fh.write(np.ascontiguousarray(core).astype(dtype).tobytes())


def read_tt_stream(fh) -> TTTensor:
    """Read one TT container from an open binary stream."""
    (d,) = struct.unpack("<q", fh.read(8))
    modes = struct.unpack(f"<{d}q", fh.read(8 * d))
    ranks = struct.unpack(f"<{d + 1}q", fh.read(8 * (d + 1)))
    (tag,) = struct.unpack("<q", fh.read(8))
    dtype = "<c16" if tag == 1 else "<f8"
    itemsize = 16 if tag == 1 else 8
    cores = []
    for k in range(d):
        shape = (ranks[k], modes[k], ranks[k + 1])
        raw = fh.read(itemsize * int(np.prod(shape)))
        cores.append(np.frombuffer(raw, dtype=dtype).reshape(shape).copy())
    return TTTensor(cores)


def save_tt(T: TTTensor, path) -> None:
    """Write a TT to a binary container file; see :func:`write_tt_stream`."""
    with open(path, "wb") as fh:
        write_tt_stream(fh, T)


def load_tt(path) -> TTTensor:
    """Read a TT written by :func:`save_tt`."""
    with open(path, "rb") as fh:
        return read_tt_stream(fh)
