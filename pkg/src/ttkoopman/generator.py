"""Koopman generator in TT format via eigenvalue logarithms.

Instead of a dense matrix logarithm, the generator is assembled from the
AMUSEt eigendecomposition: L = Xi diag(mu) Xi^+ with mu_i = log(lambda_i)/ts.
The orthonormal TT cores of U_X are shared between Xi and its pseudo-inverse,
so complex arithmetic stays confined to small (r x r) tail matrices and
nothing of dictionary size is ever materialized.

The assembled operator is an order-2d TT.  Cores are stored row chain first
(modes i_1..i_d, ranks 1, r_1, ..., r_{d-1}, r), then the mirrored column
chain (transposed shared cores, ranks r, r_{d-1}, ..., r_1, 1), which
carries the column modes tail to head: position d+m holds mode j_{d+1-m}.
Entry accessors take (row multi-index, column multi-index) and handle the
reversal internally.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .amuset import EigenSolution
from .dictionary import MonomialDictionary
from .errors import (BranchCutWarning, NonRealCoefficientWarning,
                     SingularLogarithmError)
from .tt import (DENSE_CAP, TTGlobalSVD, TTTensor, contract_last_rank,
                 read_tt_stream, tt_entry, tt_overlap, write_tt_stream)

ZERO_EIGENVALUE_TOL = 1e-12
BRANCH_CUT_ANGLE = 1e-6
CONDITION_LIMIT = 1e12
IMAG_TOL = 1e-6
PROBE_DENSE_LIMIT = 256


def generator_eigenvalues(lambdas: np.ndarray, ts: float) -> np.ndarray:
    """Map Koopman eigenvalues to generator eigenvalues: mu = log(lambda)/ts.

    Uses the principal branch, Arg in (-pi, pi].  Eigenvalues close to the
    negative real axis trigger a :class:`BranchCutWarning` because the
    imaginary part of mu saturates near pi/ts (continuous-time aliasing).
    """
    if ts <= 0:
        raise ValueError("sampling interval must be positive")
    lambdas = np.asarray(lambdas, dtype=complex)
    if np.any(np.abs(lambdas) <= ZERO_EIGENVALUE_TOL):
        raise SingularLogarithmError(
            "eigenvalue with near-zero modulus; log(lambda) is undefined"
        )
    near_cut = np.pi - np.abs(np.angle(lambdas)) < BRANCH_CUT_ANGLE
    if np.any(near_cut):
        warnings.warn(
            f"{int(np.count_nonzero(near_cut))} eigenvalue(s) within "
            f"{BRANCH_CUT_ANGLE:.0e} of the negative real axis; generator "
            f"eigenvalues alias near pi/ts",
            BranchCutWarning,
        )
    return np.log(lambdas) / ts


@dataclass
class XiPseudoInverse:
    """Pseudo-inverse of the eigentensor: (A^+ Sigma^{-1}) against the shared
    orthonormal cores, i.e. Xi^+ = tail @ U^T."""

    U: TTTensor
    tail: np.ndarray
    warnings: list[str] = field(default_factory=list)

    def to_matrix(self, cap: int = DENSE_CAP) -> np.ndarray:
        return self.tail @ self.U.to_matrix(cap=cap).T


def xi_pseudo_inverse(sol: EigenSolution) -> XiPseudoInverse:
    """Invert Xi = U Sigma A by inverting only the small tail.

    Left-orthonormality of U makes Xi^+ = A^+ Sigma^{-1} U^T; A^+ is computed
    from the SVD of the (r x r) eigenvector stack, dropping directions beyond
    condition 1e12 and recording the rank drop.
    """
    A = np.asarray(sol.A, dtype=complex)
    r = A.shape[0]
    u, s, vh = np.linalg.svd(A)
    notes = []
    keep = s > s[0] / CONDITION_LIMIT
    rank = int(np.count_nonzero(keep))
    if rank < r:
        notes.append(
            f"eigenvector stack numerically rank-deficient: kept {rank} of {r} "
            "directions in the pseudo-inverse"
        )
    a_pinv = (vh[:rank].conj().T / s[:rank]) @ u[:, :rank].conj().T
    tail = a_pinv / sol.svd_x.sigma[None, :]
    return XiPseudoInverse(U=sol.svd_x.U, tail=tail, warnings=notes)


class GeneratorTT:
    """Assembled TT-format generator with cheap entry probes.

    Holds both the factored form (shared real cores, complex tails) and the
    assembled order-2d operator cores; ``element_count`` is the total number
    of stored elements of the assembled operator.
    """

    def __init__(self, sol: EigenSolution, ts: float, mu: np.ndarray,
                 xi_tail: np.ndarray, xi_plus_tail: np.ndarray,
                 notes: list[str]):
        U = sol.svd_x.U
        mode_sizes = U.mode_sizes
        if len(set(mode_sizes)) != 1:
            raise ValueError("generator assembly expects uniform mode sizes")
        self.dictionary = MonomialDictionary(d=U.order, degree=mode_sizes[0] - 1)
        self.ts = ts
        self.eps = sol.eps
        self.lambdas = sol.lambdas.copy()
        self.mu = mu
        self.xi_cores = U.cores
        self.xi_tail = xi_tail
        self.xi_plus_tail = xi_plus_tail
        # diag(mu) folded into the pseudo-inverse side first, then the small
        # complex product sits on the shared rank link
        self.middle = xi_tail @ (mu[:, None] * xi_plus_tail)
        self.warnings = list(notes)
        self._u = U
        mirrored = [core.transpose(2, 1, 0) for core in reversed(U.cores[:-1])]
        head = np.tensordot(self.middle, U.cores[-1].transpose(2, 1, 0), axes=(1, 0))
        self.assembled = list(U.cores) + [head] + mirrored
        self.assembled_tt = TTTensor(self.assembled)
        self.element_count = self.assembled_tt.storage_count

    @property
    def rank(self) -> int:
        return len(self.mu)

    def row_vector(self, row_idx) -> np.ndarray:
        """Chain the shared cores at a row multi-index: length-r vector."""
        return tt_entry(self._u, row_idx)

    def entry(self, row_idx, col_idx) -> complex:
        """Single operator entry through the factored form."""
        return self.row_vector(row_idx) @ (self.middle @ self.row_vector(col_idx))

    def entry_assembled(self, row_idx, col_idx) -> complex:
        """Same entry through the assembled order-2d chain (cross-check)."""
        return tt_entry(self.assembled_tt, list(row_idx) + list(reversed(col_idx)))

    def xi_plus_xi(self) -> np.ndarray:
        """Full contraction Xi^+ Xi over physical modes; identity if exact."""
        overlap = tt_overlap(self._u, self._u)
        return self.xi_plus_tail @ overlap @ self.xi_tail

    def to_dense_matrix(self, cap: int = DENSE_CAP) -> np.ndarray:
        """Densify the assembled operator to (N_dic, N_dic); small cases only."""
        d = self._u.order
        dense = self.assembled_tt.to_dense(cap=cap)
        perm = list(range(d)) + list(range(2 * d - 1, d - 1, -1))
        n_dic = self.dictionary.size
        return dense.transpose(perm).reshape(n_dic, n_dic)


def assemble_generator(sol: EigenSolution, ts: float) -> GeneratorTT:
    """Build L = Xi diag(mu) Xi^+ as an order-2d TT operator.

    Branch-cut warnings from the eigenvalue logarithm and rank drops in the
    tail inversion are recorded on the result rather than raised.
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        mu = generator_eigenvalues(sol.lambdas, ts)
    notes = [str(w.message) for w in caught if issubclass(w.category, BranchCutWarning)]
    pinv = xi_pseudo_inverse(sol)
    notes.extend(pinv.warnings)
    xi_tail = sol.svd_x.sigma[:, None] * np.asarray(sol.A, dtype=complex)
    return GeneratorTT(sol, ts, mu, xi_tail, pinv.tail, notes)


def extract_vector_field_row(G: GeneratorTT, k: int):
    """Coefficient estimates of F_{k+1}: the generator row of the coordinate
    observable, as a TT over the column modes.

    Returns ``(row_tt, max_imag)`` where ``max_imag`` is the largest absolute
    imaginary part over the probed entries (all entries for tiny
    dictionaries, otherwise every monomial of total degree <= 2).
    """
    dic = G.dictionary
    if dic.degree < 1:
        raise ValueError("dictionary must contain the coordinate observables")
    row = G.row_vector(dic.full_state_index(k))
    tail = (row @ G.middle)[:, None]
    row_tt = contract_last_rank(TTTensor(G.xi_cores), tail)
    if dic.size <= PROBE_DENSE_LIMIT:
        probes = row_tt.to_dense().ravel()
    else:
        probes = np.array(
            [tt_entry(row_tt, idx) for idx in dic.indices_up_to_total_degree(2)]
        )
    max_imag = float(np.max(np.abs(probes.imag)))
    return row_tt, max_imag


def coefficient(G: GeneratorTT, k: int, monomial) -> float:
    """Point probe of one vector-field coefficient: dimension k (0-based),
    monomial given as a per-variable exponent multi-index."""
    dic = G.dictionary
    value = G.entry(dic.full_state_index(k), monomial)
    if abs(value.imag) > IMAG_TOL * max(1.0, abs(value.real)):
        warnings.warn(
            f"coefficient probe has imaginary part {value.imag:.3e} "
            f"above {IMAG_TOL:.0e}",
            NonRealCoefficientWarning,
        )
    return float(value.real)


def save_generator(G: GeneratorTT, path) -> None:
    """Serialize: JSON metadata block, the shared real cores as a TT
    container, then the two complex (r x r) tail matrices."""
    meta = {
        "d": G.dictionary.d,
        "degree": G.dictionary.degree,
        "ts": G.ts,
        "eps": G.eps,
        "rank": int(G.rank),
        "lambda_re": G.lambdas.real.tolist(),
        "lambda_im": G.lambdas.imag.tolist(),
        "mu_re": G.mu.real.tolist(),
        "mu_im": G.mu.imag.tolist(),
        "warnings": G.warnings,
        "element_count": G.element_count,
    }
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<q", len(blob)))
        fh.write(blob)
        write_tt_stream(fh, TTTensor(G.xi_cores))
        for mat in (G.xi_tail, G.xi_plus_tail):
            fh.write(np.ascontiguousarray(mat).astype("<c16").tobytes())


def load_generator(path) -> GeneratorTT:
    """Rebuild a generator saved by :func:`save_generator`.

    The middle matrix and assembled cores are pure functions of the stored
    cores and tails, so they are reconstructed rather than stored.
    """
    with open(path, "rb") as fh:
        (blob_len,) = struct.unpack("<q", fh.read(8))
        meta = json.loads(fh.read(blob_len).decode("utf-8"))
        U = read_tt_stream(fh)
        r = meta["rank"]
        tails = []
        for _ in range(2):
            raw = fh.read(16 * r * r)
            tails.append(np.frombuffer(raw, dtype="<c16").reshape(r, r).copy())
    lambdas = np.asarray(meta["lambda_re"]) + 1j * np.asarray(meta["lambda_im"])
    mu = np.asarray(meta["mu_re"]) + 1j * np.asarray(meta["mu_im"])
    shim = EigenSolution(
        lambdas=lambdas,
        A=np.eye(r, dtype=complex),
        svd_x=TTGlobalSVD(U=U, sigma=np.ones(r), V=np.eye(r)),
        svd_y=TTGlobalSVD(U=U, sigma=np.ones(r), V=np.eye(r)),
        reduced=np.eye(r),
        eps=meta["eps"],
    )
    return GeneratorTT(shim, meta["ts"], mu, tails[0], tails[1],
                       meta["warnings"])
