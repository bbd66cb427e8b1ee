"""Identification of nonlinear vector fields via the Koopman generator in
tensor-train format.

The dense baseline (EDMD + eigendecomposition logarithm) and the TT path
(AMUSEt + eigenvalue logarithm) share the same dictionary conventions, so
either route yields dictionary coefficients of the governing equations from
snapshot pairs alone.
"""

from .amuset import EigenSolution, amuset, reduced_matrix
from .dense import (DenseGenerator, KoopmanMatrix, edmd, extract_row,
                    matrix_log_generator)
from .dictionary import (MonomialDictionary, SnapshotSet, data_tensor_svd,
                         eval_1d, eval_full, eval_full_dense)
from .dynamics import (OdeSystem, Trajectory, TrueCoefficients, get_system,
                       integrate, lorenz96, sample_pairs, true_coefficients)
from .generator import (GeneratorTT, assemble_generator, coefficient,
                        extract_vector_field_row, generator_eigenvalues,
                        load_generator, save_generator, xi_pseudo_inverse)
from .harness import ExperimentConfig, IdentificationResult, identify
from .tt import (TTGlobalSVD, TTTensor, contract_last_rank, global_svd,
                 load_tt, save_tt, truncated_svd, tt_entry, tt_overlap,
                 tt_to_dense)

__version__ = "0.1.0"
