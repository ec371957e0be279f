"""Adversary-matrix construction and spectral verification for element distinctness."""

from .builder import (
    AlphaProfile,
    BlockOperator,
    CollisionPair,
    all_pairs,
    alpha_profile_from_values,
    assemble_g12,
    build_surrogate_gamma1,
    count_dimensions,
    default_alpha_profile,
    first_coordinate_blocks,
    grid_alpha_profiles,
    hadamard_mask,
    legal_column_indices,
    legal_row_indices,
    permute_block,
    ramp_alpha_profile,
    restrict_to_legal,
    single_part_stack,
    stack_gamma_prime,
)
from .analysis import (
    CheckOutcome,
    LemmaTable,
    RatioReport,
    adversary_ratio,
    allones_rayleigh,
    brute_tilde_sum,
    check_cross_term_orthogonality,
    check_f0_part_gram,
    check_f1_part_gram,
    check_surrogate_first_gram,
    g_recurrence,
    lemma_table,
    surrogate_identity_max_diff,
    w1_coefficient,
    w2_diagnostic,
    w_f0_coefficient,
    w_f1_norm,
    weight0_lower_bound,
    weight_projector_dense,
    weight_projector_matvec,
)
from .limits import DENSE_LIMIT_DEFAULT, VEC_LIMIT_DEFAULT, ResourceLimitError
from .scheme import (
    FactorMatrix,
    InstanceParams,
    KroneckerTerm,
    MaskSlot,
    Role,
    WeightPattern,
    build_e0,
    build_e1,
    build_f,
    build_f0,
    build_f1,
    delta1_image_of_f,
    expand_weight_projector,
    factor,
    mask_factor,
)
from .spectral import (
    MatvecPlan,
    SpectralResult,
    dense_top_singular_value,
    gram_spectrum_dense,
    materialize_dense,
    matvec,
    rmatvec,
    top_singular_value,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
