"""Runtime self-verification: every checkable identity at one instance size.

Each check produces a CheckOutcome with a predicted value, a measured value,
and the deviation between them.  Checks whose dense oracle exceeds the size
guard are reported as skipped, never silently dropped.
"""
from __future__ import annotations

import math

import numpy as np

from .analysis import (
    CheckOutcome,
    allones_rayleigh,
    check_cross_term_orthogonality,
    check_f0_part_gram,
    check_f1_part_gram,
    check_surrogate_first_gram,
    skipped,
    surrogate_identity_max_diff,
    weight_projector_dense,
    _outcome,
)
from .builder import (
    AlphaProfile,
    count_dimensions,
    default_alpha_profile,
    hadamard_mask,
    legal_column_indices,
    legal_row_indices,
    restrict_to_legal,
    stack_gamma_prime,
    build_surrogate_gamma1,
)
from .limits import DENSE_LIMIT_DEFAULT
from .scheme import (
    InstanceParams,
    MaskSlot,
    Role,
    build_e0,
    build_e1,
    build_f,
    build_f0,
    build_f1,
    delta1_image_of_f,
    mask_factor,
)
from .spectral import (
    dense_top_singular_value,
    materialize_dense,
    matvec,
    rmatvec,
    top_singular_value,
)


def _factor_checks(q: int) -> list[CheckOutcome]:
    e0 = build_e0(q).entries
    e1 = build_e1(q).entries
    f0 = build_f0(q).entries
    f1 = build_f1(q).entries
    f = build_f(q).entries
    img = delta1_image_of_f(q).entries
    out = [
        _outcome(f"e0_idempotent[q={q}]", 0.0,
                 np.abs(e0 @ e0 - e0).max(), np.abs(e0 @ e0 - e0).max(), 1e-12),
        _outcome(f"e_sum_identity[q={q}]", 0.0,
                 np.abs(e0 + e1 - np.eye(q)).max(),
                 np.abs(e0 + e1 - np.eye(q)).max(), 1e-12),
        _outcome(f"e_orthogonal[q={q}]", 0.0,
                 np.abs(e0 @ e1).max(), np.abs(e0 @ e1).max(), 1e-12),
        _outcome(f"f0_gram_is_e0[q={q}]", 0.0,
                 np.abs(f0 @ f0.T - e0).max(), np.abs(f0 @ f0.T - e0).max(),
                 1e-12),
        _outcome(f"f0_f1_orthogonal[q={q}]", 0.0,
                 np.abs(f0 @ f1.T).max(), np.abs(f0 @ f1.T).max(), 1e-14),
        _outcome(f"f_is_sum[q={q}]", 0.0,
                 np.abs(f - f0 - f1).max(), np.abs(f - f0 - f1).max(), 1e-14),
    ]
    # each factor agrees with its coordinate-1 replacement wherever the
    # inequality mask is 1
    f3 = f.reshape(q, q, q).copy()
    i3 = img.reshape(q, q, q).copy()
    idx = np.arange(q)
    f3[idx, idx, :] = 0.0
    i3[idx, idx, :] = 0.0
    dev = float(np.abs(f3 - i3).max())
    out.append(_outcome(f"f_image_mask_agreement[q={q}]", 0.0, dev, dev, 1e-12))
    masked_f = mask_factor(build_f(q), MaskSlot.F_SLOT1).entries
    dev = float(np.abs(masked_f - f3.reshape(q, q * q)).max())
    out.append(_outcome(f"f_mask_machinery[q={q}]", 0.0, dev, dev, 1e-14))
    m = 1.0 - np.eye(q)
    dev = float(np.abs(e1 * m - (-e0) * m).max())
    out.append(_outcome(f"e1_mask_is_minus_e0[q={q}]", 0.0, dev, dev, 1e-12))
    dev = float(np.abs(mask_factor(build_e1(q), MaskSlot.COLUMN).entries
                       - e1 * m).max())
    out.append(_outcome(f"e1_mask_machinery[q={q}]", 0.0, dev, dev, 1e-14))
    return out


def _projector_checks(params: InstanceParams, dense_limit: int) -> list[CheckOutcome]:
    n, q = params.n, params.q
    if q ** (2 * n) > dense_limit:
        return [skipped(f"weight_projectors[n={n},q={q}]",
                        f"dense projector needs {q**(2*n)} > {dense_limit}")]
    out = []
    total = np.zeros((q**n, q**n))
    for k in range(n + 1):
        p = weight_projector_dense(n, q, k, dense_limit)
        total += p
        dev = max(
            float(np.abs(p @ p - p).max()),
            float(np.abs(p - p.T).max()),
        )
        trace_pred = math.comb(n, k) * (q - 1) ** k
        dev = max(dev, abs(float(np.trace(p)) - trace_pred))
        out.append(_outcome(f"weight_projector[n={n},q={q},k={k}]",
                            trace_pred, float(np.trace(p)), dev, 1e-10))
    dev = float(np.abs(total - np.eye(q**n)).max())
    out.append(_outcome(f"weight_projector_resolution[n={n},q={q}]",
                        0.0, dev, dev, 1e-10))
    return out


def _builder_checks(
    params: InstanceParams, alpha: AlphaProfile, dense_limit: int
) -> list[CheckOutcome]:
    n, q = params.n, params.q
    out: list[CheckOutcome] = []
    gp = stack_gamma_prime(params, alpha)
    full_entries = len(gp.blocks) * gp.block_rows_full * gp.cols_full
    dense_ok = full_entries <= dense_limit

    if dense_ok:
        mask_dev, agree_dev = surrogate_identity_max_diff(params, alpha,
                                                          dense_limit)
        out.append(_outcome(f"hadamard_mask_machinery[n={n},q={q}]",
                            0.0, mask_dev, mask_dev, 1e-12, "dense pattern"))
        out.append(_outcome(f"surrogate_identity[n={n},q={q}]",
                            0.0, agree_dev, agree_dev, 1e-12, "dense pattern"))
    else:
        reason = f"dense stack needs {full_entries} > {dense_limit}"
        out.append(skipped(f"hadamard_mask_machinery[n={n},q={q}]", reason))
        out.append(skipped(f"surrogate_identity[n={n},q={q}]", reason))

    # legality counts from falling-factorial combinatorics
    cols = legal_column_indices(params).size
    rows = legal_row_indices(params).size
    cols_pred = math.perm(q, n) if q >= n else 0
    rows_pred = math.perm(q, n - 1) if q >= n - 1 else 0
    out.append(_outcome(f"legal_column_count[n={n},q={q}]",
                        cols_pred, cols, abs(cols - cols_pred), 0.0))
    out.append(_outcome(f"legal_row_count[n={n},q={q}]",
                        rows_pred, rows, abs(rows - rows_pred), 0.0))

    if q < n:
        out.append(skipped(f"legality_submatrix[n={n},q={q}]",
                           "empty column set (q < n)"))
        out.append(skipped(f"mask_monotonicity[n={n},q={q}]",
                           "empty column set (q < n)"))
        out.append(skipped(f"mask_symmetry[n={n},q={q}]",
                           "empty column set (q < n)"))
        return out

    if dense_ok:
        gamma = restrict_to_legal(gp)
        dg = materialize_dense(gamma, dense_limit)
        dgp = materialize_dense(gp, dense_limit)
        row_idx = np.concatenate([
            bi * gp.block_rows_full + gamma.row_selection
            for bi in range(len(gp.blocks))
        ])
        sub = dgp[np.ix_(row_idx, gamma.col_selection)]
        dev = float(np.abs(dg - sub).max())
        out.append(_outcome(f"legality_submatrix[n={n},q={q}]",
                            0.0, dev, dev, 0.0, "dense"))
        masked = hadamard_mask(gp, 1)
        s_full = dense_top_singular_value(masked, dense_limit)
        s_legal = dense_top_singular_value(restrict_to_legal(masked),
                                           dense_limit)
        dev = max(0.0, s_legal - s_full * (1 + 1e-12))
        out.append(_outcome(f"mask_monotonicity[n={n},q={q}]",
                            0.0, dev, dev, 0.0,
                            f"legal {s_legal:.12g} <= full {s_full:.12g}"))
        s2 = dense_top_singular_value(hadamard_mask(gp, 2), dense_limit)
        sn = dense_top_singular_value(hadamard_mask(gp, n), dense_limit)
        dev = max(abs(s2 - s_full), abs(sn - s_full)) / s_full
        out.append(_outcome(f"mask_symmetry[n={n},q={q}]",
                            s_full, s2, dev, 1e-8, "relative across coords"))
    else:
        reason = f"dense stack needs {full_entries} > {dense_limit}"
        out.append(skipped(f"legality_submatrix[n={n},q={q}]", reason))
        out.append(skipped(f"mask_monotonicity[n={n},q={q}]", reason))
        out.append(skipped(f"mask_symmetry[n={n},q={q}]", reason))
    return out


def _spectral_checks(
    params: InstanceParams, alpha: AlphaProfile, dense_limit: int, seed: int
) -> list[CheckOutcome]:
    n, q = params.n, params.q
    out: list[CheckOutcome] = []
    gp = stack_gamma_prime(params, alpha)
    rows, cols = count_dimensions(gp)
    rng = np.random.default_rng(seed)

    # linearity and adjoint probes are always feasible
    u = rng.standard_normal(cols)
    v = rng.standard_normal(cols)
    lhs = matvec(gp, 2.5 * u - 0.5 * v)
    rhs = 2.5 * matvec(gp, u) - 0.5 * matvec(gp, v)
    scale = max(1.0, float(np.abs(rhs).max()))
    dev = float(np.abs(lhs - rhs).max()) / scale
    out.append(_outcome(f"matvec_linearity[n={n},q={q}]", 0.0, dev, dev, 1e-12))

    dev = 0.0
    for _ in range(10):
        v = rng.standard_normal(cols)
        v /= np.linalg.norm(v)
        w = rng.standard_normal(rows)
        w /= np.linalg.norm(w)
        dev = max(dev, abs(float(w @ matvec(gp, v))
                           - float(rmatvec(gp, w) @ v)))
    out.append(_outcome(f"adjoint_identity[n={n},q={q}]", 0.0, dev, dev, 1e-10,
                        "10 probe pairs"))

    full_entries = len(gp.blocks) * gp.block_rows_full * gp.cols_full
    if full_entries > dense_limit:
        out.append(skipped(f"oracle_equivalence[n={n},q={q}]",
                           f"dense stack needs {full_entries} > {dense_limit}"))
        return out

    kinds = [("gamma_prime", gp),
             ("surrogate", build_surrogate_gamma1(params, alpha))]
    if q >= n:
        masked = hadamard_mask(gp, 1)
        kinds += [("gamma", restrict_to_legal(gp)),
                  ("gamma_masked", restrict_to_legal(masked))]
    for kind_name, op in kinds:
        sd = dense_top_singular_value(op, dense_limit)
        sk = top_singular_value(op, seed=seed).sigma_max
        dev = abs(sk - sd) / sd if sd > 0 else abs(sk)
        out.append(_outcome(f"oracle_equivalence[{kind_name},n={n},q={q}]",
                            sd, sk, dev, 1e-7, "relative"))

    dgp = materialize_dense(gp, dense_limit)
    pred = float(dgp.sum()) / math.sqrt(rows * cols)
    got = allones_rayleigh(gp)
    dev = abs(got - pred)
    out.append(_outcome(f"rayleigh_dense_sum[n={n},q={q}]",
                        pred, got, dev, 1e-10))
    return out


def _analysis_checks(
    params: InstanceParams, alpha: AlphaProfile, dense_limit: int, seed: int
) -> list[CheckOutcome]:
    n, q = params.n, params.q
    out: list[CheckOutcome] = []
    for k in range(n - 1):
        out.append(check_f0_part_gram(params, k, dense_limit, seed=seed))
        out.append(check_f1_part_gram(params, k, dense_limit, seed=seed))
    sur_first_entries = (n - 1) * params.q ** (2 * n - 1)
    if sur_first_entries <= dense_limit and q ** (2 * (n - 1)) <= dense_limit:
        out.append(check_surrogate_first_gram(params, alpha, dense_limit))
    else:
        out.append(skipped(f"w1_gram[n={n},q={q}]",
                           f"dense Gram needs {sur_first_entries} > {dense_limit}"))
    block_entries = params.q ** (2 * n - 1)
    for k in range(n - 1):
        for k2 in range(k + 1, n - 1):
            if block_entries <= dense_limit:
                out.append(check_cross_term_orthogonality(
                    params, k, k2, dense_limit))
            else:
                out.append(skipped(
                    f"cross_gram[n={n},q={q},k={k},k'={k2}]",
                    f"dense block needs {block_entries} > {dense_limit}"))
    return out


def run_verification_suite(
    params: InstanceParams,
    alpha: AlphaProfile | None = None,
    dense_limit: int = DENSE_LIMIT_DEFAULT,
    seed: int = 0,
) -> list[CheckOutcome]:
    """All invariant checks at one instance size, in a stable order."""
    if alpha is None:
        alpha = default_alpha_profile(params.n)
    checks = _factor_checks(params.q)
    checks += _projector_checks(params, dense_limit)
    checks += _builder_checks(params, alpha, dense_limit)
    checks += _spectral_checks(params, alpha, dense_limit, seed)
    checks += _analysis_checks(params, alpha, dense_limit, seed)
    return checks
