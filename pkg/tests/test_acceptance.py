"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one `ACCEPTANCE <id>: PASS|FAIL` line (visible with
`pytest -s`) before asserting, so a red run still reports every verdict.
The scaling scan at n = 5 iterates matrix-free over ~9.8M-dimensional
vectors and dominates the runtime of the suite.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

import edadv as ed
from edadv.analysis import (
    adversary_ratio,
    allones_rayleigh,
    brute_tilde_sum,
    check_f0_part_gram,
    check_f1_part_gram,
    check_surrogate_first_gram,
    g_recurrence,
    surrogate_identity_max_diff,
    weight0_lower_bound,
)
from edadv.builder import hadamard_mask, restrict_to_legal
from edadv.cli import main as cli_main
from edadv.spectral import dense_top_singular_value, top_singular_value


def _report(ident: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {ident}: {'PASS' if ok else 'FAIL'} - {detail}")


EQ_GRID = [(n, q) for n in (3, 4, 5) for q in (4, 5, 6, 7)]


def test_criterion_1_f0_gram_closed_form():
    t0 = time.monotonic()
    outcomes = []
    for n, q in EQ_GRID:
        for k in range(n - 1):
            outcomes.append(check_f0_part_gram(ed.InstanceParams(n, q), k))
    elapsed = time.monotonic() - t0
    worst = max(o.deviation for o in outcomes)
    ok = all(o.passed for o in outcomes) and elapsed < 60.0
    _report("1 (constant-part Gram eigenvalues)", ok,
            f"{len(outcomes)} cells, worst deviation {worst:.2e} "
            f"(tol 1e-08), {elapsed:.1f}s (< 60s)")
    assert all(o.passed for o in outcomes), [o for o in outcomes if not o.passed]
    assert elapsed < 60.0


def test_criterion_2_f1_gram_closed_form():
    t0 = time.monotonic()
    outcomes = []
    for n, q in EQ_GRID:
        for k in range(n - 1):
            outcomes.append(check_f1_part_gram(ed.InstanceParams(n, q), k))
    elapsed = time.monotonic() - t0
    worst = max(o.deviation for o in outcomes)
    ok = all(o.passed for o in outcomes)
    _report("2 (shift-part Gram norm and support)", ok,
            f"{len(outcomes)} cells, worst deviation {worst:.2e} "
            f"(tol 1e-08), {elapsed:.1f}s")
    assert ok, [o for o in outcomes if not o.passed]


def test_criterion_3_surrogate_first_submatrix_gram():
    outcomes = []
    for n in (3, 4):
        for q in (4, 5, 6):
            outcomes.append(check_surrogate_first_gram(
                ed.InstanceParams(n, q), ed.default_alpha_profile(n)))
    worst = max(o.deviation for o in outcomes)
    ok = all(o.passed for o in outcomes)
    _report("3 (surrogate first-submatrix Gram)", ok,
            f"{len(outcomes)} cells, worst entry deviation {worst:.2e} "
            f"(tol 1e-08)")
    assert ok, [o for o in outcomes if not o.passed]


def test_criterion_4_surrogate_identity_under_mask():
    worst = 0.0
    for n in (3, 4):
        for q in (3, 4, 5, 6):
            mask_dev, agree_dev = surrogate_identity_max_diff(
                ed.InstanceParams(n, q), ed.default_alpha_profile(n))
            worst = max(worst, mask_dev, agree_dev)
    ok = worst <= 1e-12
    _report("4 (masked surrogate identity)", ok,
            f"8 cells, worst entry deviation {worst:.2e} (tol 1e-12)")
    assert ok


def test_criterion_5_counting_lemma_exact():
    t0 = time.monotonic()
    nonneg = all(
        g_recurrence(k, ell, q) >= 0
        for q in range(2, 13)
        for ell in range(q + 1)
        for k in range(ell + 1)
    )
    brute_ok = True
    cells = 0
    for q in range(2, 8):
        for k in range(min(4, q) + 1):
            brute_ok &= brute_tilde_sum(k, q) == Fraction(
                g_recurrence(k, q, q), q**k)
            cells += 1
    elapsed = time.monotonic() - t0
    ok = nonneg and brute_ok and elapsed < 120.0
    _report("5 (counting lemma, exact arithmetic)", ok,
            f"recurrence nonnegative through q=12: {nonneg}; "
            f"{cells} exhaustive-oracle cells agree exactly: {brute_ok}; "
            f"{elapsed:.1f}s (< 120s)")
    assert ok


def test_criterion_6_matrix_free_matches_dense_svd():
    grid = [(2, 2), (2, 3), (2, 4), (3, 3), (3, 4), (3, 5), (3, 6), (3, 8),
            (4, 4), (4, 6), (4, 8)]
    worst = 0.0
    cells = 0
    for n, q in grid:
        params = ed.InstanceParams(n, q)
        alpha = ed.default_alpha_profile(n)
        gp = ed.stack_gamma_prime(params, alpha)
        kinds = {
            "gamma_prime": gp,
            "surrogate": ed.build_surrogate_gamma1(params, alpha),
            "gamma": restrict_to_legal(gp),
            "gamma_masked": restrict_to_legal(hadamard_mask(gp, 1)),
        }
        for name, op in kinds.items():
            sd = dense_top_singular_value(op)
            sk = top_singular_value(op).sigma_max
            rel = abs(sk - sd) / sd
            worst = max(worst, rel)
            cells += 1
            assert rel <= 1e-7, (name, n, q, rel)
    ok = worst <= 1e-7
    _report("6 (Krylov vs dense SVD oracle)", ok,
            f"{cells} operator instances, worst relative deviation "
            f"{worst:.2e} (tol 1e-07)")
    assert ok


def test_criterion_7_sanity_chain_in_bound_runs():
    configs = [(2, 4), (3, 9), (4, 16)]
    all_ok = True
    details = []
    for n, q in configs:
        rep = adversary_ratio(ed.InstanceParams(n, q),
                              ed.default_alpha_profile(n))
        chain = (
            rep.allones_rayleigh <= rep.norm_gamma * (1 + 1e-7)
            and rep.norm_gamma <= rep.norm_gamma_prime * (1 + 1e-7)
            and rep.norm_gamma_masked
            <= rep.norm_gamma_prime_masked * (1 + 1e-7)
            and rep.norm_gamma_prime_masked
            <= 2 * rep.surrogate_norm * (1 + 1e-7)
            and rep.norm_gamma_prime >= rep.weight0_bound * (1 - 1e-7)
        )
        all_ok &= chain and rep.sanity_ok
        details.append(f"n={n},q={q}:{'ok' if chain else 'VIOLATED'}")
    _report("7 (sanity chain in bound runs)", all_ok, "; ".join(details))
    assert all_ok


def test_criterion_8_legality_retains_rayleigh_mass():
    all_ok = True
    details = []
    for n in (3, 4, 5):
        q = n * n
        params = ed.InstanceParams(n, q)
        alpha = ed.default_alpha_profile(n)
        gamma = restrict_to_legal(ed.stack_gamma_prime(params, alpha))
        val = allones_rayleigh(gamma)
        floor = 0.3 * weight0_lower_bound(n, alpha)
        all_ok &= val >= floor
        details.append(f"n={n}: {val:.6f} >= {floor:.6f}")
    _report("8 (legality retention of the Rayleigh mass)", all_ok,
            "; ".join(details))
    assert all_ok


@pytest.fixture(scope="module")
def scaling_rows():
    rows = []
    for n in (3, 4, 5):
        params = ed.InstanceParams(n, n * n)
        rep = adversary_ratio(params, ed.default_alpha_profile(n))
        rows.append(rep)
    return rows


def test_criterion_9_scaling_band(scaling_rows):
    normalized = [rep.ratio / rep.n ** (2.0 / 3.0) for rep in scaling_rows]
    converged = all(rep.all_converged for rep in scaling_rows)
    band = max(normalized) / min(normalized)
    monotone = all(
        normalized[i + 1] >= 0.9 * normalized[i]
        for i in range(len(normalized) - 1)
    )
    ok = converged and band <= 2.0 and monotone
    detail = ", ".join(
        f"n={rep.n}: ratio={rep.ratio:.6f} over_n23={v:.6f}"
        for rep, v in zip(scaling_rows, normalized)
    )
    _report("9 (bounded-range scaling of the normalized ratio)", ok,
            f"{detail}; band factor {band:.3f} (<= 2), "
            f"non-decreasing with 10% slack: {monotone}")
    assert converged and band <= 2.0 and monotone


def test_criterion_10_scan_byte_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["scan", "--n-min", "3", "--n-max", "4", "--seed", "0"]
    assert cli_main(args + ["--out", str(a)]) == 0
    assert cli_main(args + ["--out", str(b)]) == 0
    identical = a.read_bytes() == b.read_bytes()
    _report("10 (byte-identical scan reruns)", identical,
            f"two runs, {len(a.read_bytes())} bytes each, identical: "
            f"{identical}")
    assert identical
