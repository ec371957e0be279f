"""Factor matrices: entry formulas, projector identities, masks."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import edadv as ed
from edadv.scheme import MaskSlot, Role

from oracles import completion_basis, f1_from_basis, f_image_from_basis


def test_e0_entries_match_formula():
    e0 = ed.build_e0(3)
    assert np.allclose(e0.entries, 1.0 / 3.0, atol=0)
    assert np.array_equal(ed.build_e0(2).entries, [[0.5, 0.5], [0.5, 0.5]])


def test_e1_entries_match_formula():
    e1 = ed.build_e1(3)
    assert np.allclose(np.diag(e1.entries), 2.0 / 3.0)
    off = e1.entries[~np.eye(3, dtype=bool)]
    assert np.allclose(off, -1.0 / 3.0)
    assert np.allclose(ed.build_e1(2).entries, [[0.5, -0.5], [-0.5, 0.5]])


@given(st.integers(2, 16))
@settings(max_examples=15, deadline=None)
def test_e_projector_identities(q):
    e0 = ed.build_e0(q).entries
    e1 = ed.build_e1(q).entries
    eye = np.eye(q)
    assert np.abs(e0 @ e0 - e0).max() < 1e-12
    assert np.abs(e1 @ e1 - e1).max() < 1e-12
    assert np.abs(e0 @ e1).max() < 1e-12
    assert np.abs(e0 + e1 - eye).max() < 1e-12
    assert np.abs(e0 - e0.T).max() == 0
    assert np.abs(e1 - e1.T).max() == 0
    assert abs(np.trace(e1) - (q - 1)) < 1e-12


def test_invalid_alphabet_rejected():
    for builder in (ed.build_e0, ed.build_e1, ed.build_f0, ed.build_f1,
                    ed.build_f, ed.delta1_image_of_f):
        with pytest.raises(ValueError):
            builder(1)


def test_f0_constant_entries():
    f0 = ed.build_f0(4)
    assert f0.rows == 4 and f0.cols == 16
    assert np.allclose(f0.entries, 0.125, atol=0)


@given(st.integers(2, 9))
@settings(max_examples=8, deadline=None)
def test_f0_gram_is_e0(q):
    f0 = ed.build_f0(q).entries
    assert np.abs(f0 @ f0.T - ed.build_e0(q).entries).max() < 1e-14


def test_f1_three_case_values():
    f1 = ed.build_f1(4).entries
    # row x=0; columns indexed y1*q + y2
    assert f1[0, 0] == pytest.approx(0.75, abs=1e-15)          # y1 = y2 = x
    assert f1[0, 0 * 4 + 2] == pytest.approx(0.25, abs=1e-15)  # y1 = x only
    assert f1[0, 1 * 4 + 2] == pytest.approx(-0.25, abs=1e-15)  # neither


@pytest.mark.parametrize("q", range(2, 10))
@pytest.mark.parametrize("seed", [None, 11])
def test_f1_matches_basis_sum(q, seed):
    basis = completion_basis(q, seed)
    assert np.abs(basis @ basis.T - np.eye(q)).max() < 1e-12
    assert np.allclose(basis[:, 0], np.full(q, q**-0.5))
    ref = f1_from_basis(q, basis)
    assert np.abs(ref - ed.build_f1(q).entries).max() < 1e-12


def test_f_is_entrywise_sum():
    f = ed.build_f(4)
    assert f.entries[0, 0] == pytest.approx(0.875, abs=1e-15)
    f2 = ed.build_f(2)
    assert f2.entries.shape == (2, 4)
    assert np.isfinite(f2.entries).all()


@pytest.mark.parametrize("q", range(2, 10))
def test_f1_f0_cross_gram_vanishes(q):
    f0 = ed.build_f0(q).entries
    f1 = ed.build_f1(q).entries
    assert np.abs(f0 @ f1.T).max() < 1e-14
    f = ed.build_f(q).entries
    assert np.abs(f @ f0.T - ed.build_e0(q).entries).max() < 1e-13


def test_delta1_image_values():
    img = ed.delta1_image_of_f(4).entries
    # entry is E1[x, y2] / sqrt(q), independent of y1
    assert img[0, 1 * 4 + 0] == pytest.approx(0.375, abs=1e-15)
    assert img[0, 1 * 4 + 2] == pytest.approx(-0.125, abs=1e-15)
    assert np.abs(img[:, 0 * 4 + 2] - img[:, 3 * 4 + 2]).max() == 0


@pytest.mark.parametrize("q", range(2, 10))
@pytest.mark.parametrize("seed", [None, 5])
def test_delta1_image_matches_basis_sum(q, seed):
    basis = completion_basis(q, seed)
    ref = f_image_from_basis(q, basis)
    assert np.abs(ref - ed.delta1_image_of_f(q).entries).max() < 1e-12


@pytest.mark.parametrize("q", range(2, 8))
def test_image_agrees_with_f_under_slot1_mask(q):
    f = ed.build_f(q).entries.reshape(q, q, q).copy()
    img = ed.delta1_image_of_f(q).entries.reshape(q, q, q).copy()
    idx = np.arange(q)
    f[idx, idx, :] = 0.0
    img[idx, idx, :] = 0.0
    assert np.abs(f - img).max() < 1e-15


def test_mask_factor_e_family():
    e0m = ed.mask_factor(ed.build_e0(3), MaskSlot.COLUMN)
    assert e0m.role is Role.E0_MASKED
    assert np.allclose(np.diag(e0m.entries), 0.0)
    assert e0m.entries[0, 1] == pytest.approx(1.0 / 3.0)
    e1m = ed.mask_factor(ed.build_e1(3), MaskSlot.COLUMN)
    assert np.allclose(np.diag(e1m.entries), 0.0)
    assert e1m.entries[0, 1] == pytest.approx(-1.0 / 3.0)


def test_mask_factor_f_slots():
    q = 4
    fm1 = ed.mask_factor(ed.build_f(q), MaskSlot.F_SLOT1)
    ent = fm1.entries.reshape(q, q, q)
    assert np.abs(ent[np.arange(q), np.arange(q), :]).max() == 0
    fm2 = ed.mask_factor(ed.build_f(q), MaskSlot.F_SLOT2)
    ent2 = fm2.entries.reshape(q, q, q)
    assert np.abs(ent2[np.arange(q), :, np.arange(q)]).max() == 0
    # untouched entries keep their values
    assert ent[0, 1, 2] == ed.build_f(q).entries[0, 1 * q + 2]


def test_mask_factor_idempotent_and_incompatible():
    q = 3
    e0m = ed.mask_factor(ed.build_e0(q), MaskSlot.COLUMN)
    again = ed.mask_factor(e0m, MaskSlot.COLUMN)
    assert np.array_equal(again.entries, e0m.entries)
    with pytest.raises(ValueError):
        ed.mask_factor(ed.build_e0(q), MaskSlot.F_SLOT1)
    with pytest.raises(ValueError):
        ed.mask_factor(ed.build_f(q), MaskSlot.COLUMN)
    with pytest.raises(ValueError):
        ed.mask_factor(ed.delta1_image_of_f(q), MaskSlot.F_SLOT1)


def test_expand_weight_projector_structure():
    terms = ed.expand_weight_projector(2, 1, 3)
    roles = {tuple(role for _, role in t.slots) for t in terms}
    assert roles == {(Role.E0, Role.E1), (Role.E1, Role.E0)}
    single = ed.expand_weight_projector(3, 0, 3)
    assert len(single) == 1
    assert all(role is Role.E0 for _, role in single[0].slots)
    with pytest.raises(ValueError):
        ed.expand_weight_projector(3, 4, 3)
    with pytest.raises(ValueError):
        ed.expand_weight_projector(3, -1, 3)


def _densify_projector(n, k, q):
    from functools import reduce
    total = np.zeros((q**n, q**n))
    for t in ed.expand_weight_projector(n, k, q):
        mats = [ed.factor(role, q).entries for _, role in t.slots]
        total += t.coefficient * reduce(np.kron, mats)
    return total


@given(st.integers(2, 5), st.integers(2, 5))
@settings(max_examples=12, deadline=None)
def test_weight_projectors_partition_identity(n, q):
    import math
    total = np.zeros((q**n, q**n))
    for k in range(n + 1):
        p = _densify_projector(n, k, q)
        assert np.abs(p @ p - p).max() < 1e-10
        assert np.abs(p - p.T).max() < 1e-12
        assert abs(np.trace(p) - math.comb(n, k) * (q - 1)**k) < 1e-10
        total += p
    assert np.abs(total - np.eye(q**n)).max() < 1e-10


def test_weight_projector_trace_example():
    p = _densify_projector(2, 1, 3)
    assert abs(np.trace(p) - 4.0) < 1e-12


def test_kronecker_term_dims():
    terms = ed.expand_weight_projector(3, 2, 4)
    assert all(t.row_dim == 64 and t.col_dim == 64 for t in terms)
    g12 = ed.assemble_g12(ed.InstanceParams(3, 4), ed.default_alpha_profile(3))
    assert all(t.row_dim == 16 and t.col_dim == 64 for t in g12)


def test_instance_params_validation():
    with pytest.raises(ValueError):
        ed.InstanceParams(1, 4)
    with pytest.raises(ValueError):
        ed.InstanceParams(3, 1)
