"""Factor matrices of the Hamming association scheme on [q]^n.

Builds the per-coordinate projectors E0 (rank-one averaging) and E1 = I - E0,
the q x q^2 collision-pair operators F0, F1, F = F0 + F1, and their masked or
collapsed variants, all from entrywise formulas.  Weight-k projectors on
[q]^m are expanded into sums of Kronecker terms over E0/E1 patterns.

Every operator here is basis independent: no eigenbasis of the scheme is
materialized outside the test suite.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

Array = np.ndarray


class Role(str, Enum):
    """Identities of the small dense factors appearing in Kronecker terms."""

    E0 = "E0"
    E1 = "E1"
    F0 = "F0"
    F1 = "F1"
    F = "F"
    E0_MASKED = "E0_masked"
    E1_MASKED = "E1_masked"
    F_MASKED_SLOT1 = "F_masked_slot1"
    F_MASKED_SLOT2 = "F_masked_slot2"
    F_DELTA1_IMAGE = "F_delta1_image"


E_FAMILY = frozenset(
    {Role.E0, Role.E1, Role.E0_MASKED, Role.E1_MASKED}
)
F_FAMILY = frozenset(
    {Role.F0, Role.F1, Role.F, Role.F_MASKED_SLOT1, Role.F_MASKED_SLOT2,
     Role.F_DELTA1_IMAGE}
)


class MaskSlot(str, Enum):
    """Which index of a factor a coordinate inequality mask applies to."""

    COLUMN = "column"
    F_SLOT1 = "f_slot1"
    F_SLOT2 = "f_slot2"


@dataclass(frozen=True)
class InstanceParams:
    """Problem size: strings of length n over an alphabet of q symbols."""

    n: int
    q: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need n >= 2, got n={self.n}")
        if self.q < 2:
            raise ValueError(f"need q >= 2, got q={self.q}")


@dataclass(frozen=True, eq=False)
class FactorMatrix:
    """A small dense factor (q x q or q x q^2) tagged with its role."""

    role: Role
    rows: int
    cols: int
    entries: Array

    def __post_init__(self):
        if self.entries.shape != (self.rows, self.cols):
            raise ValueError("entry array shape disagrees with declared dims")


def _check_q(q: int) -> None:
    if q < 2:
        raise ValueError(f"need alphabet size q >= 2, got q={q}")


def _freeze(entries: Array) -> Array:
    entries.setflags(write=False)
    return entries


def build_e0(q: int) -> FactorMatrix:
    """Rank-one averaging projector: every entry 1/q."""
    _check_q(q)
    return FactorMatrix(Role.E0, q, q, _freeze(np.full((q, q), 1.0 / q)))


def build_e1(q: int) -> FactorMatrix:
    """Complement projector I - E0: diagonal 1 - 1/q, off-diagonal -1/q."""
    _check_q(q)
    entries = np.full((q, q), -1.0 / q)
    np.fill_diagonal(entries, 1.0 - 1.0 / q)
    return FactorMatrix(Role.E1, q, q, _freeze(entries))


def build_f0(q: int) -> FactorMatrix:
    """Constant q x q^2 operator with every entry q^{-3/2}.

    Columns are indexed by pairs (y1, y2) in row-major order y1*q + y2.
    """
    _check_q(q)
    return FactorMatrix(
        Role.F0, q, q * q, _freeze(np.full((q, q * q), q ** -1.5))
    )


def build_f1(q: int) -> FactorMatrix:
    """Collision-pair operator: entry (x, (y1, y2)) is (E1[x,y1] + E1[x,y2]) / sqrt(q)."""
    _check_q(q)
    e1 = build_e1(q).entries
    entries = (e1[:, :, None] + e1[:, None, :]).reshape(q, q * q) / math.sqrt(q)
    return FactorMatrix(Role.F1, q, q * q, _freeze(entries))


def build_f(q: int) -> FactorMatrix:
    """Entrywise sum F = F0 + F1."""
    _check_q(q)
    entries = build_f0(q).entries + build_f1(q).entries
    return FactorMatrix(Role.F, q, q * q, _freeze(entries))


def delta1_image_of_f(q: int) -> FactorMatrix:
    """Replacement for F agreeing with it on all entries with x != y1.

    Entry (x, (y1, y2)) = E1[x, y2] / sqrt(q), independent of y1.
    """
    _check_q(q)
    e1 = build_e1(q).entries
    entries = np.broadcast_to(e1[:, None, :], (q, q, q)).reshape(q, q * q)
    entries = entries / math.sqrt(q)
    return FactorMatrix(Role.F_DELTA1_IMAGE, q, q * q, _freeze(entries))


# Role transitions under a coordinate inequality mask.  Masking is idempotent;
# combinations outside this table (e.g. masking both F slots) have no role
# name and are rejected.
_MASK_TRANSITIONS = {
    (Role.E0, MaskSlot.COLUMN): Role.E0_MASKED,
    (Role.E1, MaskSlot.COLUMN): Role.E1_MASKED,
    (Role.E0_MASKED, MaskSlot.COLUMN): Role.E0_MASKED,
    (Role.E1_MASKED, MaskSlot.COLUMN): Role.E1_MASKED,
    (Role.F, MaskSlot.F_SLOT1): Role.F_MASKED_SLOT1,
    (Role.F, MaskSlot.F_SLOT2): Role.F_MASKED_SLOT2,
    (Role.F_MASKED_SLOT1, MaskSlot.F_SLOT1): Role.F_MASKED_SLOT1,
    (Role.F_MASKED_SLOT2, MaskSlot.F_SLOT2): Role.F_MASKED_SLOT2,
}


def mask_role(role: Role, slot: MaskSlot) -> Role:
    """Masked counterpart of a role, or ValueError if the combination has none."""
    try:
        return _MASK_TRANSITIONS[(role, slot)]
    except KeyError:
        raise ValueError(f"role {role.value} cannot be masked on {slot.value}")


def mask_factor(factor: FactorMatrix, slot: MaskSlot) -> FactorMatrix:
    """Entrywise product of a factor with the 0/1 symbol-inequality pattern.

    For E-family factors the mask zeroes the diagonal; for F-family factors
    it zeroes entries where the row symbol equals the first (F_SLOT1) or the
    second (F_SLOT2) symbol of the column pair.
    """
    role = mask_role(factor.role, slot)
    q = factor.rows
    entries = factor.entries.copy()
    if slot is MaskSlot.COLUMN:
        np.fill_diagonal(entries, 0.0)
    else:
        e3 = entries.reshape(q, q, q)
        idx = np.arange(q)
        if slot is MaskSlot.F_SLOT1:
            e3[idx, idx, :] = 0.0
        else:
            e3[idx, :, idx] = 0.0
        entries = e3.reshape(q, q * q)
    return FactorMatrix(role, factor.rows, factor.cols, _freeze(entries))


@lru_cache(maxsize=None)
def factor(role: Role, q: int) -> FactorMatrix:
    """Build (and cache) the dense factor for a role at alphabet size q."""
    if role is Role.E0:
        return build_e0(q)
    if role is Role.E1:
        return build_e1(q)
    if role is Role.F0:
        return build_f0(q)
    if role is Role.F1:
        return build_f1(q)
    if role is Role.F:
        return build_f(q)
    if role is Role.F_DELTA1_IMAGE:
        return delta1_image_of_f(q)
    if role is Role.E0_MASKED:
        return mask_factor(build_e0(q), MaskSlot.COLUMN)
    if role is Role.E1_MASKED:
        return mask_factor(build_e1(q), MaskSlot.COLUMN)
    if role is Role.F_MASKED_SLOT1:
        return mask_factor(build_f(q), MaskSlot.F_SLOT1)
    if role is Role.F_MASKED_SLOT2:
        return mask_factor(build_f(q), MaskSlot.F_SLOT2)
    raise ValueError(f"unknown role {role}")


@dataclass(frozen=True)
class WeightPattern:
    """Assignment of E0 (bit 0) / E1 (bit 1) factors to coordinates."""

    bits: tuple[int, ...]

    @property
    def weight(self) -> int:
        return sum(self.bits)


# A slot assigns a factor role to one coordinate (E family) or to an ordered
# pair of column coordinates (F family).  Coordinates are 1-based.
Slot = tuple[tuple[int, ...], Role]


@dataclass(frozen=True)
class KroneckerTerm:
    """One scalar-weighted Kronecker product of factors over coordinates."""

    coefficient: float
    slots: tuple[Slot, ...]
    row_dim: int
    col_dim: int

    def scaled(self, c: float) -> "KroneckerTerm":
        return KroneckerTerm(self.coefficient * c, self.slots,
                             self.row_dim, self.col_dim)


def term_dims(slots: tuple[Slot, ...], q: int) -> tuple[int, int]:
    rows = cols = 1
    for coords, role in slots:
        if role in E_FAMILY:
            rows *= q
            cols *= q
        else:
            rows *= q
            cols *= q * q
        expected = 2 if role in F_FAMILY else 1
        if len(coords) != expected:
            raise ValueError(f"role {role.value} covers {expected} coordinate(s)")
    return rows, cols


def make_term(coefficient: float, slots: tuple[Slot, ...], q: int) -> KroneckerTerm:
    rows, cols = term_dims(slots, q)
    return KroneckerTerm(coefficient, slots, rows, cols)


def expand_weight_projector(n_coords: int, k: int, q: int) -> list[KroneckerTerm]:
    """All C(n_coords, k) Kronecker terms whose sum is the weight-k projector.

    Each term has coefficient 1, E1 at the k chosen coordinates and E0
    elsewhere.
    """
    _check_q(q)
    if not 0 <= k <= n_coords:
        raise ValueError(f"weight k={k} outside range [0, {n_coords}]")
    terms = []
    for ones in itertools.combinations(range(1, n_coords + 1), k):
        chosen = set(ones)
        slots = tuple(
            ((c,), Role.E1 if c in chosen else Role.E0)
            for c in range(1, n_coords + 1)
        )
        terms.append(make_term(1.0, slots, q))
    return terms
