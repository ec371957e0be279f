"""Assembly of the stacked collision-block operator and its variants.

The operator consists of C(n,2) blocks, one per unordered coordinate pair
{a,b}.  Within a block, rows are indexed by (collision value, remaining n-2
symbols in increasing coordinate order), linearized row-major with the
collision value leading; columns are indexed by full strings y in [q]^n in
natural row-major order.  The {a,b} block is the coordinate-permuted image of
the {1,2} block (a <- 1, b <- 2, remaining coordinates in increasing order).

Variants: the coordinate-1 surrogate (every factor replaced by its collapsed
image so that the masked operators agree entrywise), per-coordinate Hadamard
masks, and the restriction to legal rows and columns.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .limits import ResourceLimitError, VEC_LIMIT_DEFAULT
from .scheme import (
    E_FAMILY,
    F_FAMILY,
    InstanceParams,
    KroneckerTerm,
    MaskSlot,
    Role,
    make_term,
    mask_role,
)

Array = np.ndarray

KIND_GAMMA_PRIME = "gamma_prime"
KIND_SURROGATE = "gamma_prime_surrogate"
KIND_MASKED = "hadamard_masked"
KIND_GAMMA = "gamma"
KIND_GAMMA_MASKED = "gamma_masked"


@dataclass(frozen=True)
class AlphaProfile:
    """Non-negative block-mixing coefficients alpha_0 .. alpha_{n-2}."""

    alphas: tuple[float, ...]
    r: float

    def __post_init__(self):
        if any(a < 0 for a in self.alphas):
            raise ValueError("alpha coefficients must be non-negative")

    @property
    def alpha0(self) -> float:
        return self.alphas[0]


def default_alpha_profile(n: int) -> AlphaProfile:
    """Linearly decaying profile alpha_k = max(0, n^{-1/3} - k/n).

    The slope 1/n and the cap alpha_0 = n^{-1/3} satisfy both norm
    constraints (alpha_k <= 1/sqrt(k+1) and alpha_k - alpha_{k+1} <= 1/n),
    with the cutoff near r = n^{2/3}.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got n={n}")
    a0 = n ** (-1.0 / 3.0)
    alphas = tuple(max(0.0, a0 - k / n) for k in range(n - 1))
    return AlphaProfile(alphas, n ** (2.0 / 3.0))


def ramp_alpha_profile(n: int, r: int) -> AlphaProfile:
    """Ramp profile alpha_k = c * max(0, r - k) with the largest feasible c."""
    if n < 2:
        raise ValueError(f"need n >= 2, got n={n}")
    if not 1 <= r <= n:
        raise ValueError(f"cutoff r={r} outside [1, {n}]")
    c = 1.0 / n
    for k in range(min(r, n - 1)):
        c = min(c, 1.0 / ((r - k) * math.sqrt(k + 1.0)))
    alphas = tuple(c * max(0, r - k) for k in range(n - 1))
    return AlphaProfile(alphas, float(r))


def grid_alpha_profiles(n: int) -> list[AlphaProfile]:
    """Candidate ramp profiles for an empirical search over the cutoff."""
    return [ramp_alpha_profile(n, r) for r in range(1, n + 1)]


def alpha_profile_from_values(values, r: float = float("nan")) -> AlphaProfile:
    return AlphaProfile(tuple(float(v) for v in values), r)


@dataclass(frozen=True)
class CollisionPair:
    """Unordered coordinate pair {a, b}, stored with a < b, 1-based."""

    a: int
    b: int

    def __post_init__(self):
        if not 1 <= self.a < self.b:
            raise ValueError(f"need 1 <= a < b, got ({self.a}, {self.b})")

    def rest(self, n: int) -> tuple[int, ...]:
        return tuple(c for c in range(1, n + 1) if c not in (self.a, self.b))


def all_pairs(n: int) -> tuple[CollisionPair, ...]:
    return tuple(
        CollisionPair(a, b)
        for a, b in itertools.combinations(range(1, n + 1), 2)
    )


@dataclass(eq=False)
class BlockOperator:
    """Stack of C(n,2) collision blocks, each a sum of Kronecker terms.

    Optional row/column selections restrict to legal indices; rows of every
    block share one selection because legality of a row does not depend on
    the collision pair once the collision value is collapsed.
    """

    params: InstanceParams
    kind: str
    blocks: tuple[tuple[CollisionPair, tuple[KroneckerTerm, ...]], ...]
    masked_coordinate: Optional[int] = None
    row_selection: Optional[Array] = None
    col_selection: Optional[Array] = None
    _plan: object = field(default=None, repr=False, compare=False)

    @property
    def block_rows_full(self) -> int:
        return self.params.q ** (self.params.n - 1)

    @property
    def cols_full(self) -> int:
        return self.params.q ** self.params.n


def count_dimensions(op: BlockOperator) -> tuple[int, int]:
    """Exact (rows, cols) of the operator, honoring selections."""
    per_block = (
        op.block_rows_full if op.row_selection is None
        else int(op.row_selection.size)
    )
    cols = (
        op.cols_full if op.col_selection is None
        else int(op.col_selection.size)
    )
    return len(op.blocks) * per_block, cols


def _check_vec_limit(params: InstanceParams, vec_limit: int) -> None:
    if params.q ** params.n > vec_limit:
        raise ResourceLimitError(
            "column index space", params.q ** params.n, vec_limit
        )


def assemble_g12(params: InstanceParams, alpha: AlphaProfile) -> tuple[KroneckerTerm, ...]:
    """Terms of the {1,2} block: sum over k of alpha_k * F (x) E_k^{(n-2)}.

    The F factor occupies column coordinates (1, 2) with the row coordinate
    collapsed to the single collision value.  Coefficients with alpha_k = 0
    contribute no terms.  For n = 2 the block is the single term alpha_0 * F.
    """
    n, q = params.n, params.q
    if len(alpha.alphas) != n - 1:
        raise ValueError(
            f"profile length {len(alpha.alphas)} does not match n-1={n - 1}"
        )
    f_slot: tuple = ((1, 2), Role.F)
    if n == 2:
        return (make_term(alpha.alphas[0], (f_slot,), q),)
    terms = []
    rest = tuple(range(3, n + 1))
    for k in range(n - 1):
        a_k = alpha.alphas[k]
        if a_k == 0.0 or k > n - 2:
            continue
        for ones in itertools.combinations(rest, k):
            chosen = set(ones)
            slots = (f_slot,) + tuple(
                ((c,), Role.E1 if c in chosen else Role.E0) for c in rest
            )
            terms.append(make_term(a_k, slots, q))
    return tuple(terms)


def permute_block(
    terms: tuple[KroneckerTerm, ...], pair: CollisionPair, n: int
) -> tuple[KroneckerTerm, ...]:
    """Relabel coordinates of {1,2}-block terms so the pair moves to {a,b}.

    Coordinate 1 maps to a, 2 to b, and the remaining coordinates map to the
    remaining coordinates of the target block in increasing order.
    """
    if pair == CollisionPair(1, 2):
        return terms
    rest_new = pair.rest(n)
    relabel = {1: pair.a, 2: pair.b}
    relabel.update({old: new for old, new in zip(range(3, n + 1), rest_new)})
    out = []
    for t in terms:
        slots = tuple(
            (tuple(relabel[c] for c in coords), role)
            for coords, role in t.slots
        )
        out.append(KroneckerTerm(t.coefficient, slots, t.row_dim, t.col_dim))
    return tuple(out)


def _stack(params, g12_terms, kind, vec_limit) -> BlockOperator:
    _check_vec_limit(params, vec_limit)
    blocks = tuple(
        (pair, permute_block(g12_terms, pair, params.n))
        for pair in all_pairs(params.n)
    )
    return BlockOperator(params, kind, blocks)


def stack_gamma_prime(
    params: InstanceParams,
    alpha: AlphaProfile,
    vec_limit: int = VEC_LIMIT_DEFAULT,
) -> BlockOperator:
    """Full stacked operator in lexicographic pair order (1,2), (1,3), ..."""
    return _stack(params, assemble_g12(params, alpha), KIND_GAMMA_PRIME, vec_limit)


def single_part_stack(
    params: InstanceParams,
    k: int,
    role: Role,
    coefficient: float = 1.0,
    vec_limit: int = VEC_LIMIT_DEFAULT,
) -> BlockOperator:
    """Stack built from a single F-part and a single weight: role (x) E_k^{(n-2)}.

    Used to measure the per-part Gram spectra against their closed forms.
    """
    n, q = params.n, params.q
    if role not in F_FAMILY:
        raise ValueError(f"part role must be F-family, got {role.value}")
    if not 0 <= k <= n - 2:
        raise ValueError(f"weight k={k} outside [0, {n - 2}]")
    f_slot = ((1, 2), role)
    rest = tuple(range(3, n + 1))
    terms = []
    for ones in itertools.combinations(rest, k):
        chosen = set(ones)
        slots = (f_slot,) + tuple(
            ((c,), Role.E1 if c in chosen else Role.E0) for c in rest
        )
        terms.append(make_term(coefficient, slots, q))
    return _stack(params, tuple(terms), KIND_GAMMA_PRIME, vec_limit)


def _surrogate_term(term: KroneckerTerm, pair: CollisionPair) -> KroneckerTerm:
    """Coordinate-1 surrogate of one block term.

    Blocks whose pair contains coordinate 1 (necessarily a = 1) get the
    collapsed F image; in all other blocks the coordinate-1 factor maps
    E0 -> E0 and E1 -> -E0.
    """
    coeff = term.coefficient
    slots = []
    for coords, role in term.slots:
        if pair.a == 1 and coords == (pair.a, pair.b):
            if role is not Role.F:
                raise ValueError(
                    f"surrogate defined for F blocks only, got {role.value}"
                )
            slots.append((coords, Role.F_DELTA1_IMAGE))
        elif coords == (1,):
            if role is Role.E1:
                coeff = -coeff
            slots.append((coords, Role.E0))
        else:
            slots.append((coords, role))
    return KroneckerTerm(coeff, tuple(slots), term.row_dim, term.col_dim)


def build_surrogate_gamma1(
    params: InstanceParams,
    alpha: AlphaProfile,
    vec_limit: int = VEC_LIMIT_DEFAULT,
) -> BlockOperator:
    """Surrogate agreeing with the stacked operator wherever x_1 != y_1."""
    base = stack_gamma_prime(params, alpha, vec_limit)
    blocks = tuple(
        (pair, tuple(_surrogate_term(t, pair) for t in terms))
        for pair, terms in base.blocks
    )
    return BlockOperator(params, KIND_SURROGATE, blocks)


def hadamard_mask(op: BlockOperator, i: int) -> BlockOperator:
    """Entrywise product with the coordinate-i inequality pattern.

    Masking acts factor by factor: blocks not containing i mask the E factor
    at coordinate i; blocks with i = a (resp. i = b) mask the F factor on its
    first (resp. second) column slot.  Masking twice with the same i is a
    no-op; term count is unchanged.
    """
    n = op.params.n
    if not 1 <= i <= n:
        raise ValueError(f"coordinate i={i} outside [1, {n}]")
    if op.row_selection is not None or op.col_selection is not None:
        raise ValueError("mask before restricting to legal indices")
    blocks = []
    for pair, terms in op.blocks:
        if i == pair.a:
            slot_kind = MaskSlot.F_SLOT1
        elif i == pair.b:
            slot_kind = MaskSlot.F_SLOT2
        else:
            slot_kind = MaskSlot.COLUMN
        new_terms = []
        for t in terms:
            slots = []
            for coords, role in t.slots:
                if slot_kind is MaskSlot.COLUMN:
                    if coords == (i,):
                        role = mask_role(role, slot_kind)
                elif coords == (pair.a, pair.b):
                    role = mask_role(role, slot_kind)
                slots.append((coords, role))
            new_terms.append(
                KroneckerTerm(t.coefficient, tuple(slots), t.row_dim, t.col_dim)
            )
        blocks.append((pair, tuple(new_terms)))
    return BlockOperator(op.params, KIND_MASKED, tuple(blocks),
                         masked_coordinate=i)


@lru_cache(maxsize=32)
def _distinct_tuple_indices(length: int, q: int) -> Array:
    """Indices of [q]^length tuples (row-major) whose symbols are pairwise distinct."""
    total = q ** length
    digits = np.empty((total, length), dtype=np.int32)
    idx = np.arange(total)
    for pos in range(length - 1, -1, -1):
        digits[:, pos] = idx % q
        idx = idx // q
    ok = np.ones(total, dtype=bool)
    for ipos, jpos in itertools.combinations(range(length), 2):
        ok &= digits[:, ipos] != digits[:, jpos]
    out = np.flatnonzero(ok)
    out.setflags(write=False)
    return out


def legal_column_indices(params: InstanceParams) -> Array:
    """Column indices whose n symbols are pairwise distinct (empty if q < n)."""
    return _distinct_tuple_indices(params.n, params.q)


def legal_row_indices(params: InstanceParams) -> Array:
    """Within-block row indices (collision value, rest) with all n-1 symbols distinct.

    The same index set is legal for every block: a row is legal iff the
    collision value differs from every remaining symbol and the remaining
    symbols are pairwise distinct.
    """
    return _distinct_tuple_indices(params.n - 1, params.q)


def restrict_to_legal(op: BlockOperator) -> BlockOperator:
    """Attach legality selections, turning the stack into a submatrix.

    A q < n instance yields an empty column set; that is reported by the
    dimensions, not raised.
    """
    if op.kind not in (KIND_GAMMA_PRIME, KIND_MASKED):
        raise ValueError(f"cannot restrict operator of kind {op.kind}")
    kind = KIND_GAMMA if op.kind == KIND_GAMMA_PRIME else KIND_GAMMA_MASKED
    return BlockOperator(
        op.params,
        kind,
        op.blocks,
        masked_coordinate=op.masked_coordinate,
        row_selection=legal_row_indices(op.params),
        col_selection=legal_column_indices(op.params),
    )


def select_blocks(
    op: BlockOperator, keep: Callable[[CollisionPair], bool]
) -> BlockOperator:
    """Operator consisting of the subset of blocks whose pair satisfies keep."""
    blocks = tuple((p, t) for p, t in op.blocks if keep(p))
    if not blocks:
        raise ValueError("block selection is empty")
    return BlockOperator(
        op.params, op.kind, blocks,
        masked_coordinate=op.masked_coordinate,
        row_selection=op.row_selection,
        col_selection=op.col_selection,
    )


def first_coordinate_blocks(op: BlockOperator) -> BlockOperator:
    """The submatrix formed by the blocks whose pair contains coordinate 1."""
    return select_blocks(op, lambda p: p.a == 1)


def dense_delta_pattern(
    params: InstanceParams, pair: CollisionPair, i: int
) -> Array:
    """Dense 0/1 coordinate-i inequality pattern for one block (test-size only)."""
    n, q = params.n, params.q
    if not 1 <= i <= n:
        raise ValueError(f"coordinate i={i} outside [1, {n}]")
    rows = q ** (n - 1)
    cols = q ** n
    if i in (pair.a, pair.b):
        row_sym = np.arange(rows) // q ** (n - 2)
    else:
        rest = pair.rest(n)
        pos = rest.index(i)
        row_sym = (np.arange(rows) // q ** (n - 2 - pos - 1)) % q
    col_sym = (np.arange(cols) // q ** (n - i)) % q
    return (row_sym[:, None] != col_sym[None, :]).astype(np.float64)
