"""Resource guards shared by the builder and the spectral engine."""

DENSE_LIMIT_DEFAULT = 40_000_000
"""Maximum number of entries a dense materialization may allocate."""

VEC_LIMIT_DEFAULT = 2**28
"""Maximum column dimension for iteration vectors in matrix-free solves."""


class ResourceLimitError(RuntimeError):
    """A requested computation exceeds a configured size guard."""

    def __init__(self, what: str, needed: int, limit: int):
        super().__init__(f"{what} requires {needed} > limit {limit}")
        self.what = what
        self.needed = needed
        self.limit = limit
