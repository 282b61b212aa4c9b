"""Order algebra for the positive orthant C and the type-K cone K.

For a split ``H = {1..k}``, ``V = {k+1..n}`` the cone is

    K = {p : p_i >= 0 for i in H, p_j <= 0 for j in V}

so ``x <=_K y`` iff ``y - x`` lies in K.  Flipping the sign of the V
coordinates turns every K statement into the matching C statement, and
that is how all comparisons below are implemented.

Indices are 0-based in code; the H block is ``range(k)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

__all__ = [
    "vec",
    "ConeSplit",
    "Box",
    "OrderRel",
    "Comparison",
    "compare",
    "order_levels",
    "projection",
    "box_contains",
    "in_k_interval",
    "NONE_LEVEL",
    "EQ_LEVEL",
    "LT_LEVEL",
    "LL_LEVEL",
]

# Integer relation levels used by the vectorised helpers.
NONE_LEVEL, EQ_LEVEL, LT_LEVEL, LL_LEVEL = 0, 1, 2, 3


def vec(x, n=None) -> np.ndarray:
    """Return ``x`` as a read-only 1-D float array, rejecting NaN and inf."""
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.size == 0:
        raise DimensionError("vector must have at least one component")
    if n is not None and arr.size != n:
        raise DimensionError(f"expected {n} components, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite component in {arr.tolist()}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ConeSplit:
    """Index partition H = first ``k`` coordinates, V = the remaining ones."""

    n: int
    k: int

    def __post_init__(self):
        if self.n < 1 or not (1 <= self.k < self.n):
            raise DimensionError(f"need 1 <= k < n, got n={self.n}, k={self.k}")

    @property
    def H(self) -> range:
        return range(self.k)

    @property
    def V(self) -> range:
        return range(self.k, self.n)

    @property
    def signs(self) -> np.ndarray:
        """+1 on H, -1 on V; multiplying a difference by this maps K onto C."""
        s = np.ones(self.n)
        s[self.k:] = -1.0
        return s


@dataclass(frozen=True, eq=False)
class Box:
    """Closed box [lo, hi] in R^n."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = vec(self.lo), vec(self.hi)
        if lo.size != hi.size:
            raise DimensionError("box corners differ in dimension")
        if np.any(lo > hi):
            raise ValueError(f"box lower corner {lo.tolist()} exceeds upper {hi.tolist()}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_upper(cls, r) -> "Box":
        r = vec(r)
        return cls(np.zeros_like(r), r)

    @property
    def n(self) -> int:
        return self.lo.size

    def __eq__(self, other):
        return (isinstance(other, Box) and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))

    def __hash__(self):
        return hash((tuple(self.lo), tuple(self.hi)))

    def contains(self, x, strict_upper=False) -> bool:
        return box_contains(self, x, strict_upper)

    def axes(self, res: int) -> list[np.ndarray]:
        return [np.linspace(l, h, res) for l, h in zip(self.lo, self.hi)]

    def grid(self, res: int) -> np.ndarray:
        """All points of the uniform ``res``-per-axis grid, shape (res**n, n)."""
        mesh = np.meshgrid(*self.axes(res), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def uniform(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(size, self.n))


class OrderRel(enum.Enum):
    NONE = "NONE"
    LEQ = "LEQ"
    LT = "LT"
    LL = "LL"
    LEQ_K = "LEQ_K"
    LT_K = "LT_K"
    LL_K = "LL_K"

    def implies(self, other: "OrderRel") -> bool:
        """Strength ordering within one cone: LL => LT => LEQ."""
        chains = ([OrderRel.LL, OrderRel.LT, OrderRel.LEQ],
                  [OrderRel.LL_K, OrderRel.LT_K, OrderRel.LEQ_K])
        for chain in chains:
            if self in chain and other in chain:
                return chain.index(self) <= chain.index(other)
        return False


_C_RELS = {EQ_LEVEL: OrderRel.LEQ, LT_LEVEL: OrderRel.LT, LL_LEVEL: OrderRel.LL}
_K_RELS = {EQ_LEVEL: OrderRel.LEQ_K, LT_LEVEL: OrderRel.LT_K, LL_LEVEL: OrderRel.LL_K}


@dataclass(frozen=True)
class Comparison:
    """Strongest relation between x and y in each cone.

    ``c_sign``/``k_sign`` are +1 when x lies below y, -1 when y lies below
    x, and 0 for equality or when the pair is unordered in that cone.
    """

    c: OrderRel
    c_sign: int
    k: OrderRel
    k_sign: int

    @property
    def equal(self) -> bool:
        return self.c is OrderRel.LEQ and self.c_sign == 0

    def label(self) -> str:
        if self.equal:
            return "EQ"
        parts = []
        for rel, sign in ((self.c, self.c_sign), (self.k, self.k_sign)):
            if rel not in (OrderRel.NONE,):
                parts.append(f"{rel.value}{'+' if sign > 0 else '-'}")
        return ",".join(parts) or "NONE"


def order_levels(d, tol=0.0):
    """Classify differences ``d = y - x`` (shape (..., n)) in the C-order.

    Returns ``(level, sign)`` integer arrays; level is one of NONE_LEVEL,
    EQ_LEVEL, LT_LEVEL, LL_LEVEL.  A component counts as zero when its
    magnitude is at most ``tol``.
    """
    d = np.asarray(d, dtype=float)
    pos = d > tol
    neg = d < -tol
    any_pos, any_neg = pos.any(-1), neg.any(-1)
    all_pos, all_neg = pos.all(-1), neg.all(-1)
    level = np.full(d.shape[:-1], NONE_LEVEL, dtype=int)
    sign = np.zeros(d.shape[:-1], dtype=int)
    eq = ~any_pos & ~any_neg
    up = any_pos & ~any_neg
    down = any_neg & ~any_pos
    level[eq] = EQ_LEVEL
    level[up] = np.where(all_pos[up], LL_LEVEL, LT_LEVEL)
    sign[up] = 1
    level[down] = np.where(all_neg[down], LL_LEVEL, LT_LEVEL)
    sign[down] = -1
    return level, sign


def compare(x, y, split: ConeSplit, tol: float = 0.0) -> Comparison:
    """Strongest C- and K-order relations between ``x`` and ``y``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    x, y = vec(x), vec(y)
    if x.size != split.n or y.size != split.n:
        raise DimensionError(f"vectors of size {x.size}, {y.size} for split of dimension {split.n}")
    d = y - x
    c_level, c_sign = order_levels(d, tol)
    k_level, k_sign = order_levels(d * split.signs, tol)
    c_level, c_sign, k_level, k_sign = int(c_level), int(c_sign), int(k_level), int(k_sign)
    return Comparison(
        c=_C_RELS.get(c_level, OrderRel.NONE), c_sign=c_sign,
        k=_K_RELS.get(k_level, OrderRel.NONE), k_sign=k_sign,
    )


def projection(x, side: str, split: ConeSplit) -> np.ndarray:
    """Projection of ``x`` onto C_H (``side="H"``) or C_V (``side="V"``)."""
    x = vec(x, split.n)
    out = np.zeros_like(x)
    idx = {"H": split.H, "V": split.V}[side.upper()]
    out[idx.start:idx.stop] = x[idx.start:idx.stop]
    out.setflags(write=False)
    return out


def box_contains(b: Box, x, strict_upper: bool = False) -> bool:
    x = vec(x)
    if x.size != b.n:
        raise DimensionError("point and box differ in dimension")
    if np.any(x < b.lo):
        return False
    return bool(np.all(x < b.hi) if strict_upper else np.all(x <= b.hi))


def in_k_interval(lo, hi, z, split: ConeSplit) -> bool:
    """Membership of ``z`` in [lo, hi]_K = {z in C : lo <=_K z <=_K hi}.

    Degenerate intervals (lo == hi) are allowed.
    """
    lo, hi, z = vec(lo, split.n), vec(hi, split.n), vec(z, split.n)
    s = split.signs
    return bool(np.all(z >= 0) and np.all((z - lo) * s >= 0) and np.all((hi - z) * s >= 0))
