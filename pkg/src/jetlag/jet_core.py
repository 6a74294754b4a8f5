"""Index conventions, jet points, and dense d-tensor storage.

Coordinates on the first-order jet space of maps T -> M are (t^a, x^i, v^i_a)
with a = 0..p-1 temporal and i = 0..n-1 spatial (0-based throughout the
library; the expression language uses the 1-based surface syntax t1, x1,
v1_1).  A vertical index is a joint (spatial, temporal) pair stored flattened
as i*p + a.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractionError, DimensionError


@dataclass(frozen=True)
class Dims:
    """Dimensions (p, n) of the temporal and spatial factors."""

    p: int
    n: int

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise DimensionError(f"dims must be positive, got p={self.p}, n={self.n}")

    @property
    def vertical(self) -> int:
        return self.n * self.p


@dataclass(frozen=True)
class JetPoint:
    """A point (t, x, v) of the jet space; v[i][a] is the velocity v^i_a.

    Entries are ordinarily floats but the container is deliberately agnostic
    so derivative scalars can flow through the same evaluation code.
    """

    t: tuple
    x: tuple
    v: tuple  # tuple of n rows, each a tuple of p entries

    def __init__(self, t, x, v):
        object.__setattr__(self, "t", tuple(t))
        object.__setattr__(self, "x", tuple(x))
        object.__setattr__(self, "v", tuple(tuple(row) for row in v))
        for group in (self.t, self.x) + self.v:
            for entry in group:
                if isinstance(entry, (int, float)) and not math.isfinite(entry):
                    raise DimensionError("jet point entries must be finite")

    @property
    def dims(self) -> Dims:
        return Dims(p=len(self.t), n=len(self.x))

    def coord(self, c) -> object:
        """Value of coordinate ``c`` (a Coord from the calculus module)."""
        kind, i, a = c
        if kind == "t":
            return self.t[a]
        if kind == "x":
            return self.x[i]
        return self.v[i][a]

    def replace_coord(self, c, value) -> "JetPoint":
        kind, i, a = c
        t, x, v = list(self.t), list(self.x), [list(r) for r in self.v]
        if kind == "t":
            t[a] = value
        elif kind == "x":
            x[i] = value
        else:
            v[i][a] = value
        return JetPoint(t, x, v)


def zero_velocity_point(t, x, dims: Dims) -> JetPoint:
    return JetPoint(tuple(t), tuple(x), tuple((0.0,) * dims.p for _ in range(dims.n)))


def raw_point(t: tuple, x: tuple, v: tuple) -> JetPoint:
    """Internal fast constructor: entries must already be tuples and are not
    re-validated (used by the derivative lifts on hot paths)."""
    pt = object.__new__(JetPoint)
    object.__setattr__(pt, "t", t)
    object.__setattr__(pt, "x", x)
    object.__setattr__(pt, "v", v)
    return pt


class SlotKind(enum.Enum):
    TEMPORAL_UPPER = "temporal_upper"
    TEMPORAL_LOWER = "temporal_lower"
    SPATIAL_UPPER = "spatial_upper"
    SPATIAL_LOWER = "spatial_lower"
    VERTICAL_UPPER = "vertical_upper"
    VERTICAL_LOWER = "vertical_lower"

    @property
    def is_upper(self) -> bool:
        return self in (
            SlotKind.TEMPORAL_UPPER,
            SlotKind.SPATIAL_UPPER,
            SlotKind.VERTICAL_UPPER,
        )

    @property
    def family(self) -> str:
        return self.value.rsplit("_", 1)[0]


@dataclass(frozen=True)
class IndexSlot:
    """One tensor index with its valence and extent.

    Vertical slots have extent n*p and are addressed either by a flat index
    or by an (i, a) pair; the pair flattens as i*p + a.
    """

    kind: SlotKind
    n: int = 0
    p: int = 0

    def __post_init__(self):
        fam = self.kind.family
        if fam == "temporal" and self.p < 1:
            raise DimensionError("temporal slot needs p >= 1")
        if fam == "spatial" and self.n < 1:
            raise DimensionError("spatial slot needs n >= 1")
        if fam == "vertical" and (self.n < 1 or self.p < 1):
            raise DimensionError("vertical slot needs n, p >= 1")

    @property
    def extent(self) -> int:
        fam = self.kind.family
        if fam == "temporal":
            return self.p
        if fam == "spatial":
            return self.n
        return self.n * self.p

    def flatten(self, idx) -> int:
        """Normalize an index for this slot to a flat integer."""
        if isinstance(idx, tuple):
            if self.kind.family != "vertical" or len(idx) != 2:
                raise DimensionError(f"pair index {idx} on non-vertical slot")
            i, a = idx
            if not (0 <= i < self.n and 0 <= a < self.p):
                raise DimensionError(f"vertical index {idx} out of range")
            return i * self.p + a
        if not 0 <= idx < self.extent:
            raise DimensionError(f"index {idx} out of range for extent {self.extent}")
        return idx


def temporal_upper(p):
    return IndexSlot(SlotKind.TEMPORAL_UPPER, p=p)


def temporal_lower(p):
    return IndexSlot(SlotKind.TEMPORAL_LOWER, p=p)


def spatial_upper(n):
    return IndexSlot(SlotKind.SPATIAL_UPPER, n=n)


def spatial_lower(n):
    return IndexSlot(SlotKind.SPATIAL_LOWER, n=n)


def vertical_upper(n, p):
    return IndexSlot(SlotKind.VERTICAL_UPPER, n=n, p=p)


def vertical_lower(n, p):
    return IndexSlot(SlotKind.VERTICAL_LOWER, n=n, p=p)


_OPPOSITE = {
    SlotKind.TEMPORAL_UPPER: SlotKind.TEMPORAL_LOWER,
    SlotKind.TEMPORAL_LOWER: SlotKind.TEMPORAL_UPPER,
    SlotKind.SPATIAL_UPPER: SlotKind.SPATIAL_LOWER,
    SlotKind.SPATIAL_LOWER: SlotKind.SPATIAL_UPPER,
    SlotKind.VERTICAL_UPPER: SlotKind.VERTICAL_LOWER,
    SlotKind.VERTICAL_LOWER: SlotKind.VERTICAL_UPPER,
}


@dataclass
class DTensor:
    """Dense multi-index array with declared slot valences.

    Values are immutable by convention once construction finishes; the numpy
    buffer is shared read-only across threads.
    """

    slots: tuple
    data: np.ndarray = field(repr=False)

    def __init__(self, slots, data=None):
        slots = tuple(slots)
        if not slots:
            raise DimensionError("a tensor needs at least one slot")
        shape = tuple(s.extent for s in slots)
        if any(e < 1 for e in shape):
            raise DimensionError(f"zero-extent slot in {shape}")
        if data is None:
            data = np.zeros(shape, dtype=float)
        else:
            data = np.asarray(data, dtype=float)
            if data.shape != shape:
                raise DimensionError(f"data shape {data.shape} != slot shape {shape}")
        self.slots = slots
        self.data = data

    @property
    def shape(self):
        return self.data.shape

    def _flat_index(self, idx):
        if len(idx) != len(self.slots):
            raise DimensionError(f"expected {len(self.slots)} indices, got {len(idx)}")
        return tuple(s.flatten(i) for s, i in zip(self.slots, idx))

    def get(self, *idx) -> float:
        return float(self.data[self._flat_index(idx)])

    def set(self, idx, value) -> None:
        self.data[self._flat_index(tuple(idx))] = float(value)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.data)))

    def to_json_dict(self) -> dict:
        entries = {}
        for idx in np.ndindex(self.shape):
            entries[",".join(str(i) for i in idx)] = float(self.data[idx])
        return {
            "slots": [s.kind.value for s in self.slots],
            "shape": list(self.shape),
            "entries": entries,
        }


def tensor_new(slots) -> DTensor:
    """Zero tensor over the given slots."""
    return DTensor(slots)


def contract(a: DTensor, b: DTensor, pairs) -> DTensor:
    """Contract ``a`` with ``b`` over the given (slot-of-a, slot-of-b) pairs.

    Paired slots must belong to the same index family with opposite variance
    and equal extent.  Result slots are the unpaired slots of ``a`` followed
    by those of ``b``.
    """
    axes_a, axes_b = [], []
    for sa, sb in pairs:
        if not (0 <= sa < len(a.slots) and 0 <= sb < len(b.slots)):
            raise ContractionError(f"slot pair ({sa}, {sb}) out of range")
        ka, kb = a.slots[sa].kind, b.slots[sb].kind
        if _OPPOSITE[ka] is not kb:
            raise ContractionError(f"variance mismatch: {ka.value} with {kb.value}")
        if a.slots[sa].extent != b.slots[sb].extent:
            raise ContractionError(
                f"extent mismatch: {a.slots[sa].extent} != {b.slots[sb].extent}"
            )
        axes_a.append(sa)
        axes_b.append(sb)
    if len(set(axes_a)) != len(axes_a) or len(set(axes_b)) != len(axes_b):
        raise ContractionError("a slot may appear in at most one pair")

    out = np.tensordot(a.data, b.data, axes=(axes_a, axes_b))
    free = [s for i, s in enumerate(a.slots) if i not in axes_a]
    free += [s for i, s in enumerate(b.slots) if i not in axes_b]
    if not free:
        # Full contraction: keep the scalar as a rank-one singleton so the
        # result type stays uniform; callers use .scalar() to unwrap.
        result = DTensor((temporal_upper(1),), np.array([float(out)]))
        return result
    return DTensor(free, out)


def scalar_of(t: DTensor) -> float:
    """Unwrap a fully contracted (singleton) tensor."""
    if t.data.size != 1:
        raise DimensionError("tensor is not a scalar")
    return float(t.data.reshape(-1)[0])
