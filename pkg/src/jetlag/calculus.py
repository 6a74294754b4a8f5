"""First and second partials of scalar fields on the jet space.

Derivatives are exact (to roundoff) forward directional derivatives, not
difference quotients: a single evaluation of the field on a seeded scalar
kind yields the requested partial.  Central finite differences exist only to
cross-check the forward values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import DimensionError
from .jet_core import Dims, JetPoint, raw_point
from .scalars import Dual, HyperDual, scalar_value


class Coord(NamedTuple):
    """Names one coordinate: kind 't' (index alpha), 'x' (index i), or
    'v' (pair i, alpha).  Indices are 0-based."""

    kind: str
    i: int
    alpha: int


def t_coord(alpha: int) -> Coord:
    return Coord("t", 0, alpha)


def x_coord(i: int) -> Coord:
    return Coord("x", i, 0)


def v_coord(i: int, alpha: int) -> Coord:
    return Coord("v", i, alpha)


def all_coords(dims: Dims):
    out = [t_coord(a) for a in range(dims.p)]
    out += [x_coord(i) for i in range(dims.n)]
    out += [v_coord(i, a) for i in range(dims.n) for a in range(dims.p)]
    return out


def parse_coord(text: str) -> Coord:
    """Parse the surface form t1 / x2 / v1_2 (1-based) into a Coord."""
    kind = text[:1]
    rest = text[1:]
    try:
        if kind == "t":
            return t_coord(int(rest) - 1)
        if kind == "x":
            return x_coord(int(rest) - 1)
        if kind == "v":
            i, a = rest.split("_")
            return v_coord(int(i) - 1, int(a) - 1)
    except ValueError:
        pass
    raise DimensionError(f"not a coordinate name: {text!r}")


# --- Lifts ------------------------------------------------------------------


def lift_d1(point: JetPoint, wrt: Coord) -> JetPoint:
    """Wrap every coordinate in a Dual, seeding ``wrt`` with 1.

    Wrapping everything keeps nested first-derivative layers distinct: inside
    a lifted evaluation no un-lifted sibling from an older layer can appear.
    """
    kind, wi, wa = wrt
    t = tuple(
        Dual(v, 1.0 if kind == "t" and wa == a else 0.0) for a, v in enumerate(point.t)
    )
    x = tuple(
        Dual(v, 1.0 if kind == "x" and wi == i else 0.0) for i, v in enumerate(point.x)
    )
    v = tuple(
        tuple(
            Dual(val, 1.0 if kind == "v" and wi == i and wa == a else 0.0)
            for a, val in enumerate(row)
        )
        for i, row in enumerate(point.v)
    )
    return raw_point(t, x, v)


def _seed_coord(point: JetPoint, coord: Coord, scalar) -> JetPoint:
    kind, i, a = coord
    if kind == "t":
        t = tuple(scalar if a == k else v for k, v in enumerate(point.t))
        return raw_point(t, point.x, point.v)
    if kind == "x":
        x = tuple(scalar if i == k else v for k, v in enumerate(point.x))
        return raw_point(point.t, x, point.v)
    v = tuple(
        tuple(scalar if (i == r and a == c) else val for c, val in enumerate(row))
        if r == i else row
        for r, row in enumerate(point.v)
    )
    return raw_point(point.t, point.x, v)


def lift_d2(point: JetPoint, w1: Coord, w2: Coord) -> JetPoint:
    """Wrap only the seeded coordinates in a HyperDual (e1 on w1, e2 on w2)."""
    if w1 == w2:
        return _seed_coord(point, w1, HyperDual(point.coord(w1), 1.0, 1.0, 0.0))
    lifted = _seed_coord(point, w1, HyperDual(point.coord(w1), 1.0, 0.0, 0.0))
    return _seed_coord(lifted, w2, HyperDual(point.coord(w2), 0.0, 1.0, 0.0))


def dual_part(s):
    return s.du if type(s) is Dual else 0.0


def value_part(s):
    t = type(s)
    if t is Dual or t is HyperDual:
        return s.re
    return s


def mixed_part(s):
    return s.e12 if type(s) is HyperDual else 0.0


# --- Derivatives ------------------------------------------------------------


def d1(f, point: JetPoint, wrt: Coord):
    """First partial of ``f`` at ``point`` along coordinate ``wrt``."""
    if isinstance(wrt, str):
        wrt = parse_coord(wrt)
    return dual_part(f(lift_d1(point, wrt)))


def d2(f, point: JetPoint, wrt1: Coord, wrt2: Coord):
    """Mixed second partial; symmetric in (wrt1, wrt2) by construction."""
    if isinstance(wrt1, str):
        wrt1 = parse_coord(wrt1)
    if isinstance(wrt2, str):
        wrt2 = parse_coord(wrt2)
    return mixed_part(f(lift_d2(point, wrt1, wrt2)))


def grad_and_hess_pair(f, point: JetPoint, w1: Coord, w2: Coord):
    """One evaluation returning (df/dw1, df/dw2, d2f/dw1dw2)."""
    r = f(lift_d2(point, w1, w2))
    if type(r) is HyperDual:
        return r.e1, r.e2, r.e12
    return 0.0, 0.0, 0.0


# --- Finite differences (cross-check only) ---------------------------------


@dataclass(frozen=True)
class DiffConfig:
    """Steps scale as step*max(1, |coordinate|); tolerances are relative with
    a 1e-8 absolute floor."""

    fd_step_1: float = 6e-6
    fd_step_2: float = 2e-4
    crosscheck_tol: float = 1e-5


def _shift(point: JetPoint, coord: Coord, delta: float) -> JetPoint:
    return point.replace_coord(coord, point.coord(coord) + delta)


def fd_d1(f, point: JetPoint, wrt: Coord, step: float) -> float:
    h = step * max(1.0, abs(float(point.coord(wrt))))
    return (f(_shift(point, wrt, h)) - f(_shift(point, wrt, -h))) / (2.0 * h)


def fd_d2(f, point: JetPoint, w1: Coord, w2: Coord, step: float) -> float:
    h1 = step * max(1.0, abs(float(point.coord(w1))))
    if w1 == w2:
        up = f(_shift(point, w1, h1))
        mid = f(point)
        dn = f(_shift(point, w1, -h1))
        return (up - 2.0 * mid + dn) / (h1 * h1)
    h2 = step * max(1.0, abs(float(point.coord(w2))))
    pp = f(_shift(_shift(point, w1, h1), w2, h2))
    pm = f(_shift(_shift(point, w1, h1), w2, -h2))
    mp = f(_shift(_shift(point, w1, -h1), w2, h2))
    mm = f(_shift(_shift(point, w1, -h1), w2, -h2))
    return (pp - pm - mp + mm) / (4.0 * h1 * h2)


@dataclass
class CrosscheckEntry:
    coords: tuple
    order: int
    forward: float
    central: float
    discrepancy: float
    ok: bool


@dataclass
class CrosscheckReport:
    """Forward-mode vs central-difference agreement at one point."""

    entries: list = field(default_factory=list)
    max_rel_discrepancy: float = 0.0
    passed: bool = True

    @property
    def failures(self):
        return [e for e in self.entries if not e.ok]


_ABS_FLOOR = 1e-8


def fd_crosscheck(f, point: JetPoint, dims: Dims | None = None,
                  config: DiffConfig = DiffConfig()) -> CrosscheckReport:
    """Compare all first and second partials at ``point`` against central
    finite differences; flags any discrepancy above the configured relative
    tolerance.

    The absolute floor is stated in units of the field magnitude: with the
    default steps, the rounding noise of a second-difference stencil is
    about 1e-8 * |f| on its own, so a smaller floor would flag noise.
    """
    dims = dims or point.dims
    coords = all_coords(dims)
    report = CrosscheckReport()
    scale = max(1.0, abs(float(f(point))))
    eps = 2.220446049250313e-16
    # Rounding noise of the stencils themselves: each is a near-cancelling
    # combination of O(scale) evaluations divided by h or h^2.
    floor_1 = max(_ABS_FLOOR * scale, 8.0 * eps * scale / (2.0 * config.fd_step_1))
    floor_2 = max(_ABS_FLOOR * scale, 16.0 * eps * scale / config.fd_step_2**2)

    def record(coords_key, order, ad, fd):
        floor = floor_1 if order == 1 else floor_2
        denom = max(abs(ad), abs(fd))
        ok = abs(ad - fd) <= max(config.crosscheck_tol * denom, floor)
        # Relative discrepancy with the denominator floored at the field
        # scale: a pair of near-zero derivatives agreeing to stencil noise
        # should not register as a large relative disagreement.
        rel = abs(ad - fd) / max(denom, scale)
        report.entries.append(CrosscheckEntry(coords_key, order, ad, fd, rel, ok))
        report.max_rel_discrepancy = max(report.max_rel_discrepancy, rel)
        if not ok:
            report.passed = False

    for c in coords:
        record((c,), 1, d1(f, point, c), fd_d1(f, point, c, config.fd_step_1))
    for i, c1 in enumerate(coords):
        for c2 in coords[i:]:
            record(
                (c1, c2),
                2,
                d2(f, point, c1, c2),
                fd_d2(f, point, c1, c2, config.fd_step_2),
            )
    return report


# --- Structure helpers ------------------------------------------------------


def map_structure(fn, obj):
    """Apply ``fn`` to every leaf of a nested list/tuple structure."""
    if isinstance(obj, (list, tuple)):
        return [map_structure(fn, o) for o in obj]
    return fn(obj)


def structure_values(obj):
    """Nested structure with every leaf reduced to its plain float value."""
    return map_structure(scalar_value, obj)


def structure_dual_parts(obj):
    return map_structure(dual_part, obj)
