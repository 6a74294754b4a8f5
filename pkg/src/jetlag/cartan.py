"""Metric linear connections on the jet space.

An h-normal linear connection is determined by four coefficient families
(Hbar, G, L, C); the temporal block is always the Levi-Civita data of h.
This module builds the two instances the geometry singles out:

* the Cartan canonical connection, metric for the spatial metric derived
  from the Lagrangian's vertical Hessian, with symmetric L and C;
* the Berwald connection of a metric pair (h, g), whose only nonzero
  spatial block is the Christoffel symbols of g.

It also provides the three covariant derivative operators (T-horizontal,
M-horizontal, vertical) for arbitrary d-tensor valences, and a uniqueness
probe that re-derives the coefficients from metric compatibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .calculus import (
    all_coords,
    lift_d1,
    structure_dual_parts,
    t_coord,
    v_coord,
    x_coord,
)
from .connection import NonlinearConnection, metric_pair_connection
from .errors import DimensionError
from .jet_core import Dims, DTensor, JetPoint, SlotKind
from .metric_engine import (
    SpatialMetricField,
    TemporalMetric,
    checked_inverse,
    g_christoffel_values,
    h_christoffel_values,
)
from .regularity import ElectrodynamicsDecomposition, electrodynamics_decompose, hessian_blocks
from .scalars import scalar_value


class Coefficients(NamedTuple):
    """Point values of the four effective families (generic scalars)."""

    hbar: list  # [c][a][b]
    g: list     # [k][j][c]
    l: list     # [i][j][k]
    c: list     # [i][j][k][c]  (C^{i(c)}_{j(k)})


@dataclass
class LinearConnectionPack:
    """An h-normal linear connection: the four effective coefficient fields
    plus the nonlinear connection and spatial metric they were built over.

    The derived vertical coefficients are delta-combinations of these four
    and are produced on demand (``vertical_g`` etc.); the covariant
    derivative operators implement exactly those combinations.
    """

    dims: Dims
    kind: str                  # "cartan" | "berwald" | "custom"
    coefficients_at: object    # JetPoint -> Coefficients
    g_matrix_at: object        # JetPoint -> n x n spatial metric values
    conn: NonlinearConnection
    h: TemporalMetric

    def hbar_at(self, point):
        return self.coefficients_at(point).hbar

    def g_at(self, point):
        return self.coefficients_at(point).g

    def l_at(self, point):
        return self.coefficients_at(point).l

    def c_at(self, point):
        return self.coefficients_at(point).c

    def vertical_g(self, point):
        """G^{(k)(b)}_{(a)(i)c} = delta^b_a G^k_{ic} - delta^k_i H^b_{ac}."""
        n, p = self.dims.n, self.dims.p
        co = self.coefficients_at(point)
        out = [[[[[0.0] * p for _ in range(n)] for _ in range(p)] for _ in range(n)]
               for _ in range(p)]
        # index order [b][k][a][i][c] flattened below by callers as needed
        vals = {}
        for k in range(n):
            for b in range(p):
                for i in range(n):
                    for a in range(p):
                        for c in range(p):
                            val = 0.0
                            if b == a:
                                val = val + co.g[k][i][c]
                            if k == i:
                                val = val - co.hbar[b][a][c]
                            vals[(k, b, i, a, c)] = val
        del out
        return vals

    def vertical_l(self, point):
        """L^{(k)(b)}_{(a)(i)j} = delta^b_a L^k_{ij}."""
        co = self.coefficients_at(point)
        n, p = self.dims.n, self.dims.p
        return {
            (k, b, i, a, j): (co.l[k][i][j] if b == a else 0.0)
            for k in range(n) for b in range(p) for i in range(n)
            for a in range(p) for j in range(n)
        }

    def vertical_c(self, point):
        """C^{(k)(b)(c)}_{(a)(i)(j)} = delta^b_a C^{k(c)}_{i(j)}."""
        co = self.coefficients_at(point)
        n, p = self.dims.n, self.dims.p
        return {
            (k, b, i, a, j, c): (co.c[k][i][j][c] if b == a else 0.0)
            for k in range(n) for b in range(p) for i in range(n)
            for a in range(p) for j in range(n) for c in range(p)
        }


# --- Cartan construction -------------------------------------------------------


def _cartan_coefficients_p1(L, h, conn, dims):
    """Generic-coefficient closure for p = 1: the spatial metric is the
    h-trace of the vertical Hessian evaluated at the full point (velocity
    dependence allowed), and all delta-derivatives use the adapted frame."""
    n = dims.n

    def g_matrix(point: JetPoint):
        blocks = hessian_blocks(L, point, dims)
        hmat = h.matrix_at(point.t)
        return [
            [hmat[0][0] * blocks[i][0][j][0] for j in range(n)]
            for i in range(n)
        ]

    def coefficients(point: JetPoint):
        g = g_matrix(point)
        ginv = checked_inverse(g)
        hbar = h_christoffel_values(h, point.t)
        m_co = conn.m_at(point)
        n_co = conn.n_at(point)

        dg_t = structure_dual_parts(g_matrix(lift_d1(point, t_coord(0))))
        dg_x = [
            structure_dual_parts(g_matrix(lift_d1(point, x_coord(k))))
            for k in range(n)
        ]
        dg_v = [
            structure_dual_parts(g_matrix(lift_d1(point, v_coord(l, 0))))
            for l in range(n)
        ]

        def delta_t(i, j):
            acc = dg_t[i][j]
            for l in range(n):
                acc = acc - m_co[l][0][0] * dg_v[l][i][j]
            return acc

        def delta_x(k, i, j):
            acc = dg_x[k][i][j]
            for l in range(n):
                acc = acc - n_co[l][0][k] * dg_v[l][i][j]
            return acc

        g_co = [[[0.0] for _ in range(n)] for _ in range(n)]
        for k in range(n):
            for j in range(n):
                acc = 0.0
                for i in range(n):
                    acc = acc + ginv[k][i] * delta_t(i, j)
                g_co[k][j][0] = acc * 0.5

        l_co = [[[0.0] * n for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    acc = 0.0
                    for m in range(n):
                        acc = acc + ginv[i][m] * (
                            delta_x(k, j, m) + delta_x(j, k, m) - delta_x(m, j, k)
                        )
                    l_co[i][j][k] = acc * 0.5

        c_co = [[[[0.0] for _ in range(n)] for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    acc = 0.0
                    for m in range(n):
                        acc = acc + ginv[i][m] * (
                            dg_v[k][j][m] + dg_v[j][k][m] - dg_v[m][j][k]
                        )
                    c_co[i][j][k][0] = acc * 0.5
        return Coefficients(hbar=hbar, g=g_co, l=l_co, c=c_co)

    return coefficients, g_matrix


def _cartan_coefficients_p2(h, deco: ElectrodynamicsDecomposition, dims):
    """For p >= 2 the spatial metric depends on (t, x) only, so the adapted
    derivatives reduce to plain partials and the vertical coefficients
    vanish identically."""
    n, p = dims.n, dims.p
    g_field = SpatialMetricField.from_matrix_function(n, deco.g_field)

    def coefficients(point: JetPoint):
        g = g_field.matrix_at(point)
        ginv = checked_inverse(g)
        hbar = h_christoffel_values(h, point.t)
        l_co = g_christoffel_values(g_field, point)
        g_co = [[[0.0] * p for _ in range(n)] for _ in range(n)]
        for a in range(p):
            dg = structure_dual_parts(g_field.matrix_at(lift_d1(point, t_coord(a))))
            for k in range(n):
                for j in range(n):
                    acc = 0.0
                    for i in range(n):
                        acc = acc + ginv[k][i] * dg[i][j]
                    g_co[k][j][a] = acc * 0.5
        c_co = [[[[0.0] * p for _ in range(n)] for _ in range(n)] for _ in range(n)]
        return Coefficients(hbar=hbar, g=g_co, l=l_co, c=c_co)

    return coefficients, g_field.matrix_at


def cartan_connection(L, h: TemporalMetric, conn: NonlinearConnection,
                      decomposition: ElectrodynamicsDecomposition | None = None
                      ) -> LinearConnectionPack:
    """The unique h-normal connection over ``conn`` that is metric for the
    derived spatial metric and has symmetric L and C blocks:

    G^k_{jc} = (g^{ki}/2) delta g_ij/delta t^c,
    L^i_{jk} = (g^{im}/2)(delta g_jm/delta x^k + delta g_km/delta x^j
               - delta g_jk/delta x^m),
    C^{i(c)}_{j(k)} = (g^{im}/2)(d g_jm/dv^k_c + d g_km/dv^j_c
               - d g_jk/dv^m_c).
    """
    dims = getattr(L, "dims", None)
    if dims is None:
        raise DimensionError("Lagrangian must expose .dims")
    if dims.p == 1:
        coefficients, g_matrix = _cartan_coefficients_p1(L, h, conn, dims)
    else:
        deco = decomposition or electrodynamics_decompose(L, h)
        coefficients, g_matrix = _cartan_coefficients_p2(h, deco, dims)
    return LinearConnectionPack(
        dims=dims, kind="cartan", coefficients_at=coefficients,
        g_matrix_at=g_matrix, conn=conn, h=h,
    )


def berwald_connection(h: TemporalMetric, g: SpatialMetricField,
                       dims: Dims | None = None) -> LinearConnectionPack:
    """The connection (Hbar, 0, gamma^k_ij, 0) of the metric pair (h, g),
    over the pair's own nonlinear connection.  Intended for g = g(x); for
    time-dependent g it freezes t as a parameter, which is what the
    distinctness probes exercise."""
    dims = dims or Dims(h.p, g.n)
    conn0 = metric_pair_connection(h, g, dims)
    n, p = dims.n, dims.p

    def coefficients(point: JetPoint):
        hbar = h_christoffel_values(h, point.t)
        l_co = g_christoffel_values(g, point)
        g_co = [[[0.0] * p for _ in range(n)] for _ in range(n)]
        c_co = [[[[0.0] * p for _ in range(n)] for _ in range(n)] for _ in range(n)]
        return Coefficients(hbar=hbar, g=g_co, l=l_co, c=c_co)

    return LinearConnectionPack(
        dims=dims, kind="berwald", coefficients_at=coefficients,
        g_matrix_at=g.matrix_at, conn=conn0, h=h,
    )


# --- Covariant derivatives -------------------------------------------------------


class THorizontal(NamedTuple):
    gamma: int


class MHorizontal(NamedTuple):
    k: int


class VerticalCov(NamedTuple):
    k: int
    gamma: int


def _direction_tables(pack: LinearConnectionPack, point: JetPoint, direction):
    """(spatial, temporal) correction coefficient tables for a direction:
    spatial[m][l] multiplies upper-spatial slots, temporal[a][mu] upper-
    temporal slots (lower slots use the transposes with a minus sign)."""
    co = pack.coefficients_at(point)
    n, p = pack.dims.n, pack.dims.p
    if isinstance(direction, THorizontal):
        c = direction.gamma
        spatial = [[co.g[m][l][c] for l in range(n)] for m in range(n)]
        temporal = [[co.hbar[a][mu][c] for mu in range(p)] for a in range(p)]
    elif isinstance(direction, MHorizontal):
        k = direction.k
        spatial = [[co.l[m][l][k] for l in range(n)] for m in range(n)]
        temporal = [[0.0] * p for _ in range(p)]
    elif isinstance(direction, VerticalCov):
        k, c = direction.k, direction.gamma
        spatial = [[co.c[m][l][k][c] for l in range(n)] for m in range(n)]
        temporal = [[0.0] * p for _ in range(p)]
    else:
        raise DimensionError(f"unknown covariant direction {direction!r}")
    return spatial, temporal


def _field_jacobian(field, point: JetPoint, coords):
    """Derivatives of a structure-valued field along each coordinate."""
    return {
        c: structure_dual_parts(field(lift_d1(point, c))) for c in coords
    }


def covariant_derivative(field, valence, direction, pack: LinearConnectionPack,
                         conn: NonlinearConnection, point: JetPoint) -> DTensor:
    """Covariant derivative of a tensor field of the given valence.

    ``field`` maps a JetPoint to nested lists matching ``valence`` (flat
    vertical indexing i*p + a).  The base derivative is the adapted one for
    horizontal directions; slot corrections contract the pack coefficients,
    vertical slots receiving both their spatial and temporal contributions.
    """
    dims = pack.dims
    n, p = dims.n, dims.p
    valence = tuple(valence)
    if not valence:
        # scalar fields have no slot corrections: the covariant derivative
        # is the adapted derivative itself
        from .connection import (
            SpatialAdapted,
            TemporalAdapted,
            VerticalDirection,
            adapted_derivative,
        )

        if isinstance(direction, THorizontal):
            adapted = TemporalAdapted(direction.gamma)
        elif isinstance(direction, MHorizontal):
            adapted = SpatialAdapted(direction.k)
        else:
            adapted = VerticalDirection(direction.k, direction.gamma)
        return adapted_derivative(field, point, adapted, conn)

    if isinstance(direction, THorizontal):
        base_coord = t_coord(direction.gamma)
        m_co = conn.m_at(point)
        weights = {v_coord(l, b): m_co[l][b][direction.gamma] for l in range(n) for b in range(p)}
    elif isinstance(direction, MHorizontal):
        base_coord = x_coord(direction.k)
        n_co = conn.n_at(point)
        weights = {v_coord(l, b): n_co[l][b][direction.k] for l in range(n) for b in range(p)}
    elif isinstance(direction, VerticalCov):
        base_coord = v_coord(direction.k, direction.gamma)
        weights = {}
    else:
        raise DimensionError(f"unknown covariant direction {direction!r}")

    coords = [base_coord] + list(weights)
    jac = _field_jacobian(field, point, coords)
    values = field(point)

    out = DTensor(valence)
    spatial, temporal = _direction_tables(pack, point, direction)

    def lookup(struct, idx):
        cur = struct
        for k in idx:
            cur = cur[k]
        return cur

    shape = out.shape
    for idx in np.ndindex(shape):
        acc = lookup(jac[base_coord], idx)
        for c, w in weights.items():
            acc = acc - w * lookup(jac[c], idx)
        for pos, slot in enumerate(valence):
            kind = slot.kind
            if kind is SlotKind.SPATIAL_UPPER:
                m = idx[pos]
                for l in range(n):
                    acc = acc + spatial[m][l] * lookup(values, _with(idx, pos, l))
            elif kind is SlotKind.SPATIAL_LOWER:
                i = idx[pos]
                for l in range(n):
                    acc = acc - spatial[l][i] * lookup(values, _with(idx, pos, l))
            elif kind is SlotKind.TEMPORAL_UPPER:
                a = idx[pos]
                for mu in range(p):
                    acc = acc + temporal[a][mu] * lookup(values, _with(idx, pos, mu))
            elif kind is SlotKind.TEMPORAL_LOWER:
                b = idx[pos]
                for mu in range(p):
                    acc = acc - temporal[mu][b] * lookup(values, _with(idx, pos, mu))
            elif kind is SlotKind.VERTICAL_UPPER:
                i, a = divmod(idx[pos], p)
                for l in range(n):
                    acc = acc + spatial[i][l] * lookup(values, _with(idx, pos, l * p + a))
                for mu in range(p):
                    acc = acc - temporal[mu][a] * lookup(values, _with(idx, pos, i * p + mu))
            elif kind is SlotKind.VERTICAL_LOWER:
                k, c = divmod(idx[pos], p)
                for l in range(n):
                    acc = acc - spatial[l][k] * lookup(values, _with(idx, pos, l * p + c))
                for mu in range(p):
                    acc = acc + temporal[c][mu] * lookup(values, _with(idx, pos, k * p + mu))
        out.data[idx] = scalar_value(acc)
    return out


def _with(idx, pos, value):
    lst = list(idx)
    lst[pos] = value
    return tuple(lst)


# --- Uniqueness probe --------------------------------------------------------------


@dataclass
class ProbeReport:
    """Worst deviation per family between a pack and the coefficients
    re-derived from metric compatibility."""

    worst: dict
    worst_index: dict
    tol: float
    passed: bool


def uniqueness_probe(pack: LinearConnectionPack, L, h: TemporalMetric,
                     conn: NonlinearConnection, points, tol: float = 1e-8) -> ProbeReport:
    """Re-derive (G, L, C) by the Christoffel process on the metric derived
    from L and compare against the supplied pack at each point."""
    dims = pack.dims
    if dims.p == 1:
        reference, _ = _cartan_coefficients_p1(L, h, conn, dims)
    else:
        reference, _ = _cartan_coefficients_p2(h, electrodynamics_decompose(L, h), dims)
    worst = {"G": 0.0, "L": 0.0, "C": 0.0}
    worst_index = {"G": None, "L": None, "C": None}
    n, p = dims.n, dims.p
    for point in points:
        ref = reference(point)
        got = pack.coefficients_at(point)
        for k in range(n):
            for j in range(n):
                for c in range(p):
                    dev = abs(scalar_value(ref.g[k][j][c]) - scalar_value(got.g[k][j][c]))
                    if dev > worst["G"]:
                        worst["G"], worst_index["G"] = dev, (k, j, c)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    dev = abs(scalar_value(ref.l[i][j][k]) - scalar_value(got.l[i][j][k]))
                    if dev > worst["L"]:
                        worst["L"], worst_index["L"] = dev, (i, j, k)
                    for c in range(p):
                        dev = abs(scalar_value(ref.c[i][j][k][c]) - scalar_value(got.c[i][j][k][c]))
                        if dev > worst["C"]:
                            worst["C"], worst_index["C"] = dev, (i, j, k, c)
    passed = all(v <= tol for v in worst.values())
    return ProbeReport(worst=worst, worst_index=worst_index, tol=tol, passed=passed)


# --- Metric compatibility ------------------------------------------------------------


def metric_compatibility(pack: LinearConnectionPack, point: JetPoint) -> dict:
    """Max |covariant derivative| of the spatial and temporal metrics in all
    three directions; all six must vanish for the Cartan pack.

    Shares one coefficient/jacobian evaluation across all directions (the
    slot rules are the same ones ``covariant_derivative`` implements; the
    test-suite pins the two code paths against each other).
    """
    dims = pack.dims
    n, p = dims.n, dims.p
    co = pack.coefficients_at(point)
    conn_m = pack.conn.m_at(point)
    n_co = pack.conn.n_at(point)
    gv = [[scalar_value(e) for e in row] for row in pack.g_matrix_at(point)]
    hv = [[scalar_value(e) for e in row] for row in pack.h.matrix_at(point.t)]

    def jac(field):
        out = {}
        for c in all_coords(dims):
            out[c] = structure_dual_parts(field(lift_d1(point, c)))
        return out

    g_jac = jac(lambda q: pack.g_matrix_at(q))
    h_jac = jac(lambda q: pack.h.matrix_at(q.t))

    def delta(jacobian, weights, base_coord):
        """Adapted derivative of a matrix field along one direction."""
        out = [[scalar_value(jacobian[base_coord][i][j]) for j in range(len(jacobian[base_coord][i]))]
               for i in range(len(jacobian[base_coord]))]
        for (l, b), w in weights.items():
            wv = scalar_value(w)
            if wv == 0.0:
                continue
            dv = jacobian[v_coord(l, b)]
            for i in range(len(out)):
                for j in range(len(out[i])):
                    out[i][j] -= wv * scalar_value(dv[i][j])
        return out

    G = [[[scalar_value(e) for e in r] for r in m] for m in co.g]
    Lc = [[[scalar_value(e) for e in r] for r in m] for m in co.l]
    C = [[[[scalar_value(e) for e in r] for r in m] for m in q] for q in co.c]
    H = [[[scalar_value(e) for e in r] for r in m] for m in co.hbar]

    worst = {
        "g_t_horizontal": 0.0, "g_m_horizontal": 0.0, "g_vertical": 0.0,
        "h_t_horizontal": 0.0, "h_m_horizontal": 0.0, "h_vertical": 0.0,
    }
    for c in range(p):
        weights = {(l, b): conn_m[l][b][c] for l in range(n) for b in range(p)}
        dg = delta(g_jac, weights, t_coord(c))
        dh = delta(h_jac, weights, t_coord(c))
        for i in range(n):
            for j in range(n):
                val = dg[i][j]
                for m in range(n):
                    val -= G[m][i][c] * gv[m][j] + G[m][j][c] * gv[i][m]
                worst["g_t_horizontal"] = max(worst["g_t_horizontal"], abs(val))
        for a in range(p):
            for b in range(p):
                val = dh[a][b]
                for mu in range(p):
                    val -= H[mu][a][c] * hv[mu][b] + H[mu][b][c] * hv[a][mu]
                worst["h_t_horizontal"] = max(worst["h_t_horizontal"], abs(val))
    for k in range(n):
        weights = {(l, b): n_co[l][b][k] for l in range(n) for b in range(p)}
        dg = delta(g_jac, weights, x_coord(k))
        dh = delta(h_jac, weights, x_coord(k))
        for i in range(n):
            for j in range(n):
                val = dg[i][j]
                for m in range(n):
                    val -= Lc[m][i][k] * gv[m][j] + Lc[m][j][k] * gv[i][m]
                worst["g_m_horizontal"] = max(worst["g_m_horizontal"], abs(val))
        worst["h_m_horizontal"] = max(
            worst["h_m_horizontal"],
            max(abs(dh[a][b]) for a in range(p) for b in range(p)))
    for k in range(n):
        for c in range(p):
            dg = g_jac[v_coord(k, c)]
            dh = h_jac[v_coord(k, c)]
            for i in range(n):
                for j in range(n):
                    val = scalar_value(dg[i][j])
                    for m in range(n):
                        val -= C[m][i][k][c] * gv[m][j] + C[m][j][k][c] * gv[i][m]
                    worst["g_vertical"] = max(worst["g_vertical"], abs(val))
            worst["h_vertical"] = max(
                worst["h_vertical"],
                max(abs(scalar_value(dh[a][b])) for a in range(p) for b in range(p)))
    return worst
