"""Temporal and spatial metric machinery: inverses, Christoffel symbols,
and their curvature tensors.

All assembly routines are generic over the scalar kind so connection and
curvature code can push derivative scalars straight through them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .calculus import lift_d1, structure_dual_parts, x_coord
from .errors import DegeneracyError
from .jet_core import (
    DTensor,
    JetPoint,
    spatial_lower,
    spatial_upper,
    temporal_lower,
    temporal_upper,
)
from .scalars import Dual, scalar_value

_DEGENERACY_SCALE = 1e-10
_SYMMETRY_WARN = 1e-12


# --- Generic dense linear algebra (dims <= 4, correctness first) -----------


def mat_det(rows):
    """Determinant via fraction-free expansion; generic over scalar kind."""
    m = [list(r) for r in rows]
    dim = len(m)
    if dim == 1:
        return m[0][0]
    if dim == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    det = 0.0
    for j in range(dim):
        minor = [r[:j] + r[j + 1:] for r in m[1:]]
        term = m[0][j] * mat_det(minor)
        det = det + term if j % 2 == 0 else det - term
    return det


def mat_invert_generic(rows):
    """Inverse by partial-pivot LU (Gauss-Jordan form); pivoting compares the
    plain values of entries so lifted scalars pass through untouched."""
    dim = len(rows)
    aug = [list(r) + [1.0 if i == j else 0.0 for j in range(dim)] for i, r in enumerate(rows)]
    for col in range(dim):
        pivot = max(range(col, dim), key=lambda r: abs(scalar_value(aug[r][col])))
        if scalar_value(aug[pivot][col]) == 0.0:
            raise DegeneracyError("singular matrix in inversion", det=0.0)
        if pivot != col:
            aug[col], aug[pivot] = aug[pivot], aug[col]
        inv_p = 1.0 / aug[col][col] if isinstance(aug[col][col], (int, float)) else aug[col][col].__rtruediv__(1.0)
        aug[col] = [e * inv_p for e in aug[col]]
        for r in range(dim):
            if r == col:
                continue
            factor = aug[r][col]
            if isinstance(factor, (int, float)) and factor == 0.0:
                continue
            aug[r] = [er - factor * ec for er, ec in zip(aug[r], aug[col])]
    return [row[dim:] for row in aug]


def invert_metric(m):
    """Invert a small square matrix, refusing matrices with
    |det| <= 1e-10 * (max |entry|)^dim."""
    rows = [list(map(float, r)) for r in np.asarray(m, dtype=float)]
    dim = len(rows)
    scale = max(abs(e) for r in rows for e in r)
    det = float(mat_det(rows))
    if abs(det) <= _DEGENERACY_SCALE * scale**dim:
        raise DegeneracyError(f"degenerate matrix (det={det:.3e})", det=det)
    inv = mat_invert_generic(rows)
    if isinstance(m, np.ndarray):
        return np.array(inv, dtype=float)
    return inv


def checked_inverse(rows):
    """Generic inverse with the degeneracy threshold applied to plain values."""
    dim = len(rows)
    if dim == 1:
        entry = rows[0][0]
        det_value = scalar_value(entry)
        if abs(det_value) <= _DEGENERACY_SCALE * max(abs(det_value), 1e-300):
            raise DegeneracyError(f"degenerate metric (det={det_value:.3e})", det=det_value)
        inv = 1.0 / entry if isinstance(entry, (int, float)) else entry.__rtruediv__(1.0)
        return [[inv]]
    scale = max(abs(scalar_value(e)) for r in rows for e in r)
    det = mat_det(rows)
    det_value = scalar_value(det)
    if abs(det_value) <= _DEGENERACY_SCALE * max(scale, 1e-300) ** dim:
        raise DegeneracyError(f"degenerate metric (det={det_value:.3e})", det=det_value)
    return mat_invert_generic(rows)


def jacobi_eigenvalues(m, max_sweeps: int = 64) -> list:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    a = [[float(e) for e in row] for row in m]
    dim = len(a)
    for _ in range(max_sweeps):
        off = max(
            (abs(a[i][j]) for i in range(dim) for j in range(i + 1, dim)),
            default=0.0,
        )
        if off < 1e-14 * max(1.0, max(abs(a[i][i]) for i in range(dim))):
            break
        for i in range(dim):
            for j in range(i + 1, dim):
                if a[i][j] == 0.0:
                    continue
                theta = (a[j][j] - a[i][i]) / (2.0 * a[i][j])
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + (theta * theta + 1.0) ** 0.5)
                c = 1.0 / (t * t + 1.0) ** 0.5
                s = t * c
                for k in range(dim):
                    aik, ajk = a[i][k], a[j][k]
                    a[i][k] = c * aik - s * ajk
                    a[j][k] = s * aik + c * ajk
                for k in range(dim):
                    aki, akj = a[k][i], a[k][j]
                    a[k][i] = c * aki - s * akj
                    a[k][j] = s * aki + c * akj
    return sorted(a[i][i] for i in range(dim))


def signature_of(m) -> tuple:
    """(positive, negative) eigenvalue counts; zero eigenvalues are an error."""
    eigs = jacobi_eigenvalues(m)
    scale = max(abs(e) for e in eigs) if eigs else 0.0
    if scale == 0.0 or any(abs(e) <= 1e-10 * scale for e in eigs):
        raise DegeneracyError("metric has (numerically) zero eigenvalue")
    pos = sum(1 for e in eigs if e > 0)
    return pos, len(eigs) - pos


def _symmetrize(rows, warn_tag, warned: set):
    dim = len(rows)
    worst = 0.0
    for i in range(dim):
        for j in range(i + 1, dim):
            worst = max(worst, abs(scalar_value(rows[i][j]) - scalar_value(rows[j][i])))
    if worst > _SYMMETRY_WARN and warn_tag not in warned:
        warned.add(warn_tag)
        warnings.warn(
            f"{warn_tag}: entries asymmetric by {worst:.3e}; averaging (m + m^T)/2",
            stacklevel=3,
        )
    return [
        [(rows[i][j] + rows[j][i]) * 0.5 for j in range(dim)]
        for i in range(dim)
    ]


# --- Temporal metric ---------------------------------------------------------


def _lift_ts(ts, alpha):
    return tuple(Dual(v, 1.0 if a == alpha else 0.0) for a, v in enumerate(ts))


@dataclass
class TemporalMetric:
    """Semi-Riemannian metric h on the temporal factor; entries are callables
    of the t-tuple only."""

    p: int
    entries: list  # p x p callables ts -> scalar
    signature: tuple = None
    constant: bool = False
    _warned: set = field(default_factory=set, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def flat(cls, p: int) -> "TemporalMetric":
        entries = [
            [(lambda ts, v=1.0 if i == j else 0.0: v) for j in range(p)]
            for i in range(p)
        ]
        return cls(p=p, entries=entries, signature=(p, 0), constant=True)

    def matrix_at(self, ts):
        if self.constant:
            cached = self._cache.get("matrix")
            if cached is None:
                rows = [[float(self.entries[i][j]((0.0,) * self.p)) for j in range(self.p)]
                        for i in range(self.p)]
                cached = _symmetrize(rows, "temporal metric", self._warned)
                self._cache["matrix"] = cached
            return cached
        rows = [[self.entries[i][j](ts) for j in range(self.p)] for i in range(self.p)]
        return _symmetrize(rows, "temporal metric", self._warned)

    def inverse_at(self, ts):
        if self.constant:
            cached = self._cache.get("inverse")
            if cached is None:
                cached = checked_inverse(self.matrix_at(ts))
                self._cache["inverse"] = cached
            return cached
        return checked_inverse(self.matrix_at(ts))

    def validate_samples(self, ts_list) -> dict:
        """Sampled rank/signature report; signature mismatches and
        degeneracies are reported, not raised."""
        issues = []
        seen = set()
        for ts in ts_list:
            m = [[scalar_value(e) for e in row] for row in self.matrix_at(ts)]
            try:
                sig = signature_of(m)
            except DegeneracyError as exc:
                issues.append({"t": list(ts), "issue": str(exc)})
                continue
            seen.add(sig)
            if self.signature is not None and tuple(sig) != tuple(self.signature):
                issues.append({"t": list(ts), "issue": f"signature {sig} != declared {tuple(self.signature)}"})
        return {
            "ok": not issues and len(seen) <= 1,
            "signatures_seen": sorted(seen),
            "issues": issues,
        }


def h_christoffel_values(h: TemporalMetric, ts):
    """H^c_{ab} = h^{cm}(d_a h_{mb} + d_b h_{ma} - d_m h_{ab})/2 as nested
    lists [c][a][b]; generic over the scalar kind of ts."""
    p = h.p
    if h.constant:
        return [[[0.0] * p for _ in range(p)] for _ in range(p)]
    hinv = h.inverse_at(ts)
    dh = []
    for a in range(p):
        lifted = _lift_ts(ts, a)
        dh.append(structure_dual_parts(h.matrix_at(lifted)))
    out = [[[0.0] * p for _ in range(p)] for _ in range(p)]
    for c in range(p):
        for a in range(p):
            for b in range(p):
                acc = 0.0
                for m in range(p):
                    acc = acc + hinv[c][m] * (dh[a][m][b] + dh[b][m][a] - dh[m][a][b])
                out[c][a][b] = acc * 0.5
    return out


def h_christoffel(h: TemporalMetric, t) -> DTensor:
    values = h_christoffel_values(h, tuple(float(v) for v in t))
    slots = (temporal_upper(h.p), temporal_lower(h.p), temporal_lower(h.p))
    return DTensor(slots, np.array(values, dtype=float))


def h_curvature_values(h: TemporalMetric, ts):
    """H^c_{m a b} = d_b H^c_{ma} - d_a H^c_{mb} + H^e_{ma} H^c_{eb}
    - H^e_{mb} H^c_{ea}, [c][m][a][b]."""
    p = h.p
    if h.constant or p == 1:
        return [[[[0.0] * p for _ in range(p)] for _ in range(p)] for _ in range(p)]
    ch = h_christoffel_values(h, ts)
    dch = []
    for b in range(p):
        lifted = _lift_ts(ts, b)
        dch.append(structure_dual_parts(h_christoffel_values(h, lifted)))
    out = [[[[0.0] * p for _ in range(p)] for _ in range(p)] for _ in range(p)]
    for c in range(p):
        for m in range(p):
            for a in range(p):
                for b in range(p):
                    acc = dch[b][c][m][a] - dch[a][c][m][b]
                    for e in range(p):
                        acc = acc + ch[e][m][a] * ch[c][e][b] - ch[e][m][b] * ch[c][e][a]
                    out[c][m][a][b] = acc
    return out


def h_curvature(h: TemporalMetric, t) -> DTensor:
    values = h_curvature_values(h, tuple(float(v) for v in t))
    p = h.p
    slots = (temporal_upper(p), temporal_lower(p), temporal_lower(p), temporal_lower(p))
    return DTensor(slots, np.array(values, dtype=float))


# --- Spatial metric ----------------------------------------------------------


@dataclass
class SpatialMetricField:
    """Spatial metric g with entries evaluated on full jet points; velocity
    dependence is only meaningful for p = 1 instances."""

    n: int
    entries: list  # n x n callables JetPoint -> scalar
    _warned: set = field(default_factory=set, repr=False)

    @classmethod
    def flat(cls, n: int) -> "SpatialMetricField":
        entries = [
            [(lambda pt, v=1.0 if i == j else 0.0: v) for j in range(n)]
            for i in range(n)
        ]
        return cls(n=n, entries=entries)

    @classmethod
    def from_matrix_function(cls, n: int, fn) -> "SpatialMetricField":
        entries = [
            [(lambda pt, i=i, j=j: fn(pt)[i][j]) for j in range(n)]
            for i in range(n)
        ]
        return cls(n=n, entries=entries)

    def matrix_at(self, point: JetPoint):
        rows = [[self.entries[i][j](point) for j in range(self.n)] for i in range(self.n)]
        return _symmetrize(rows, "spatial metric", self._warned)

    def inverse_at(self, point: JetPoint):
        return checked_inverse(self.matrix_at(point))


def g_christoffel_values(g: SpatialMetricField, point: JetPoint):
    """Gamma^l_{jk} = g^{li}(d_k g_{ij} + d_j g_{ik} - d_i g_{jk})/2,
    [l][j][k]; spatial partials only."""
    n = g.n
    ginv = g.inverse_at(point)
    dg = []
    for k in range(n):
        lifted = lift_d1(point, x_coord(k))
        dg.append(structure_dual_parts(g.matrix_at(lifted)))
    out = [[[0.0] * n for _ in range(n)] for _ in range(n)]
    for l in range(n):
        for j in range(n):
            for k in range(n):
                acc = 0.0
                for i in range(n):
                    acc = acc + ginv[l][i] * (dg[k][i][j] + dg[j][i][k] - dg[i][j][k])
                out[l][j][k] = acc * 0.5
    return out


def g_christoffel(g: SpatialMetricField, point: JetPoint) -> DTensor:
    values = g_christoffel_values(g, point)
    slots = (spatial_upper(g.n), spatial_lower(g.n), spatial_lower(g.n))
    return DTensor(slots, np.array(values, dtype=float))


def g_curvature_values(g: SpatialMetricField, point: JetPoint):
    """r^m_{pij} = d_j Gamma^m_{pi} - d_i Gamma^m_{pj}
    + Gamma^k_{pi} Gamma^m_{kj} - Gamma^k_{pj} Gamma^m_{ki}, [m][p][i][j]."""
    n = g.n
    gam = g_christoffel_values(g, point)
    dgam = []
    for j in range(n):
        lifted = lift_d1(point, x_coord(j))
        dgam.append(structure_dual_parts(g_christoffel_values(g, lifted)))
    out = [[[[0.0] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for m in range(n):
        for pp in range(n):
            for i in range(n):
                for j in range(n):
                    acc = dgam[j][m][pp][i] - dgam[i][m][pp][j]
                    for k in range(n):
                        acc = acc + gam[k][pp][i] * gam[m][k][j] - gam[k][pp][j] * gam[m][k][i]
                    out[m][pp][i][j] = acc
    return out


def g_curvature(g: SpatialMetricField, point: JetPoint) -> DTensor:
    values = g_curvature_values(g, point)
    n = g.n
    slots = (spatial_upper(n), spatial_lower(n), spatial_lower(n), spatial_lower(n))
    return DTensor(slots, np.array(values, dtype=float))
