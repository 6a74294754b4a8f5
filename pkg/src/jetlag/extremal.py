"""Extremal curves (p = 1) and harmonic-map residuals (p >= 2).

For one-dimensional time the extremal equations reduce to the second-order
system x'' = H(t) x' - 2 h_11(t) G(t, x, x') which is integrated by the
classical fourth-order Runge-Kutta scheme.  For several times the equations
form a PDE system; candidate maps are only *checked* by evaluating the
residual h^{ab}(x_ab - H^c_ab x_c) + 2G on a lattice with central
differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .connection import JetMap, euler_lagrange_residual, gcal_values
from .errors import DegeneracyError, DimensionError, JetLagError, StencilError
from .jet_core import Dims, JetPoint
from .metric_engine import TemporalMetric, h_christoffel_values
from .scalars import scalar_value


# --- p = 1: extremal integration ---------------------------------------------


@dataclass
class ExtremalProblem:
    L: object
    h: TemporalMetric
    t0: float
    x0: tuple
    y0: tuple
    t_end: float
    dt: float

    def __post_init__(self):
        if self.h.p != 1:
            raise DimensionError("extremal integration needs p = 1")
        if self.dt <= 0:
            raise DimensionError("dt must be positive")


@dataclass
class Trajectory:
    """Uniformly sampled (t, x, y) states plus a residual summary."""

    t: np.ndarray       # (steps+1,)
    x: np.ndarray       # (steps+1, n)
    y: np.ndarray       # (steps+1, n)
    aborted: bool = False
    abort_reason: str = ""
    el_residuals: np.ndarray = None  # interior-sample residual norms

    @property
    def max_el_residual(self) -> float:
        if self.el_residuals is None or len(self.el_residuals) == 0:
            return math.nan
        return float(np.max(np.abs(self.el_residuals)))


def _acceleration(L, h, dims, t, x, y):
    """x''^k = H^1_11 x'^k - 2 h_11 G^k."""
    point = JetPoint((t,), tuple(x), tuple((yi,) for yi in y))
    g_vec = gcal_values(L, h, point, dims)
    hch = h_christoffel_values(h, (t,))
    h11 = scalar_value(h.matrix_at((t,))[0][0])
    hc = scalar_value(hch[0][0][0])
    return np.array([hc * y[k] - 2.0 * h11 * scalar_value(g_vec[k]) for k in range(dims.n)])


def integrate_extremal(problem: ExtremalProblem) -> Trajectory:
    """Classical RK4 on the first-order system (x, y); aborts cleanly with
    the last valid state if the spray degenerates mid-trajectory."""
    L, h = problem.L, problem.h
    dims = getattr(L, "dims")
    n = dims.n
    span = problem.t_end - problem.t0
    steps = max(1, round(span / problem.dt))
    dt = span / steps

    ts = [problem.t0]
    xs = [np.array(problem.x0, dtype=float)]
    ys = [np.array(problem.y0, dtype=float)]
    aborted = False
    reason = ""
    for k in range(steps):
        t = ts[-1]
        x = xs[-1]
        y = ys[-1]
        try:
            k1x, k1y = y, _acceleration(L, h, dims, t, x, y)
            k2x = y + 0.5 * dt * k1y
            k2y = _acceleration(L, h, dims, t + 0.5 * dt, x + 0.5 * dt * k1x, k2x)
            k3x = y + 0.5 * dt * k2y
            k3y = _acceleration(L, h, dims, t + 0.5 * dt, x + 0.5 * dt * k2x, k3x)
            k4x = y + dt * k3y
            k4y = _acceleration(L, h, dims, t + dt, x + dt * k3x, k4x)
        except (DegeneracyError, JetLagError, OverflowError, ZeroDivisionError) as exc:
            aborted = True
            reason = f"{type(exc).__name__}: {exc}"
            break
        xs.append(x + (dt / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x))
        ys.append(y + (dt / 6.0) * (k1y + 2 * k2y + 2 * k3y + k4y))
        ts.append(problem.t0 + (k + 1) * dt)

    traj = Trajectory(
        t=np.array(ts), x=np.vstack(xs), y=np.vstack(ys),
        aborted=aborted, abort_reason=reason,
    )
    if not aborted and len(ts) >= 3:
        traj.el_residuals = trajectory_el_residuals(L, h, traj)
    return traj


def trajectory_jet_map(traj: Trajectory, dims: Dims) -> JetMap:
    """JetMap over the trajectory samples: x and y are looked up, the second
    derivative comes from central differences of the stored y (independent
    of the integrator's right-hand side)."""
    dt = traj.t[1] - traj.t[0]

    def index_of(ts):
        return int(round((ts[0] - traj.t[0]) / dt))

    def x(ts):
        return list(traj.x[index_of(ts)])

    def dx(ts):
        return [[v] for v in traj.y[index_of(ts)]]

    def d2x(ts):
        k = index_of(ts)
        if not 1 <= k <= len(traj.t) - 2:
            raise DimensionError("second differences need an interior sample")
        acc = (traj.y[k + 1] - traj.y[k - 1]) / (2.0 * dt)
        return [[[a]] for a in acc]

    return JetMap(dims=dims, x=x, dx=dx, d2x=d2x)


def trajectory_el_residuals(L, h: TemporalMetric, traj: Trajectory) -> np.ndarray:
    """Max-norm Euler-Lagrange residual at every interior trajectory sample."""
    dims = getattr(L, "dims")
    jm = trajectory_jet_map(traj, dims)
    out = []
    for k in range(1, len(traj.t) - 1):
        res = euler_lagrange_residual(L, h, jm, (traj.t[k],))
        out.append(float(np.max(np.abs(res))))
    return np.array(out)


# --- p >= 2: lattice residuals --------------------------------------------------


@dataclass
class GridMap:
    """A candidate map T -> M sampled on a rectangular lattice."""

    dims: Dims
    box: list            # p pairs (lo, hi)
    shape: tuple         # p ints, each >= 5
    values: np.ndarray   # shape (*shape, n)
    spacing: tuple = field(init=False)

    def __post_init__(self):
        p, n = self.dims.p, self.dims.n
        if len(self.shape) != p or len(self.box) != p:
            raise DimensionError("grid shape/box rank must equal p")
        if any(s < 5 for s in self.shape):
            raise StencilError("need at least 5 nodes per axis")
        if self.values.shape != tuple(self.shape) + (n,):
            raise DimensionError(
                f"values shape {self.values.shape} != {tuple(self.shape) + (n,)}"
            )
        self.spacing = tuple(
            (hi - lo) / (s - 1) for (lo, hi), s in zip(self.box, self.shape)
        )

    @classmethod
    def from_function(cls, dims: Dims, box, shape, fn) -> "GridMap":
        box = [(float(lo), float(hi)) for lo, hi in box]
        shape = tuple(int(s) for s in shape)
        values = np.zeros(shape + (dims.n,))
        for idx in np.ndindex(shape):
            ts = tuple(lo + k * (hi - lo) / (s - 1)
                       for (lo, hi), s, k in zip(box, shape, idx))
            values[idx] = fn(ts)
        return cls(dims=dims, box=box, shape=shape, values=values)

    def node_t(self, idx) -> tuple:
        return tuple(lo + k * sp for (lo, _), sp, k in zip(self.box, self.spacing, idx))

    def interior_indices(self):
        return _product([range(1, s - 1) for s in self.shape])


def _product(ranges):
    import itertools

    return itertools.product(*ranges)


def _grid_jet(grid: GridMap, idx):
    """Central-difference first and second derivatives at an interior node."""
    p, n = grid.dims.p, grid.dims.n
    v = grid.values
    sp = grid.spacing

    def shift(base, axis, step):
        out = list(base)
        out[axis] += step
        return tuple(out)

    first = np.zeros((n, p))
    second = np.zeros((n, p, p))
    for a in range(p):
        up = v[shift(idx, a, 1)]
        dn = v[shift(idx, a, -1)]
        first[:, a] = (up - dn) / (2.0 * sp[a])
        second[:, a, a] = (up - 2.0 * v[idx] + dn) / (sp[a] ** 2)
    for a in range(p):
        for b in range(a + 1, p):
            pp = v[shift(shift(idx, a, 1), b, 1)]
            pm = v[shift(shift(idx, a, 1), b, -1)]
            mp = v[shift(shift(idx, a, -1), b, 1)]
            mm = v[shift(shift(idx, a, -1), b, -1)]
            mixed = (pp - pm - mp + mm) / (4.0 * sp[a] * sp[b])
            second[:, a, b] = mixed
            second[:, b, a] = mixed
    return first, second


@dataclass
class ResidualField:
    """Interior-node residuals of the harmonic-map equations."""

    indices: list
    points: list         # node t-tuples
    residuals: np.ndarray  # (len(indices), n)
    max_norm: float
    rms: float


def harmonic_residual(L, h: TemporalMetric, grid: GridMap) -> ResidualField:
    """residual^k = h^{ab}(x^k_ab - H^c_ab x^k_c) + 2 G^k at interior nodes,
    with x_a, x_ab supplied by central differences."""
    dims = grid.dims
    if dims.p < 2:
        raise DimensionError("lattice residuals are for p >= 2")
    ldims = getattr(L, "dims", None)
    if ldims is not None and ldims != dims:
        raise DimensionError(f"Lagrangian dims {ldims} do not match the grid {dims}")
    if h.p != dims.p:
        raise DimensionError("temporal metric p does not match the grid")
    n, p = dims.n, dims.p
    indices = list(grid.interior_indices())
    residuals = np.zeros((len(indices), n))
    points = []
    for row, idx in enumerate(indices):
        ts = grid.node_t(idx)
        points.append(ts)
        first, second = _grid_jet(grid, idx)
        xs = grid.values[idx]
        point = JetPoint(ts, tuple(xs), tuple(tuple(first[i]) for i in range(n)))
        hinv = [[scalar_value(e) for e in r] for r in h.inverse_at(ts)]
        hch = h_christoffel_values(h, ts)
        g_vec = gcal_values(L, h, point, dims)
        for k in range(n):
            acc = 0.0
            for a in range(p):
                for b in range(p):
                    lap = second[k, a, b]
                    for c in range(p):
                        lap -= scalar_value(hch[c][a][b]) * first[k, c]
                    acc += hinv[a][b] * lap
            residuals[row, k] = acc + 2.0 * scalar_value(g_vec[k])
    max_norm = float(np.max(np.abs(residuals))) if len(indices) else 0.0
    rms = float(np.sqrt(np.mean(residuals ** 2))) if len(indices) else 0.0
    return ResidualField(indices=indices, points=points, residuals=residuals,
                         max_norm=max_norm, rms=rms)


# --- Action values ----------------------------------------------------------------


def action_value(L, h: TemporalMetric, target) -> float:
    """Trapezoidal quadrature of L * sqrt(|det h|) over a trajectory (p = 1)
    or a lattice map (p >= 2, one-sided second-order edges for velocities)."""
    if isinstance(target, Trajectory):
        vals = []
        for t, x, y in zip(target.t, target.x, target.y):
            point = JetPoint((t,), tuple(x), tuple((yi,) for yi in y))
            h11 = scalar_value(h.matrix_at((t,))[0][0])
            vals.append(scalar_value(L(point)) * math.sqrt(abs(h11)))
        dt = target.t[1] - target.t[0]
        vals = np.asarray(vals)
        return float(dt * (0.5 * vals[0] + vals[1:-1].sum() + 0.5 * vals[-1]))
    if isinstance(target, GridMap):
        return _grid_action(L, h, target)
    raise DimensionError("action targets are Trajectory or GridMap")


def _grid_velocity(grid: GridMap, idx):
    """First derivatives at any node: central interior, 3-point one-sided at
    the boundary (both second order)."""
    p, n = grid.dims.p, grid.dims.n
    v = grid.values
    sp = grid.spacing
    out = np.zeros((n, p))

    def shift(base, axis, step):
        lst = list(base)
        lst[axis] += step
        return tuple(lst)

    for a in range(p):
        k = idx[a]
        s = grid.shape[a]
        if 0 < k < s - 1:
            out[:, a] = (v[shift(idx, a, 1)] - v[shift(idx, a, -1)]) / (2 * sp[a])
        elif k == 0:
            out[:, a] = (-3 * v[idx] + 4 * v[shift(idx, a, 1)] - v[shift(idx, a, 2)]) / (2 * sp[a])
        else:
            out[:, a] = (3 * v[idx] - 4 * v[shift(idx, a, -1)] + v[shift(idx, a, -2)]) / (2 * sp[a])
    return out


def _grid_action(L, h: TemporalMetric, grid: GridMap) -> float:
    weights = None
    for s in grid.shape:
        w = np.ones(s)
        w[0] = w[-1] = 0.5
        weights = w if weights is None else np.multiply.outer(weights, w)
    total = 0.0
    n = grid.dims.n
    for idx in np.ndindex(grid.shape):
        ts = grid.node_t(idx)
        first = _grid_velocity(grid, idx)
        point = JetPoint(ts, tuple(grid.values[idx]), tuple(tuple(first[i]) for i in range(n)))
        hmat = [[scalar_value(e) for e in r] for r in h.matrix_at(ts)]
        det = float(np.linalg.det(np.array(hmat))) if len(hmat) > 1 else hmat[0][0]
        total += weights[idx] * scalar_value(L(point)) * math.sqrt(abs(det))
    cell = 1.0
    for sp in grid.spacing:
        cell *= sp
    return total * cell
