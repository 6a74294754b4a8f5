"""Scalar fields on the jet space: parsed expressions and builtin families.

A scalar field is any callable JetPoint -> scalar that works for plain
floats and for the derivative scalars in ``scalars``; everything downstream
(Hessians, sprays, connections) only assumes that much.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import dsl
from .errors import EvalDomainError
from .jet_core import Dims, JetPoint
from .metric_engine import TemporalMetric


class ExpressionField:
    """Field backed by a parsed expression.

    Evaluation runs a compiled closure; if that hits a domain error the tree
    interpreter re-runs the evaluation to attach the offending node offset.
    """

    def __init__(self, source, dims: Dims):
        if isinstance(source, str):
            self.source = source
            self.ast = dsl.parse(source, dims)
        else:
            self.ast = source
            self.source = dsl.format_ast(source)
        self.dims = dims
        self._fast = dsl.compile_ast(self.ast)

    def __call__(self, point: JetPoint):
        try:
            return self._fast(point.t, point.x, point.v)
        except (EvalDomainError, ZeroDivisionError, ValueError, OverflowError):
            return dsl.eval_ast(self.ast, point)

    def __repr__(self):
        return f"ExpressionField({self.source!r})"

    def uses_velocity(self) -> bool:
        return any(kind == "v" for kind, _, _ in dsl.used_variables(self.ast))

    def uses_space(self) -> bool:
        return any(kind == "x" for kind, _, _ in dsl.used_variables(self.ast))


@dataclass
class CallableField:
    """Adapter for plain python callables with an optional label."""

    fn: object
    label: str = ""

    def __call__(self, point: JetPoint):
        return self.fn(point)


def constant_field(value: float):
    return CallableField(lambda pt, v=float(value): v, label=f"const {value}")


def temporal_entry(fld):
    """Adapt a JetPoint field that only reads t into a t-tuple callable, as
    the temporal metric expects."""
    return lambda ts: fld(JetPoint(ts, (), ()))


class ElectrodynamicsLagrangian:
    """Closed-form family L = h^{ab}(t) g_ij v^i_a v^j_b + U^a_i v^i_a + F.

    ``g_entries`` may depend on (t, x) (and on v only when p = 1),
    ``u_entries`` is an n x p matrix of (t, x) fields, ``f_entry`` a (t, x)
    field.  Evaluation is generic over the scalar kind, including the
    temporal-metric inversion.
    """

    def __init__(self, dims: Dims, h: TemporalMetric, g_entries, u_entries=None, f_entry=None):
        self.dims = dims
        self.h = h
        self.g_entries = g_entries
        self.u_entries = u_entries
        self.f_entry = f_entry

    def g_matrix(self, point: JetPoint):
        n = self.dims.n
        raw = [[self.g_entries[i][j](point) for j in range(n)] for i in range(n)]
        return [
            [(raw[i][j] + raw[j][i]) * 0.5 for j in range(n)]
            for i in range(n)
        ]

    def __call__(self, point: JetPoint):
        n, p = self.dims.n, self.dims.p
        hinv = self.h.inverse_at(point.t)
        g = self.g_matrix(point)
        v = point.v
        total = 0.0
        for a in range(p):
            for b in range(p):
                hab = hinv[a][b]
                if isinstance(hab, float) and hab == 0.0:
                    continue
                s = 0.0
                for i in range(n):
                    for j in range(n):
                        s = s + g[i][j] * (v[i][a] * v[j][b])
                total = total + hab * s
        if self.u_entries is not None:
            for i in range(n):
                for a in range(p):
                    total = total + self.u_entries[i][a](point) * v[i][a]
        if self.f_entry is not None:
            total = total + self.f_entry(point)
        return total

    def __repr__(self):
        return f"ElectrodynamicsLagrangian(p={self.dims.p}, n={self.dims.n})"


@dataclass
class LagrangianModel:
    """A Lagrangian plus what is known about its provenance."""

    dims: Dims
    field: object  # JetPoint -> scalar
    kind: str = "expression"  # expression | harmonic | electrodynamics
    structure: ElectrodynamicsLagrangian = None

    def __call__(self, point: JetPoint):
        return self.field(point)

    @classmethod
    def from_expression(cls, source: str, dims: Dims) -> "LagrangianModel":
        return cls(dims=dims, field=ExpressionField(source, dims), kind="expression")

    @classmethod
    def from_family(cls, family: ElectrodynamicsLagrangian, kind: str) -> "LagrangianModel":
        return cls(dims=family.dims, field=family, kind=kind, structure=family)
