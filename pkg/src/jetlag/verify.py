"""The `verify` invariant suite: every structural identity the library
promises, run against one problem instance and reported check by check."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .calculus import DiffConfig, d2, fd_crosscheck, v_coord, x_coord
from .cartan import cartan_connection, metric_compatibility
from .config import ProblemInstance
from .connection import (
    canonical_nonlinear_connection,
    euler_lagrange_residual,
    gcal_values,
    jet_map_from_fields,
    spray_data,
    spray_entities,
)
from .curvature import curvature_table, table_zero_audit, torsion_table
from .errors import DecompositionError
from .fields import ExpressionField
from .regularity import electrodynamics_decompose, kronecker_test, sample_points
from .scalars import scalar_value


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tol: float
    detail: str = ""

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst": self.worst,
            "tolerance": self.tol,
            "detail": self.detail,
        }


def _points(instance: ProblemInstance, count: int, salt: int = 0):
    return sample_points(instance.dims, instance.sampling["box"], count,
                         seed=instance.seed + salt)


def run_checks(instance: ProblemInstance, point_budget: int = 6) -> list:
    """Run every invariant applicable to the instance; returns CheckResults.

    A failed prerequisite (e.g. an irregular Lagrangian) short-circuits the
    dependent checks with explicit failures rather than exceptions.
    """
    L, h, dims = instance.L, instance.h, instance.dims
    tols = instance.tolerances
    checks: list[CheckResult] = []
    pts = _points(instance, point_budget)

    # Temporal metric sanity.
    msample = h.validate_samples([pt.t for pt in pts])
    checks.append(CheckResult(
        name="temporal_metric_signature",
        passed=msample["ok"],
        worst=float(len(msample["issues"])),
        tol=0.0,
        detail="; ".join(i["issue"] for i in msample["issues"][:3]),
    ))

    # Forward-mode vs central differences on L.
    worst = 0.0
    ok = True
    for pt in pts[:3]:
        rep = fd_crosscheck(L, pt, dims, DiffConfig(crosscheck_tol=tols["crosscheck"]))
        worst = max(worst, rep.max_rel_discrepancy)
        ok = ok and rep.passed
    checks.append(CheckResult("ad_fd_crosscheck", ok, worst, tols["crosscheck"]))

    # Symmetry of mixed second derivatives under argument swap.
    worst = 0.0
    for pt in pts[:3]:
        for i in range(dims.n):
            for a in range(dims.p):
                one = d2(L, pt, x_coord(i), v_coord(i, a))
                two = d2(L, pt, v_coord(i, a), x_coord(i))
                scale = max(abs(one), abs(two), 1.0)
                worst = max(worst, abs(one - two) / scale)
    checks.append(CheckResult("schwartz_symmetry", worst <= 1e-9, worst, 1e-9))

    # Block regularity.
    verdict = kronecker_test(L, h, instance.sampling["box"],
                             K=instance.sampling["count"],
                             tol=tols["regularity"], seed=instance.seed)
    checks.append(CheckResult(
        "kronecker_regularity", verdict.is_kronecker, verdict.max_block_residual,
        tols["regularity"], "; ".join(verdict.diagnostics[:3]),
    ))
    if not verdict.is_kronecker:
        checks.append(CheckResult("downstream_invariants", False, math.inf, 0.0,
                                  "skipped: Lagrangian is not block-regular"))
        return checks

    deco = None
    if dims.p >= 2 or not verdict.velocity_dependent_g:
        try:
            deco = electrodynamics_decompose(L, h, base_points=pts)
            checks.append(CheckResult("decomposition_roundtrip", True,
                                      deco.reassembly_residual, 1e-8))
        except DecompositionError as exc:
            checks.append(CheckResult("decomposition_roundtrip", False, math.inf,
                                      1e-8, str(exc)))
            return checks

    # Spray identities.
    worst_sum = 0.0
    worst_trace = 0.0
    for pt in pts:
        pack = spray_entities(L, h, pt, decomposition=deco)
        worst_sum = max(worst_sum, float(np.max(np.abs(pack.Gc - (pack.S + pack.Hc + pack.J)))))
        hinv = [[scalar_value(e) for e in row] for row in h.inverse_at(pt.t)]
        for l in range(dims.n):
            acc = 0.0
            for a in range(dims.p):
                for b in range(dims.p):
                    acc += hinv[a][b] * pack.G_spatial.get((l, a), b)
            worst_trace = max(worst_trace, abs(acc - pack.Gc[l]))
    checks.append(CheckResult("spray_entity_sum", worst_sum <= 1e-12, worst_sum, 1e-12))
    checks.append(CheckResult("h_trace_identity", worst_trace <= 1e-8, worst_trace, 1e-8))

    # Euler-Lagrange consistency: g^{ki}/2-weighted residual equals the
    # rearranged form on a smooth test map.
    rng = random.Random(instance.seed + 101)
    coef = [[rng.uniform(-0.4, 0.4) for _ in range(dims.p)] for _ in range(dims.n)]
    off = [rng.uniform(-0.2, 0.2) for _ in range(dims.n)]
    quad = [[rng.uniform(-0.2, 0.2) for _ in range(dims.p)] for _ in range(dims.n)]
    sources = []
    for i in range(dims.n):
        terms = [f"{off[i]!r}"]
        for a in range(dims.p):
            terms.append(f"{coef[i][a]!r}*t{a+1}")
            terms.append(f"{quad[i][a]!r}*t{a+1}^2")
        sources.append(" + ".join(terms))
    jm = jet_map_from_fields([ExpressionField(s, dims) for s in sources], dims)
    worst_el = 0.0
    for pt in pts[:3]:
        mid = jm.point_at(pt.t)
        res = euler_lagrange_residual(L, h, jm, pt.t)
        data = spray_data(L, h, mid, dims)
        ginv = [[scalar_value(e) for e in row] for row in data.ginv]
        hinv = [[scalar_value(e) for e in row] for row in h.inverse_at(pt.t)]
        from .metric_engine import h_christoffel_values

        hch = h_christoffel_values(h, pt.t)
        xab = jm.d2x(pt.t)
        for k in range(dims.n):
            weighted = 0.5 * sum(ginv[k][i] * res[i] for i in range(dims.n))
            lap = 0.0
            for a in range(dims.p):
                for b in range(dims.p):
                    term = xab[k][a][b]
                    for c in range(dims.p):
                        term -= scalar_value(hch[c][a][b]) * mid.v[k][c]
                    lap += hinv[a][b] * term
            g_vec = gcal_values(L, h, mid, dims)
            worst_el = max(worst_el, abs(weighted - (lap + 2.0 * scalar_value(g_vec[k]))))
    checks.append(CheckResult("el_rearrangement", worst_el <= 1e-7, worst_el, 1e-7))

    # Cartan pack: compatibility, symmetry, zero audits, antisymmetry.
    conn = canonical_nonlinear_connection(L, h, decomposition=deco)
    pack = cartan_connection(L, h, conn, decomposition=deco)
    worst_compat = 0.0
    for pt in pts[:4]:
        compat = metric_compatibility(pack, pt)
        worst_compat = max(worst_compat, max(compat.values()))
    checks.append(CheckResult("cartan_metric_compatibility",
                              worst_compat <= tols["compatibility"],
                              worst_compat, tols["compatibility"]))

    worst_sym = 0.0
    for pt in pts[:4]:
        co = pack.coefficients_at(pt)
        for i in range(dims.n):
            for j in range(dims.n):
                for k in range(dims.n):
                    worst_sym = max(worst_sym, abs(scalar_value(co.l[i][j][k]) - scalar_value(co.l[i][k][j])))
                    for c in range(dims.p):
                        worst_sym = max(worst_sym, abs(scalar_value(co.c[i][j][k][c]) - scalar_value(co.c[i][k][j][c])))
    checks.append(CheckResult("cartan_coefficient_symmetry", worst_sym <= 1e-9, worst_sym, 1e-9))

    audit = table_zero_audit(pack, conn, h, pts[:2])
    checks.append(CheckResult("table_zero_audit", audit.passed, audit.worst, 1e-7,
                              audit.worst_cell))

    worst_anti = 0.0
    for pt in pts[:2]:
        tor = torsion_table(pack, conn, h, pt)
        cur = curvature_table(pack, conn, h, pt, torsion=tor)
        worst_anti = max(worst_anti, _antisymmetry_defect(tor, cur, dims))
    checks.append(CheckResult("torsion_curvature_antisymmetry",
                              worst_anti <= 1e-9, worst_anti, 1e-9))

    # Reductions applicable to the instance.
    if instance.g_explicit is not None and dims.p == 1 and h.constant:
        g_expl = instance.g_explicit
        autonomous = not any(
            e.uses_velocity() or _uses_time(e) for row in g_expl.entries for e in row
        )
        if autonomous and instance.L.structure is not None and instance.L.structure.u_entries is None:
            from .metric_engine import g_christoffel_values

            worst_red = 0.0
            for pt in pts[:3]:
                gamma = g_christoffel_values(g_expl, pt)
                nval = conn.n_at(pt)
                for i in range(dims.n):
                    for j in range(dims.n):
                        expect = sum(scalar_value(gamma[i][j][k]) * pt.v[k][0] for k in range(dims.n))
                        worst_red = max(worst_red, abs(scalar_value(nval[i][0][j]) - expect))
            checks.append(CheckResult("classical_reduction", worst_red <= 1e-8, worst_red, 1e-8))
    return checks


def _uses_time(entry) -> bool:
    ast = getattr(entry, "ast", None)
    if ast is None:
        return True
    from .dsl import used_variables

    return any(kind == "t" for kind, _, _ in used_variables(ast))


def _antisymmetry_defect(tor, cur, dims) -> float:
    n, p = dims.n, dims.p
    worst = 0.0
    for m in range(n):
        for mu in range(p):
            for a in range(p):
                for b in range(p):
                    worst = max(worst, abs(tor.tt_v.get((m, mu), a, b) + tor.tt_v.get((m, mu), b, a)))
            for i in range(n):
                for j in range(n):
                    worst = max(worst, abs(tor.mm_v.get((m, mu), i, j) + tor.mm_v.get((m, mu), j, i)))
    for l in range(n):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    worst = max(worst, abs(cur.mm_m.get(l, i, j, k) + cur.mm_m.get(l, i, k, j)))
    for a in range(p):
        for e in range(p):
            for b in range(p):
                for c in range(p):
                    worst = max(worst, abs(cur.tt_t.get(a, e, b, c) + cur.tt_t.get(a, e, c, b)))
    return worst


def checks_to_json(checks) -> dict:
    return {
        "passed": all(c.passed for c in checks),
        "checks": [c.to_json_dict() for c in checks],
    }
