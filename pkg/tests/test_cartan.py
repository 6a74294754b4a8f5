"""Cartan and Berwald connections, covariant derivatives, uniqueness."""

import math

import numpy as np
import pytest

from jetlag.cartan import (
    Coefficients,
    LinearConnectionPack,
    MHorizontal,
    berwald_connection,
    cartan_connection,
    covariant_derivative,
    metric_compatibility,
    uniqueness_probe,
)
from jetlag.connection import canonical_nonlinear_connection
from jetlag.fields import (
    ElectrodynamicsLagrangian,
    ExpressionField,
    LagrangianModel,
    constant_field,
)
from jetlag.jet_core import Dims, JetPoint, spatial_lower, spatial_upper
from jetlag.metric_engine import SpatialMetricField, TemporalMetric, g_christoffel_values
from jetlag.regularity import electrodynamics_decompose, sample_points
from jetlag.scalars import scalar_value

from conftest import corpus_instance, sphere_config
from jetlag.config import assemble


def build_cartan(inst):
    deco = electrodynamics_decompose(inst.L, inst.h) if inst.dims.p >= 2 else None
    conn = canonical_nonlinear_connection(inst.L, inst.h, decomposition=deco)
    pack = cartan_connection(inst.L, inst.h, conn, decomposition=deco)
    return conn, pack


class TestCartanCoefficients:
    def test_flat_all_zero(self):
        d = Dims(2, 2)
        h = TemporalMetric.flat(2)
        g = [[constant_field(1.0 if i == j else 0.0) for j in range(2)] for i in range(2)]
        L = LagrangianModel.from_family(ElectrodynamicsLagrangian(d, h, g), "harmonic")
        conn = canonical_nonlinear_connection(L, h)
        pack = cartan_connection(L, h, conn)
        pt = JetPoint((0.2, -0.4), (0.5, 0.6), ((0.3, 0.2), (-0.1, 0.5)))
        co = pack.coefficients_at(pt)
        for block in (co.hbar, co.g, co.l, co.c):
            assert np.max(np.abs(np.array(block))) == 0.0

    def test_p2_general_form(self):
        # C == 0, L == Gamma(t,x), G == (g^{ki}/2) dg_ij/dt
        inst = corpus_instance("non_autonomous", 2, 2)
        conn, pack = build_cartan(inst)
        pt = sample_points(inst.dims, [-1, 1], 1, seed=5)[0]
        co = pack.coefficients_at(pt)
        assert np.max(np.abs(np.array(co.c))) == 0.0
        deco = electrodynamics_decompose(inst.L, inst.h)
        gs = SpatialMetricField.from_matrix_function(2, deco.g_field)
        gamma = g_christoffel_values(gs, pt)
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    assert scalar_value(co.l[i][j][k]) == pytest.approx(
                        scalar_value(gamma[i][j][k]), abs=1e-10)
        # frozen spot-check of the G block on the known g entries
        assert any(abs(scalar_value(co.g[k][j][c])) > 1e-6
                   for k in range(2) for j in range(2) for c in range(2))

    def test_autonomous_matches_berwald(self):
        inst = corpus_instance("autonomous", 2, 2)
        conn, pack = build_cartan(inst)
        berwald = berwald_connection(inst.h, inst.g_explicit, inst.dims)
        pts = sample_points(inst.dims, [-1, 1], 3, seed=9)
        for pt in pts:
            a = pack.coefficients_at(pt)
            b = berwald.coefficients_at(pt)
            assert np.allclose(np.array(a.g, dtype=float), 0.0, atol=1e-10)
            assert np.allclose(np.array(a.l, dtype=float), np.array(b.l, dtype=float), atol=1e-9)
            assert np.allclose(np.array(a.c, dtype=float), 0.0, atol=1e-12)

    def test_cartan_berwald_distinct_nonautonomous(self):
        inst = corpus_instance("non_autonomous", 2, 2)
        conn, pack = build_cartan(inst)
        pt = sample_points(inst.dims, [-1, 1], 1, seed=2)[0]
        co = pack.coefficients_at(pt)
        g_block = np.array([[[scalar_value(e) for e in r] for r in m] for m in co.g])
        assert np.max(np.abs(g_block)) > 1e-4  # Berwald would be exactly 0

    def test_p1_sphere_is_levi_civita(self):
        inst = assemble(sphere_config())
        conn, pack = build_cartan(inst)
        pt = JetPoint((0.1,), (0.9, 0.2), ((0.4,), (0.7,)))
        co = pack.coefficients_at(pt)
        th = 0.9
        assert scalar_value(co.l[0][1][1]) == pytest.approx(-math.sin(th) * math.cos(th), abs=1e-10)
        assert scalar_value(co.l[1][0][1]) == pytest.approx(math.cos(th) / math.sin(th), abs=1e-10)
        assert np.max(np.abs(np.array(co.g, dtype=float))) <= 1e-12
        assert np.max(np.abs(np.array(co.c, dtype=float))) <= 1e-12

    def test_coefficient_symmetries(self):
        for kind, p, n in (("non_autonomous", 2, 2), ("harmonic", 1, 2)):
            inst = corpus_instance(kind, p, n)
            conn, pack = build_cartan(inst)
            pt = sample_points(inst.dims, [-1, 1], 1, seed=1)[0]
            co = pack.coefficients_at(pt)
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        assert scalar_value(co.l[i][j][k]) == pytest.approx(
                            scalar_value(co.l[i][k][j]), abs=1e-9)
                        for c in range(p):
                            assert scalar_value(co.c[i][j][k][c]) == pytest.approx(
                                scalar_value(co.c[i][k][j][c]), abs=1e-9)

    def test_p1_velocity_dependent_c_frozen(self):
        # L = y^2 + y^4/2 gives g = 1 + 3y^2 and the classical coefficient
        # C^{1(1)}_{1(1)} = (g^{-1}/2) dg/dy = 3y / (1 + 3y^2)
        d = Dims(1, 1)
        h = TemporalMetric.flat(1)
        L = LagrangianModel.from_expression("v1_1^2 + 0.5*v1_1^4", d)
        conn = canonical_nonlinear_connection(L, h)
        pack = cartan_connection(L, h, conn)
        for y in (0.6, -0.4, 1.1):
            pt = JetPoint((0.0,), (0.2,), ((y,),))
            co = pack.coefficients_at(pt)
            expect = 3.0 * y / (1.0 + 3.0 * y * y)
            assert scalar_value(co.c[0][0][0][0]) == pytest.approx(expect, abs=1e-12)

    def test_vertical_coefficient_delta_structure(self):
        inst = corpus_instance("autonomous", 2, 2)
        conn, pack = build_cartan(inst)
        pt = sample_points(inst.dims, [-1, 1], 1, seed=3)[0]
        co = pack.coefficients_at(pt)
        vg = pack.vertical_g(pt)
        for (k, b, i, a, c), val in vg.items():
            expect = 0.0
            if b == a:
                expect += scalar_value(co.g[k][i][c])
            if k == i:
                expect -= scalar_value(co.hbar[b][a][c])
            assert scalar_value(val) == pytest.approx(expect, abs=1e-12)
        vl = pack.vertical_l(pt)
        for (k, b, i, a, j), val in vl.items():
            expect = scalar_value(co.l[k][i][j]) if b == a else 0.0
            assert scalar_value(val) == pytest.approx(expect, abs=1e-12)


class TestMetricCompatibility:
    @pytest.mark.parametrize("kind,p,n", [
        ("harmonic", 1, 2), ("autonomous", 1, 2), ("non_autonomous", 1, 2),
        ("harmonic", 2, 2), ("autonomous", 2, 2), ("non_autonomous", 2, 2),
        ("non_autonomous", 3, 2),
    ])
    def test_all_six_identities(self, kind, p, n):
        inst = corpus_instance(kind, p, n)
        conn, pack = build_cartan(inst)
        pts = sample_points(inst.dims, [-1, 1], 3, seed=14)
        for pt in pts:
            compat = metric_compatibility(pack, pt)
            worst = max(compat.values())
            assert worst <= 1e-7, (kind, p, n, compat)

    def test_velocity_dependent_p1(self):
        d = Dims(1, 1)
        h = TemporalMetric.flat(1)
        L = LagrangianModel.from_expression("v1_1^2 + 0.5*v1_1^4", d)
        conn = canonical_nonlinear_connection(L, h)
        pack = cartan_connection(L, h, conn)
        pt = JetPoint((0.1,), (0.4,), ((0.6,),))
        compat = metric_compatibility(pack, pt)
        assert max(compat.values()) <= 1e-9

    def test_suite_matches_covariant_derivative_op(self):
        # the fast compatibility loop and the generic operator implement the
        # same slot rules; pin them against each other on one instance
        inst = corpus_instance("non_autonomous", 1, 2)
        conn, pack = build_cartan(inst)
        pt = sample_points(inst.dims, [-1, 1], 1, seed=15)[0]
        compat = metric_compatibility(pack, pt)
        g_field = lambda q: pack.g_matrix_at(q)
        g_val = (spatial_lower(2), spatial_lower(2))
        worst_op = 0.0
        for k in range(2):
            out = covariant_derivative(g_field, g_val, MHorizontal(k), pack, conn, pt)
            worst_op = max(worst_op, out.max_abs())
        assert compat["g_m_horizontal"] == pytest.approx(worst_op, abs=1e-12)


class TestCovariantDerivative:
    def test_empty_valence_is_adapted_derivative(self):
        from jetlag.connection import SpatialAdapted, adapted_derivative

        inst = corpus_instance("non_autonomous", 1, 2)
        conn, pack = build_cartan(inst)
        pt = sample_points(inst.dims, [-1, 1], 1, seed=19)[0]
        fld = ExpressionField("sin(x1)*v2_1 + t1*x2", inst.dims)
        for k in range(2):
            cov = covariant_derivative(fld, (), MHorizontal(k), pack, conn, pt)
            adapted = adapted_derivative(fld, pt, SpatialAdapted(k), conn)
            assert cov == pytest.approx(adapted, abs=1e-14)

    def test_scalar_is_adapted_derivative(self):
        # a 1-slot tensor whose entries ignore v reduces to plain partials
        inst = corpus_instance("harmonic", 1, 2)
        conn, pack = build_cartan(inst)
        pt = JetPoint((0.3,), (0.7, 0.4), ((0.2,), (0.5,)))

        fld = lambda q: [q.x[0] * q.x[1], q.x[1]]
        out = covariant_derivative(fld, (spatial_upper(2),), MHorizontal(0),
                                   pack, conn, pt)
        co = pack.coefficients_at(pt)
        base = [pt.x[1], 0.0]
        vals = fld(pt)
        expect = [
            base[m] + sum(scalar_value(co.l[m][l][0]) * vals[l] for l in range(2))
            for m in range(2)
        ]
        assert np.allclose(out.data, expect, atol=1e-10)

    def test_berwald_sphere_block(self):
        d = Dims(2, 2)
        h = TemporalMetric.flat(2)
        gs = SpatialMetricField(n=2, entries=[
            [constant_field(1.0), constant_field(0.0)],
            [constant_field(0.0), ExpressionField("sin(x1)^2", d)]])
        pack = berwald_connection(h, gs, d)
        pt = JetPoint((0.1, 0.2), (0.9, 0.5), ((0.2, 0.1), (0.3, -0.2)))
        co = pack.coefficients_at(pt)
        gamma = g_christoffel_values(gs, pt)
        assert np.allclose(np.array(co.l, dtype=float), np.array(
            [[[scalar_value(gamma[i][j][k]) for k in range(2)] for j in range(2)]
             for i in range(2)]), atol=1e-12)

    def test_berwald_metric_compatibility_spatial_only(self):
        # Berwald is metric for x-only pairs in all three directions
        d = Dims(2, 2)
        h = TemporalMetric.flat(2)
        gs = SpatialMetricField(n=2, entries=[
            [constant_field(1.0), constant_field(0.0)],
            [constant_field(0.0), ExpressionField("sin(x1)^2", d)]])
        pack = berwald_connection(h, gs, d)
        pt = JetPoint((0.1, 0.2), (0.9, 0.5), ((0.2, 0.1), (0.3, -0.2)))
        compat = metric_compatibility(pack, pt)
        assert max(compat.values()) <= 1e-9


class TestUniquenessProbe:
    def test_cartan_self_consistency(self):
        inst = assemble(sphere_config())
        conn, pack = build_cartan(inst)
        pts = sample_points(inst.dims, inst.sampling["box"], 3, seed=21)
        rep = uniqueness_probe(pack, inst.L, inst.h, conn, pts)
        assert rep.passed
        assert max(rep.worst.values()) <= 1e-10

    def test_injected_fault_detected(self):
        inst = assemble(sphere_config())
        conn, pack = build_cartan(inst)

        def perturbed(point):
            co = pack.coefficients_at(point)
            l_new = [[[scalar_value(co.l[i][j][k]) for k in range(2)]
                      for j in range(2)] for i in range(2)]
            l_new[0][0][0] += 1e-3
            return Coefficients(hbar=co.hbar, g=co.g, l=l_new, c=co.c)

        bad = LinearConnectionPack(dims=pack.dims, kind="custom",
                                   coefficients_at=perturbed,
                                   g_matrix_at=pack.g_matrix_at,
                                   conn=conn, h=inst.h)
        pts = sample_points(inst.dims, inst.sampling["box"], 2, seed=22)
        rep = uniqueness_probe(bad, inst.L, inst.h, conn, pts)
        assert not rep.passed
        assert rep.worst["L"] == pytest.approx(1e-3, rel=1e-6)
        assert rep.worst_index["L"] == (0, 0, 0)

    def test_berwald_mismatch_on_nonautonomous(self):
        inst = corpus_instance("non_autonomous", 2, 2)
        berwald = berwald_connection(inst.h, inst.g_explicit, inst.dims)
        pts = sample_points(inst.dims, [-1, 1], 2, seed=23)
        rep = uniqueness_probe(berwald, inst.L, inst.h, berwald.conn, pts)
        assert not rep.passed
        assert rep.worst["G"] > 1e-4
