"""Integral and variational identities tying curvature to the pencil."""

import dataclasses

import numpy as np
import pytest

from curvspec import eigen
from curvspec import identities as idn
from curvspec.errors import BoundViolationError, CurvaturePositivityError
from curvspec.curvature import compute_curvature

from conftest import get_mesh, get_pipeline


class TestPositionIdentity:
    def test_sphere_within_tolerance(self):
        mesh, field, pencil = get_pipeline("sphere", 3, 1)
        res = idn.lr_position_residual(mesh, field, pencil, 1)
        assert res.shape == (3,)
        assert np.max(res) < 0.05

    def test_sphere_residual_halves_under_refinement(self):
        worst = []
        for sub in (3, 4):
            mesh, field, pencil = get_pipeline("sphere", sub, 1)
            worst.append(np.max(idn.lr_position_residual(mesh, field, pencil, 1)))
        assert worst[1] < 0.7 * worst[0]

    def test_scale_invariance(self):
        small = get_pipeline("sphere_small", 3, 0)
        big = get_pipeline("sphere_big", 3, 0)
        r_small = np.max(idn.lr_position_residual(*small[:2], small[2], 0))
        r_big = np.max(idn.lr_position_residual(*big[:2], big[2], 0))
        assert r_small == pytest.approx(r_big, rel=1e-6)

    def test_ellipsoid_r0_ratio_under_refinement(self):
        coarse = idn.lr_position_residual(*get_pipeline("ellipsoid", 3, 0), 0)
        fine = idn.lr_position_residual(*get_pipeline("ellipsoid", 4, 0), 0)
        assert np.max(np.asarray(fine) / np.asarray(coarse)) < 0.6


class TestMinkowski:
    def test_sphere_near_exact(self):
        for r in (0, 1):
            mesh, field, _ = get_pipeline("sphere", 3, r)
            assert abs(idn.minkowski_residual(mesh, field, r)) < 1e-12
        # scaled sphere: both integrals equal 8 pi in the continuum and the
        # discrete quadratures cancel the same way
        mesh, field, _ = get_pipeline("sphere_big", 3, 1)
        assert abs(idn.minkowski_residual(mesh, field, 1)) < 1e-12

    def test_ellipsoid_decreases(self):
        vals = []
        for sub in (3, 4):
            mesh, field, _ = get_pipeline("ellipsoid", sub, 1)
            vals.append(abs(idn.minkowski_residual(mesh, field, 1)))
        assert vals[0] < 0.05
        assert vals[1] < vals[0]

    def test_flipped_orientation_rejected(self):
        # negating the curvatures drives the total H_1 negative; H_0 = 1 is
        # sign-blind so the r = 0 form stays well posed either way
        mesh, field, _ = get_pipeline("sphere", 2, 0)
        flipped = dataclasses.replace(field, vertex_kappas=-field.vertex_kappas)
        idn.minkowski_residual(mesh, flipped, 0)
        with pytest.raises(ValueError):
            idn.minkowski_residual(mesh, flipped, 1)


class TestTestFunctions:
    def test_shape_and_scaling(self):
        mesh, field, pencil = get_pipeline("sphere", 3, 0)
        f = idn.test_functions(mesh, field, 0)
        assert f.shape == (mesh.n_vertices, 3)
        # on the unit sphere W is constant, so f_i = W x_i exactly
        expect = field.w[:, None] * mesh.vertices
        assert np.allclose(f, expect, atol=1e-10)

    def test_gate_propagates(self):
        torus = get_mesh("torus", 1)
        field = compute_curvature(torus, r=0)
        with pytest.raises(CurvaturePositivityError):
            idn.test_functions(torus, field, 1)


class TestDQuantities:
    def test_sphere_d_vanishes(self):
        mesh, field, pencil = get_pipeline("sphere", 3, 0)
        f = idn.test_functions(mesh, field, 0)
        dq = idn.d_quantities(mesh, pencil, f)
        norms = np.einsum("vi,v,vi->i", f, pencil.mass, f)
        assert np.max(np.abs(dq.d) / norms) < 1e-4
        assert np.max(np.abs(dq.orthogonality)) < 1e-12

    def test_ellipsoid_long_axis_positive(self):
        for r in (0, 1):
            mesh, field, pencil = get_pipeline("ellipsoid", 3, r)
            f = idn.test_functions(mesh, field, r)
            dq = idn.d_quantities(mesh, pencil, f)
            assert dq.d[0] > 1.0          # stretched axis needs lower energy
            assert dq.d_sum == pytest.approx(np.sum(dq.d))

    def test_projection_beats_raw(self):
        # the bumped sphere has no symmetry to cancel the raw pairing
        mesh, field, pencil = get_pipeline("bumped", 3, 1)
        f = idn.test_functions(mesh, field, 1)
        dq = idn.d_quantities(mesh, pencil, f)
        assert np.max(np.abs(dq.orthogonality_raw)) > 1e-8
        assert np.max(np.abs(dq.orthogonality)) < 1e-12

    def test_bump_dsum_grows_quadratically(self):
        # r = 1 only: at r = 0 the gap closes identically (H_0 = 1 turns
        # the power-mean step into an equality) so there is nothing to grow
        sums = []
        for kind in ("bumped", "bumped_half"):
            mesh, field, pencil = get_pipeline(kind, 4, 1)
            f = idn.test_functions(mesh, field, 1)
            sums.append(idn.d_quantities(mesh, pencil, f).d_sum)
        assert sums[0] > 0.0 and sums[1] > 0.0
        assert 3.0 < sums[0] / sums[1] < 5.0


class TestResolvent:
    def test_constrained_solve(self):
        _, _, pencil = get_pipeline("ellipsoid", 3, 1)
        res = idn.ZeroMeanResolvent(pencil)
        rng = np.random.default_rng(1)
        g = rng.normal(size=pencil.n_vertices)
        y = res.solve(g)
        assert abs(pencil.mass @ y) < 1e-10 * np.linalg.norm(y)
        mean = (pencil.mass @ g) / pencil.mass.sum()
        load = pencil.mass * (g - mean)
        err = np.linalg.norm(pencil.k_stiff @ y - load) / np.linalg.norm(load)
        assert err < 1e-10

    def test_solve_rhs_matches_solve(self):
        _, _, pencil = get_pipeline("sphere", 3, 0)
        res = idn.ZeroMeanResolvent(pencil)
        rng = np.random.default_rng(2)
        g = rng.normal(size=pencil.n_vertices)
        mean = (pencil.mass @ g) / pencil.mass.sum()
        assert np.allclose(res.solve_rhs(pencil.mass * (g - mean)), res.solve(g))

    def test_shifted_solve(self):
        _, _, pencil = get_pipeline("sphere", 3, 0)
        res = idn.ZeroMeanResolvent(pencil, shift=2.5)
        rng = np.random.default_rng(3)
        g = rng.normal(size=pencil.n_vertices)
        g -= (pencil.mass @ g) / pencil.mass.sum()
        y = res.solve(g)
        lhs = pencil.k_stiff @ y + 2.5 * pencil.mass * y
        assert np.allclose(lhs, pencil.mass * g, atol=1e-10)

    def test_bound_check_passes(self):
        _, _, pencil = get_pipeline("ellipsoid", 3, 1)
        margin = idn.resolvent_bound_check(pencil, mu=1.0, trials=50, seed=0)
        assert margin >= 0.0

    def test_bound_saturates_on_first_eigenvector(self):
        # g along the lowest nonzero mode is the equality case of the
        # resolvent inequality; any higher mode leaves real slack
        mesh, _, pencil = get_pipeline("sphere", 3, 0)
        spec = eigen.smallest_eigenpairs(pencil.k_stiff, pencil.mass, 5)
        lam1 = spec.eigenvalues[1]
        res = idn.ZeroMeanResolvent(pencil, shift=1.0)

        def margin(g):
            norm = lambda x: float(np.sqrt((pencil.mass * x) @ x))
            return norm(g) / (lam1 + 1.0) - norm(res.solve(g))

        assert abs(margin(spec.eigenvectors[:, 1])) < 1e-10
        assert margin(spec.eigenvectors[:, 4]) > 0.1

    def test_bound_check_detects_false_floor(self):
        # feeding a spectral floor that is too optimistic must trip the check
        _, _, pencil = get_pipeline("ellipsoid", 3, 1)
        with pytest.raises(BoundViolationError):
            idn.resolvent_bound_check(pencil, mu=1.0, trials=50, seed=0, lam1=50.0)

    def test_chain_residual_tiny(self):
        mesh, field, pencil = get_pipeline("ellipsoid", 3, 1)
        f = idn.test_functions(mesh, field, 1)
        assert idn.resolvent_pairing_residual(pencil, f) < 1e-8


class TestFullReport:
    def test_fields_cross_check(self):
        mesh, field, pencil = get_pipeline("ellipsoid", 3, 0)
        rep = idn.full_report(mesh, field, pencil)
        f = idn.test_functions(mesh, field, 0)
        dq = idn.d_quantities(mesh, pencil, f)
        assert np.allclose(rep.d, dq.d)
        assert rep.d_sum == pytest.approx(dq.d_sum)
        assert rep.dirichlet_minkowski_gap < 0.03
        assert rep.chain_residual < 1e-8
        assert rep.resolvent_bound_margin >= 0.0

    def test_report_deterministic(self):
        mesh, field, pencil = get_pipeline("sphere", 2, 0)
        a = idn.full_report(mesh, field, pencil, seed=5)
        b = idn.full_report(mesh, field, pencil, seed=5)
        assert a == b or np.allclose(a.resolvent_bound_margin, b.resolvent_bound_margin)
