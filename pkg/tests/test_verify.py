"""Verdict layer: theorem, corollary, and lemma checks per surface."""

import numpy as np
import pytest

from curvspec import verify
from curvspec.errors import BoundViolationError, CurvaturePositivityError

from conftest import get_mesh, get_pipeline


class TestSphereCase:
    @pytest.mark.parametrize("r", [0, 1])
    def test_unit_sphere_is_sphere_like(self, r):
        rep = verify.verify_theorem(get_mesh("sphere", 3), r)
        assert rep.verdict == verify.SPHERE_LIKE
        assert rep.lambda_1 == pytest.approx(-2.0, abs=0.05)
        assert abs(rep.lambda_2) <= rep.tol_sphere
        assert rep.multiplicity == 3
        assert rep.cluster_position_alignment > 0.99
        assert rep.sphere_distance < 1e-10
        assert rep.r == r and len(rep.eigenvalues) == 5

    @pytest.mark.parametrize("radius_kind,radius", [("sphere_small", 0.5), ("sphere_big", 2.0)])
    def test_scaled_spheres_detected(self, radius_kind, radius):
        rep = verify.verify_theorem(get_mesh(radius_kind, 3), 0)
        assert rep.verdict == verify.SPHERE_LIKE
        # lambda_1 scales like 1/R^2 while the verdict stays put
        assert rep.lambda_1 == pytest.approx(-2.0 / radius**2, rel=0.01)

    def test_bumped_sphere_still_sphere_like(self):
        rep = verify.verify_theorem(get_mesh("bumped", 3), 1)
        assert rep.verdict == verify.SPHERE_LIKE
        assert 0.0 < rep.sphere_distance < 0.05
        assert rep.lambda_2 < 0.0          # perturbation pushes down, within tol

    def test_sphere_distance_quadratic_in_bump(self):
        def dist(kind):
            mesh, field, _ = get_pipeline(kind, 3, 0)
            return verify.sphere_distance(mesh, field)

        assert 3.0 < dist("bumped") / dist("bumped_half") < 5.0


class TestStrictCase:
    @pytest.mark.parametrize("r", [0, 1])
    def test_ellipsoid_strictly_negative(self, r):
        rep = verify.verify_theorem(get_mesh("ellipsoid", 3), r)
        assert rep.verdict == verify.STRICTLY_NEGATIVE
        assert rep.lambda_2 < -rep.tol_sphere
        assert rep.sphere_distance > 0.05
        lem = verify.lemma_two_negative(get_mesh("ellipsoid", 3), r)
        assert rep.d_sum >= -lem.thresholds.sum()
        if r == 1:
            # at r = 0 the sum straddles zero at mesh resolution; the r = 1
            # sum is bounded away from it
            assert rep.d_sum > 1.0

    def test_mild_ellipsoid_strictly_negative(self):
        # soundness should not depend on how far from round the input is
        rep = verify.verify_theorem(get_mesh("ellipsoid_mild", 4), 0)
        assert rep.verdict == verify.STRICTLY_NEGATIVE
        assert rep.lambda_2 < -rep.tol_sphere

    def test_headline_inequality_on_convex_meshes(self):
        # lambda_2 <= tol on everything convex we have, both orders; a
        # Violation verdict anywhere is a bug tripwire, never data
        kinds = ("sphere", "sphere_small", "sphere_big",
                 "ellipsoid", "ellipsoid_mild", "bumped")
        for kind in kinds:
            for r in (0, 1):
                rep = verify.verify_theorem(get_mesh(kind, 3), r)
                assert rep.verdict != verify.VIOLATION
                assert rep.lambda_2 <= rep.tol_sphere

    def test_torus_r0_completes(self):
        rep = verify.verify_theorem(get_mesh("torus", 1), 0)
        assert rep.verdict == verify.STRICTLY_NEGATIVE
        assert rep.lambda_2 < 0.0

    def test_torus_r1_gated(self):
        with pytest.raises(CurvaturePositivityError) as err:
            verify.verify_theorem(get_mesh("torus", 1), 1)
        assert err.value.vertex is not None
        assert err.value.h_value <= 0.0


class TestCorollary:
    @pytest.mark.parametrize("kind", ["sphere", "ellipsoid"])
    @pytest.mark.parametrize("r", [0, 1])
    def test_domination_and_comparison(self, kind, r):
        rep = verify.verify_corollary(get_mesh(kind, 3), r)
        assert rep.domination_min_slack >= -1e-10
        assert rep.comparison_ok
        assert rep.lambda_2_t <= rep.lambda_2_pencil + 1e-8

    def test_sphere_t_eigenvalue_is_zero(self):
        rep = verify.verify_corollary(get_mesh("sphere", 3), 1)
        assert rep.lambda_2_t == pytest.approx(0.0, abs=0.05)

    def test_embedded_in_theorem_report(self):
        rep = verify.verify_theorem(get_mesh("sphere", 3), 1)
        cor = verify.verify_corollary(get_mesh("sphere", 3), 1)
        assert rep.lambda_2_corollary == pytest.approx(cor.lambda_2_t, abs=1e-12)


class TestLemma:
    def test_ellipsoid_witness(self):
        rep = verify.lemma_two_negative(get_mesh("ellipsoid", 3), 1)
        assert rep.applicable
        assert rep.negative_count >= 2
        assert rep.d[rep.witness] > rep.thresholds[rep.witness]

    def test_sphere_not_applicable(self):
        rep = verify.lemma_two_negative(get_mesh("sphere", 3), 1)
        assert not rep.applicable
        assert rep.negative_count == 1
        assert np.all(rep.d <= rep.thresholds)


class TestConfig:
    def test_explicit_tol_overrides_factor(self):
        cfg = verify.VerifyConfig(tol_sphere=0.5)
        rep = verify.verify_theorem(get_mesh("ellipsoid", 3), 0, cfg)
        assert rep.tol_sphere == 0.5

    def test_factor_scales_with_potential(self):
        mesh = get_mesh("sphere", 3)
        loose = verify.verify_theorem(mesh, 0, verify.VerifyConfig(tol_sphere_factor=0.5))
        tight = verify.verify_theorem(mesh, 0, verify.VerifyConfig(tol_sphere_factor=0.01))
        assert loose.tol_sphere == pytest.approx(50 * tight.tol_sphere, rel=1e-9)
        assert loose.spectral_scale == pytest.approx(tight.spectral_scale)

    def test_reports_deterministic(self):
        mesh = get_mesh("ellipsoid", 3)
        a = verify.verify_theorem(mesh, 1)
        b = verify.verify_theorem(mesh, 1)
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
        assert a.verdict == b.verdict and a.d_sum == b.d_sum
