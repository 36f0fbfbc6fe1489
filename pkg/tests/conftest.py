"""Shared fixtures: cached meshes, curvature fields, and pencils.

Building a subdiv-4 pipeline takes a noticeable fraction of a second and
many tests want the same few objects, so everything is memoized at module
scope by (shape, subdiv, r).  Tests must treat the returned objects as
read-only; TriMesh arrays are frozen, reports are frozen dataclasses.
"""

from functools import lru_cache

import pytest

from curvspec import assemble, curvature, surfaces


def make_surface(kind):
    return {
        "sphere": lambda: surfaces.Sphere(1.0),
        "sphere_small": lambda: surfaces.Sphere(0.5),
        "sphere_big": lambda: surfaces.Sphere(2.0),
        "ellipsoid": lambda: surfaces.Ellipsoid(2.0, 1.0, 1.0),
        "ellipsoid_mild": lambda: surfaces.Ellipsoid(1.2, 1.0, 1.0),
        "bumped": lambda: surfaces.BumpedSphere(1.0, 0.04, 3),
        "bumped_half": lambda: surfaces.BumpedSphere(1.0, 0.02, 3),
        "torus": lambda: surfaces.Torus(2.0, 0.5),
    }[kind]()


@lru_cache(maxsize=None)
def get_mesh(kind, subdiv):
    return surfaces.generate(make_surface(kind), subdiv=subdiv)


@lru_cache(maxsize=None)
def get_pipeline(kind, subdiv, r):
    """(mesh, field, pencil) for a cached shape at one order."""
    mesh = get_mesh(kind, subdiv)
    field = curvature.compute_curvature(mesh, r=r)
    pencil = assemble.assemble_pencil(mesh, field, r)
    return mesh, field, pencil


@pytest.fixture(scope="session")
def sphere3():
    return get_mesh("sphere", 3)


@pytest.fixture(scope="session")
def sphere4():
    return get_mesh("sphere", 4)


@pytest.fixture(scope="session")
def ellipsoid3():
    return get_mesh("ellipsoid", 3)


@pytest.fixture(scope="session")
def torus1():
    return get_mesh("torus", 1)
