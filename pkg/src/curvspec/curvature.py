"""Discrete shape operators and derived curvature fields on a TriMesh.

The estimator is a per-face finite-difference fit: along each edge of a face
the difference of the (angle-weighted) vertex unit normals approximates the
shape operator applied to the edge vector, both projected into the face
tangent plane.  Three edges give six equations for the three unknowns of a
symmetric 2x2 matrix, solved in least squares face by face.  Per-vertex
operators are the area-weighted average of incident face operators after
rotating each face tangent plane onto the vertex tangent plane.

Sign convention throughout: a sphere of radius R with outward normals gets
the operator +(1/R) I.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import curvalg
from .errors import DegenerateGeometryError
from .mesh import vertex_measures

__all__ = [
    "CurvatureField",
    "estimate_shape_operators",
    "vertex_principal_curvatures",
    "build_fields",
    "compute_curvature",
    "write_csv",
]


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Face shape operators plus the per-vertex fields derived from them.

    face_operators are 2x2 symmetric matrices in the orthonormal face basis
    stored in face_basis (rows t1, t2).  After build_fields(r) the Newton
    transform p_r_face is a world-frame 3x3 tangential matrix per face, and
    h_next / w hold the vertex samples of H_{r+1} and W_r.
    """

    face_operators: np.ndarray
    face_basis: np.ndarray
    vertex_kappas: np.ndarray = None
    r: int = None
    p_r_face: np.ndarray = None
    h_next: np.ndarray = None
    w: np.ndarray = None
    h_next_positive: bool = None


def estimate_shape_operators(mesh):
    """Per-face symmetric shape operator estimates, returned in a new field."""
    vertex_measures(mesh)  # raises on degenerate geometry
    v, f = mesh.vertices, mesh.faces
    vn = mesh.vertex_normals
    fn = mesh.face_normals
    t1 = v[f[:, 1]] - v[f[:, 0]]
    t1 = t1 / np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(fn, t1)
    basis = np.stack([t1, t2], axis=1)  # (F, 2, 3)

    gram = np.zeros((len(f), 3, 3))
    rhs = np.zeros((len(f), 3))
    for a, b in ((0, 1), (1, 2), (2, 0)):
        e = v[f[:, b]] - v[f[:, a]]
        dn = vn[f[:, b]] - vn[f[:, a]]
        eu = np.einsum("ij,ij->i", e, t1)
        ev = np.einsum("ij,ij->i", e, t2)
        du = np.einsum("ij,ij->i", dn, t1)
        dv = np.einsum("ij,ij->i", dn, t2)
        # rows (eu, ev, 0) and (0, eu, ev) for unknowns (s11, s12, s22)
        gram[:, 0, 0] += eu * eu
        gram[:, 0, 1] += eu * ev
        gram[:, 1, 0] += eu * ev
        gram[:, 1, 1] += eu * eu + ev * ev
        gram[:, 1, 2] += eu * ev
        gram[:, 2, 1] += eu * ev
        gram[:, 2, 2] += ev * ev
        rhs[:, 0] += eu * du
        rhs[:, 1] += ev * du + eu * dv
        rhs[:, 2] += ev * dv
    det = np.linalg.det(gram)
    scale = (np.trace(gram, axis1=1, axis2=2) / 3.0) ** 3
    bad = det <= 1e-20 * scale
    if np.any(bad):
        raise DegenerateGeometryError(
            f"rank-deficient shape-operator fit on face {int(np.argmax(bad))}",
            face=int(np.argmax(bad)),
        )
    s = np.linalg.solve(gram, rhs[:, :, None])[:, :, 0]
    ops = np.empty((len(f), 2, 2))
    ops[:, 0, 0] = s[:, 0]
    ops[:, 0, 1] = ops[:, 1, 0] = s[:, 1]
    ops[:, 1, 1] = s[:, 2]
    return CurvatureField(face_operators=ops, face_basis=basis)


def _face_ops_world(field):
    return np.einsum("fab,fai,fbj->fij", field.face_operators, field.face_basis, field.face_basis)


def _rotation_between(a, b):
    """Batched minimal rotation taking unit vectors a to unit vectors b."""
    w = np.cross(a, b)
    c = np.einsum("ij,ij->i", a, b)
    eye = np.eye(3)
    wx = np.zeros((len(a), 3, 3))
    wx[:, 0, 1] = -w[:, 2]
    wx[:, 0, 2] = w[:, 1]
    wx[:, 1, 0] = w[:, 2]
    wx[:, 1, 2] = -w[:, 0]
    wx[:, 2, 0] = -w[:, 1]
    wx[:, 2, 1] = w[:, 0]
    denom = 1.0 + c
    # nearly antiparallel normals cannot occur between a face and one of its
    # vertices on a sane closed mesh; fall back to the identity there
    safe = denom > 1e-8
    factor = np.where(safe, 1.0 / np.where(safe, denom, 1.0), 0.0)
    rot = eye[None, :, :] + wx + factor[:, None, None] * np.einsum("fij,fjk->fik", wx, wx)
    rot[~safe] = eye
    return rot


def vertex_principal_curvatures(field, mesh):
    """Sorted per-vertex principal curvatures (V, 2).

    Incident face operators are parallel-transported into the vertex tangent
    plane (rotation aligning the face normal with the vertex normal) and
    averaged with face-area weights.
    """
    nv = mesh.n_vertices
    ops3 = _face_ops_world(field)
    acc = np.zeros((nv, 3, 3))
    wsum = np.zeros(nv)
    for corner in range(3):
        vid = mesh.faces[:, corner]
        rot = _rotation_between(mesh.face_normals, mesh.vertex_normals[vid])
        moved = np.einsum("fij,fjk,flk->fil", rot, ops3, rot)
        np.add.at(acc, vid, mesh.face_areas[:, None, None] * moved)
        np.add.at(wsum, vid, mesh.face_areas)
    acc /= wsum[:, None, None]
    n = mesh.vertex_normals
    helper = np.zeros_like(n)
    helper[np.arange(nv), np.argmin(np.abs(n), axis=1)] = 1.0
    u1 = np.cross(n, helper)
    u1 /= np.linalg.norm(u1, axis=1)[:, None]
    u2 = np.cross(n, u1)
    a = np.einsum("vi,vij,vj->v", u1, acc, u1)
    b = 0.5 * (
        np.einsum("vi,vij,vj->v", u1, acc, u2) + np.einsum("vi,vij,vj->v", u2, acc, u1)
    )
    d = np.einsum("vi,vij,vj->v", u2, acc, u2)
    mean = 0.5 * (a + d)
    disc = np.sqrt((0.5 * (a - d)) ** 2 + b * b)
    return np.stack([mean - disc, mean + disc], axis=1)


def build_fields(field, r):
    """Fill in P_r per face and H_{r+1}, W_r per vertex for order r.

    The Newton transform is evaluated in the eigenbasis of each face
    operator.  For r >= 1 a nonpositive vertex H_{r+1} violates the standing
    curvature assumption and raises, naming the worst vertex.
    """
    if field.vertex_kappas is None:
        raise ValueError("vertex curvatures must be computed before build_fields")
    if r not in (0, 1):
        raise ValueError("the mesh pipeline supports r in {0, 1}")
    evals, evecs = np.linalg.eigh(field.face_operators)
    newt = curvalg.newton_eigenvalues(evals, r).eigenvalues
    p2 = np.einsum("fia,fa,fja->fij", evecs, newt, evecs)
    p3 = np.einsum("fab,fai,fbj->fij", p2, field.face_basis, field.face_basis)
    h_next = curvalg.mean_curvature(field.vertex_kappas, r + 1)
    w = curvalg.potential_W(field.vertex_kappas, r)  # raises if r>=1 and H_{r+1}<=0
    return replace(
        field,
        r=r,
        p_r_face=p3,
        h_next=h_next,
        w=w,
        h_next_positive=bool(h_next.min() > 0.0),
    )


def compute_curvature(mesh, r=None):
    """Full estimator chain; builds the order-r fields when r is given."""
    field = estimate_shape_operators(mesh)
    field = replace(field, vertex_kappas=vertex_principal_curvatures(field, mesh))
    if r is not None:
        field = build_fields(field, r)
    return field


def write_csv(field, path):
    """Vertex curvature table: index, kappa_1, kappa_2, H_1, H_2, W_r."""
    if field.vertex_kappas is None:
        raise ValueError("vertex curvatures not computed")
    k = field.vertex_kappas
    h1 = curvalg.mean_curvature(k, 1)
    h2 = curvalg.mean_curvature(k, 2)
    w = field.w if field.w is not None else np.full(len(k), np.nan)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("vertex,kappa1,kappa2,H1,H2,W\n")
        for i in range(len(k)):
            fh.write(
                "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                % (i, k[i, 0], k[i, 1], h1[i], h2[i], w[i])
            )
