"""P1 finite-element assembly of the penalized-operator pencil.

The weak form of the divergence operator with a face-constant anisotropy is
u^T K v = sum_f area_f * <P(f) grad u|_f, grad v|_f> over piecewise-linear
hat functions; K is symmetric and kills constants.  The mass matrix is the
lumped (diagonal) barycentric one and the potential enters as the diagonal
M_W = diag(area_v * W(v)^2), so multiplication by W stays an exact diagonal
operation downstream.  The eigenproblem of the penalized operator is the
symmetric pencil (K - M_W) x = lambda M x, eigenvalues ascending.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "OperatorPencil",
    "assemble_pencil",
    "apply_operator",
    "with_potential_squared",
    "export_coo",
]


@dataclass(frozen=True, eq=False)
class OperatorPencil:
    """Stiffness K, lumped mass diagonal, and potential diagonal for one r."""

    k_stiff: sp.csr_matrix
    mass: np.ndarray        # diagonal of M (barycentric vertex areas)
    w: np.ndarray           # vertex samples of W_r
    potential: np.ndarray   # diagonal of M_W = mass * w^2
    r: int
    n: int = 2

    @property
    def n_vertices(self):
        return len(self.mass)

    def m_matrix(self):
        return sp.diags(self.mass)

    def mw_matrix(self):
        return sp.diags(self.potential)

    def a_matrix(self):
        """K - M_W, the left-hand side of the pencil."""
        return (self.k_stiff - sp.diags(self.potential)).tocsr()


def assemble_pencil(mesh, field, r):
    """Assemble (K_r, M, M_W) from a curvature field built for this order."""
    if field.r != r or field.p_r_face is None or field.w is None:
        raise ValueError(f"curvature field was not built for order r={r}")
    grads = mesh.hat_gradients()
    local = np.einsum(
        "f,fai,fij,fbj->fab", mesh.face_areas, grads, field.p_r_face, grads
    )
    local = 0.5 * (local + local.transpose(0, 2, 1))
    rows = np.broadcast_to(mesh.faces[:, :, None], local.shape)
    cols = np.broadcast_to(mesh.faces[:, None, :], local.shape)
    nv = mesh.n_vertices
    k = sp.coo_matrix(
        (local.ravel(), (rows.ravel(), cols.ravel())), shape=(nv, nv)
    ).tocsr()
    k.sum_duplicates()
    mass = np.array(mesh.vertex_areas)
    w = np.array(field.w)
    return OperatorPencil(
        k_stiff=k, mass=mass, w=w, potential=mass * w * w, r=r
    )


def with_potential_squared(pencil, w_squared):
    """Same stiffness and mass, replacement potential samples (given as W^2)."""
    w2 = np.asarray(w_squared, dtype=float)
    if w2.shape != pencil.mass.shape:
        raise ValueError("potential samples must be one value per vertex")
    if np.any(w2 < 0.0):
        raise ValueError("squared potential samples must be nonnegative")
    return OperatorPencil(
        k_stiff=pencil.k_stiff,
        mass=pencil.mass,
        w=np.sqrt(w2),
        potential=pencil.mass * w2,
        r=pencil.r,
        n=pencil.n,
    )


def apply_operator(pencil, x):
    """Matrix-vector product (K - M_W) x without forming the difference."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != pencil.n_vertices:
        raise ValueError(
            f"vector has length {x.shape[0]}, pencil has {pencil.n_vertices} vertices"
        )
    if x.ndim == 1:
        return pencil.k_stiff @ x - pencil.potential * x
    return pencil.k_stiff @ x - pencil.potential[:, None] * x


def export_coo(pencil, path):
    """Write K, M, M_W as labeled coordinate triplets (deterministic order)."""
    k = pencil.k_stiff.tocoo()
    order = np.lexsort((k.col, k.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# pencil r={pencil.r} V={pencil.n_vertices} nnz={k.nnz}\n")
        for i, j, v in zip(k.row[order], k.col[order], k.data[order]):
            fh.write("K %d %d %.17g\n" % (i, j, v))
        for i, v in enumerate(pencil.mass):
            fh.write("M %d %d %.17g\n" % (i, i, v))
        for i, v in enumerate(pencil.potential):
            fh.write("MW %d %d %.17g\n" % (i, i, v))
