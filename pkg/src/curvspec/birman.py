"""Discrete Birman-Schwinger kernel and its unit crossings.

K_mu g = W (K + mu M)^(-1) M (W g), symmetric and positive in the M-inner
product.  Its top eigenvalue decreases in mu, and -mu is an eigenvalue of
the penalized pencil exactly when 1 is an eigenvalue of K_mu; in finite
dimensions this correspondence is an algebraic identity, so scanning mu
and bisecting the unit crossings recovers the negative spectrum from
resolvent applications alone.

Two norm bounds are tracked side by side.  Without any restriction the
resolvent sees the constant mode, so the honest full-space bound is
max(W^2)/mu.  The sharper max(W^2)/(lam1 + mu) with lam1 the smallest
nonzero eigenvalue of (K, M) holds on the subspace of g with <g, W>_M = 0,
because exactly then the argument W g has zero mean.  bound_check carries
both pairs so neither inequality is overstated.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .eigen import smallest_eigenpairs
from .errors import EigenSolveError

__all__ = [
    "Crossing",
    "BSScanResult",
    "apply_K_mu",
    "top_eigenvalues_K",
    "scan_crossings",
]

# above this many vertices the shifted solve switches from a cached
# factorization to Jacobi-preconditioned CG
CG_LIMIT = 100_000

_DENSE_APPLY_LIMIT = 64   # tiny problems: build K_mu by columns, use LAPACK


@dataclass(frozen=True, eq=False)
class Crossing:
    mu0: float
    branch: int
    eig_error: float            # |top_branch(mu0) - 1| actually achieved
    matched_eigenvalue: float   # pencil eigenvalue nearest to -mu0
    match_error: float          # |lambda + mu0| / mu0


@dataclass(frozen=True, eq=False)
class BSScanResult:
    mu_grid: np.ndarray          # (S,) ascending
    top_eigenvalues: np.ndarray  # (S, k), descending across each row
    crossings: tuple
    bound_check: np.ndarray      # (S, 5), columns as in BOUND_COLUMNS
    warnings: tuple
    lam1_perp: float

    BOUND_COLUMNS = (
        "mu", "top_full", "bound_full", "top_w_perp", "bound_w_perp"
    )

    def write_csv(self, path):
        k = self.top_eigenvalues.shape[1]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("mu," + ",".join(f"top_{j+1}" for j in range(k)) + "\n")
            for mu, row in zip(self.mu_grid, self.top_eigenvalues):
                fh.write(",".join("%.17g" % v for v in (mu, *row)) + "\n")

    def to_json_dict(self):
        return {
            "mu_grid": [float(v) for v in self.mu_grid],
            "top_eigenvalues": [[float(v) for v in row]
                                for row in self.top_eigenvalues],
            "crossings": [
                {
                    "mu0": c.mu0,
                    "branch": c.branch,
                    "eig_error": c.eig_error,
                    "matched_eigenvalue": c.matched_eigenvalue,
                    "match_error": c.match_error,
                }
                for c in self.crossings
            ],
            "bound_check": {
                "columns": list(self.BOUND_COLUMNS),
                "rows": [[float(v) for v in row] for row in self.bound_check],
            },
            "warnings": list(self.warnings),
            "lam1_perp": float(self.lam1_perp),
        }


class _ShiftedSolver:
    """Solve (K + mu M) y = b, factored once; CG above the size limit."""

    def __init__(self, pencil, mu, force_cg=False):
        if mu <= 0.0:
            raise ValueError("mu must be positive")
        self.mu = float(mu)
        a = (pencil.k_stiff + mu * sp.diags(pencil.mass)).tocsc()
        self._use_cg = force_cg or pencil.n_vertices > CG_LIMIT
        if self._use_cg:
            self._a = a
            diag = a.diagonal()
            self._precond = spla.LinearOperator(
                a.shape, matvec=lambda x: x / diag
            )
        else:
            self._lu = spla.splu(a)

    def solve(self, b):
        if not self._use_cg:
            return self._lu.solve(b)
        y, info = spla.cg(self._a, b, M=self._precond, rtol=1e-12, atol=0.0,
                          maxiter=10_000)
        if info != 0:
            raise EigenSolveError(f"CG did not converge (info={info})")
        return y


def apply_K_mu(pencil, mu, g):
    """One application W (K + mu M)^(-1) M (W g) for a vertex vector g."""
    g = np.asarray(g, dtype=float)
    if g.shape != (pencil.n_vertices,):
        raise ValueError("g must be a single vertex vector")
    solver = _ShiftedSolver(pencil, mu)
    return pencil.w * solver.solve(pencil.mass * (pencil.w * g))


def _restriction_basis(pencil, restrict, sqm):
    # z-space images of the directions to project out; <g, 1>_M and
    # <g, W>_M become plain dot products against these after z = sqm * g
    cols = []
    for name in restrict:
        if name == "mean":
            cols.append(sqm)
        elif name == "w":
            cols.append(sqm * pencil.w)
        else:
            raise ValueError(f"unknown restriction {name!r}")
    if not cols:
        return None
    q, _ = np.linalg.qr(np.stack(cols, axis=1))
    return q


def _top_k(pencil, solver, k, seed, restrict=()):
    """k largest eigenvalues of K_mu (optionally restricted), descending."""
    nv = pencil.n_vertices
    if not 1 <= k <= nv - 1:
        raise ValueError(f"need 1 <= k <= {nv - 1}, got k={k}")
    sqm = np.sqrt(pencil.mass)
    q = _restriction_basis(pencil, restrict, sqm)

    def sym_apply(z):
        if q is not None:
            z = z - q @ (q.T @ z)
        out = sqm * (pencil.w * solver.solve(pencil.mass * (pencil.w * (z / sqm))))
        if q is not None:
            out = out - q @ (q.T @ out)
        return out

    if nv <= _DENSE_APPLY_LIMIT:
        cols = np.stack([sym_apply(e) for e in np.eye(nv)], axis=1)
        vals = np.linalg.eigvalsh(0.5 * (cols + cols.T))
        return vals[::-1][:k]

    op = spla.LinearOperator((nv, nv), matvec=sym_apply)
    v0 = np.random.default_rng(seed).standard_normal(nv)
    kk = min(k + 2, nv - 1)
    try:
        vals = spla.eigsh(op, k=kk, which="LA", v0=v0,
                          return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        raise EigenSolveError(
            f"kernel eigensolve at mu={solver.mu:.6g} did not converge"
        ) from exc
    return np.sort(vals)[::-1][:k]


def top_eigenvalues_K(pencil, mu, k=3, seed=0, restrict=()):
    """k largest eigenvalues of K_mu, deterministic for a fixed seed.

    ``restrict`` names M-orthogonal complements to work in: "mean" drops
    constants, "w" drops the span of the potential samples (the subspace
    on which the sharp resolvent bound holds).
    """
    return _top_k(pencil, _ShiftedSolver(pencil, mu), k, seed, restrict)


def _bisect_crossing(pencil, branch, lo, hi, f_lo, k, seed, tops_at,
                     tol=1e-8, maxiter=100):
    # sorted branches of K_mu are decreasing in mu, so f = top_j - 1 has
    # one sign change per bracket and plain bisection is safe
    f_mid = f_lo
    mid = lo
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        f_mid = tops_at(mid, k, seed)[branch] - 1.0
        if abs(f_mid) <= tol:
            return mid, abs(f_mid)
        if f_lo * f_mid <= 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return mid, abs(f_mid)


def scan_crossings(pencil, mu_min=None, mu_max=None, steps=32, k=3, seed=0):
    """Scan the top-k K_mu eigenvalues on a geometric grid, bisect crossings.

    Defaults span [1e-3, 10] times max(W^2), where crossings concentrate
    for near-spherical shapes.  Every detected unit crossing is matched
    against the directly computed pencil spectrum; mismatches and branch
    ambiguities surface in the warnings list rather than silently.
    """
    maxw2 = float(np.max(pencil.w**2))
    if mu_min is None:
        mu_min = 1e-3 * maxw2
    if mu_max is None:
        mu_max = 10.0 * maxw2
    if not 0.0 < mu_min < mu_max:
        raise ValueError(f"need 0 < mu_min < mu_max, got [{mu_min}, {mu_max}]")
    if steps < 2:
        raise ValueError("need at least 2 grid points")

    grid = np.geomspace(mu_min, mu_max, steps)
    solvers = {}

    def tops_at(mu, kk, sd, restrict=()):
        key = float(mu)
        if key not in solvers:
            solvers[key] = _ShiftedSolver(pencil, key)
        return _top_k(pencil, solvers[key], kk, sd, restrict)

    lam1_perp = float(smallest_eigenpairs(
        pencil.k_stiff, pencil.mass, k=2, seed=seed
    ).eigenvalues[1])

    tops = np.empty((steps, k))
    restricted = np.empty(steps)
    for s, mu in enumerate(grid):
        tops[s] = tops_at(mu, k, seed)
        restricted[s] = tops_at(mu, 1, seed, restrict=("w",))[0]

    warnings = []
    for j in range(k):
        rises = np.nonzero(np.diff(tops[:, j]) > 1e-9 * np.maximum(
            1.0, np.abs(tops[:-1, j])))[0]
        for s in rises:
            warnings.append(
                f"branch {j} increases from mu={grid[s]:.6g} to "
                f"mu={grid[s+1]:.6g}; resolvent monotonicity violated"
            )

    crossings = []
    cells_hit = {}
    for j in range(k):
        f = tops[:, j] - 1.0
        if f[0] == 0.0:
            # grid edge sitting exactly on a crossing; no cell to bisect
            cells_hit.setdefault(0, []).append(j)
            crossings.append((float(grid[0]), j, 0.0))
        for s in range(steps - 1):
            # a zero endpoint belongs to the cell on its left, never both
            if not (f[s] > 0.0 >= f[s + 1]):
                continue
            mu0, err = _bisect_crossing(
                pencil, j, grid[s], grid[s + 1], f[s], k, seed, tops_at,
            )
            if err > 1e-8:
                warnings.append(
                    f"crossing on branch {j} near mu={mu0:.6g} stopped at "
                    f"|eig-1|={err:.3g}; refine the grid"
                )
            cells_hit.setdefault(s, []).append(j)
            crossings.append((mu0, j, err))
    for s, branches in cells_hit.items():
        if len(branches) > 1:
            warnings.append(
                f"branches {branches} all cross 1 between mu={grid[s]:.6g} "
                f"and mu={grid[s+1]:.6g}; refine the grid to separate them"
            )

    matched = []
    if crossings:
        want = min(pencil.n_vertices - 1, len(crossings) + 3)
        pencil_eigs = smallest_eigenpairs(
            pencil.a_matrix(), pencil.mass, k=want, seed=seed
        ).eigenvalues
        for mu0, j, err in sorted(crossings):
            lam = pencil_eigs[np.argmin(np.abs(pencil_eigs + mu0))]
            matched.append(Crossing(
                mu0=float(mu0), branch=int(j), eig_error=float(err),
                matched_eigenvalue=float(lam),
                match_error=float(abs(lam + mu0) / mu0),
            ))

    bound = np.column_stack([
        grid, tops[:, 0], maxw2 / grid, restricted,
        maxw2 / (lam1_perp + grid),
    ])
    return BSScanResult(
        mu_grid=grid, top_eigenvalues=tops, crossings=tuple(matched),
        bound_check=bound, warnings=tuple(warnings), lam1_perp=lam1_perp,
    )
