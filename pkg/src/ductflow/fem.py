"""Discrete operators of the P1-P0 pair on a triangulation.

The stress is piecewise constant (two components per triangle, stacked as
``tau[2k:2k+2]``), the velocity piecewise linear on free nodes.  The
constraint matrix ``D`` has entry ``|T_k| * (grad phi_j)_c`` in row
``free_index[j]`` and column ``2k + c``, so that ``D @ tau = f_h`` is the
discrete momentum balance and ``D @ tau`` evaluates ``(tau, grad phi_j)``
exactly (the integrands are piecewise constant, no quadrature error).

``A`` is the diagonal of doubled triangle areas; ``D A^-1 D^T`` coincides
with the standard P1 stiffness matrix on free nodes and ``A^-1 D^T`` is
the discrete gradient.  Both SPD matrices are factorised once and reused
by every solver iteration.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .mesh import Triangulation


class FactorizationError(RuntimeError):
    """SPD factorisation failed, i.e. an operator is rank deficient."""


class DiscreteOperators:
    """Assembled matrices, load vector and factorisations for one mesh.

    Instances are immutable after assembly and every method is a
    read-only solve or product, so one operator set can serve any number
    of concurrent solver runs.

    Parameters
    ----------
    tri : Triangulation
    f : float or callable
        Force density.  A callable receives coordinate arrays ``(x, y)``
        and must return nodal values; the load vector uses vertex
        quadrature ``|T|/3`` per corner, exact for constant ``f``.
    """

    def __init__(self, tri: Triangulation, f=1.0):
        self.tri = tri
        n_free = tri.n_free
        n_stress = 2 * tri.n_triangles

        self.area2 = np.repeat(tri.areas, 2)
        self.D = _constraint_matrix(tri)
        self.f_h = _load_vector(tri, f)

        if n_free:
            gram = (self.D @ self.D.T).tocsc()
            self.stiffness = (self.D @ sp.diags(1.0 / self.area2) @ self.D.T).tocsr()
            try:
                self._lu_gram = splu(gram)
                self._lu_stiffness = splu(self.stiffness.tocsc())
            except RuntimeError as exc:
                raise FactorizationError(
                    f"factorisation of D*D^T / D*A^-1*D^T failed ({exc}); "
                    "constraint matrix is rank deficient"
                ) from exc
        else:
            self.stiffness = sp.csr_matrix((0, 0))
            self._lu_gram = None
            self._lu_stiffness = None

        self.n_free = n_free
        self.n_stress = n_stress
        self.area2.flags.writeable = False
        self.f_h.flags.writeable = False

    # -- SPD solves ------------------------------------------------------

    def solve_ddt(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``(D D^T) x = rhs``."""
        if self._lu_gram is None:
            return np.zeros(0)
        return self._lu_gram.solve(np.asarray(rhs, dtype=float))

    def solve_stiffness(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``(D A^-1 D^T) x = rhs`` (discrete Laplacian solve)."""
        if self._lu_stiffness is None:
            return np.zeros(0)
        return self._lu_stiffness.solve(np.asarray(rhs, dtype=float))

    # -- projections and recovery ----------------------------------------

    def project_feasible(self, tau: np.ndarray) -> np.ndarray:
        """Project onto the momentum manifold ``{tau : D tau = f_h}``.

        Returns ``tau - A^-1 D^T (D A^-1 D^T)^-1 (D tau - f_h)``.
        """
        tau = np.asarray(tau, dtype=float)
        if self.n_free == 0:
            return tau.copy()
        defect = self.D @ tau - self.f_h
        return tau - (self.D.T @ self.solve_stiffness(defect)) / self.area2

    def recover_velocity(self, grad: np.ndarray) -> np.ndarray:
        """Least-squares multiplier ``y = (D D^T)^-1 D grad``.

        Minimises ``|grad - D^T y|^2`` over nodal velocities.
        """
        if self.n_free == 0:
            return np.zeros(0)
        return self.solve_ddt(self.D @ np.asarray(grad, dtype=float))

    def project_nullspace(self, v: np.ndarray) -> np.ndarray:
        """Euclidean projection onto ``null(D)``: ``v - D^T (D D^T)^-1 D v``."""
        v = np.asarray(v, dtype=float)
        if self.n_free == 0:
            return v.copy()
        return v - self.D.T @ self.solve_ddt(self.D @ v)

    def velocity_gradient(self, y: np.ndarray) -> np.ndarray:
        """Per-triangle gradient of a P1 velocity field: ``A^-1 D^T y``."""
        return (self.D.T @ np.asarray(y, dtype=float)) / self.area2

    def momentum_residual(self, tau: np.ndarray) -> float:
        """``max |D tau - f_h|``, the feasibility defect."""
        if self.n_free == 0:
            return 0.0
        return float(np.max(np.abs(self.D @ tau - self.f_h)))


def assemble(tri: Triangulation, f=1.0) -> DiscreteOperators:
    """Assemble all discrete operators for ``tri`` with force density ``f``."""
    return DiscreteOperators(tri, f)


def _constraint_matrix(tri: Triangulation) -> sp.csr_matrix:
    n_t = tri.n_triangles
    tri_free = tri.free_index[tri.triangles]  # (n_T, 3)
    keep = tri_free >= 0

    weighted = tri.grad_phi * tri.areas[:, None, None]  # (n_T, 3, 2)
    k_idx = np.broadcast_to(np.arange(n_t)[:, None], (n_t, 3))

    rows = np.concatenate([tri_free[keep], tri_free[keep]])
    cols = np.concatenate([2 * k_idx[keep], 2 * k_idx[keep] + 1])
    vals = np.concatenate([weighted[:, :, 0][keep], weighted[:, :, 1][keep]])
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(tri.n_free, 2 * n_t))
    return mat.tocsr()


def _load_vector(tri: Triangulation, f) -> np.ndarray:
    if callable(f):
        f_nodes = np.asarray(f(tri.nodes[:, 0], tri.nodes[:, 1]), dtype=float)
        if f_nodes.shape != (tri.n_nodes,):
            raise ValueError("force density callable must return one value per node")
    else:
        f_nodes = np.full(tri.n_nodes, float(f))

    full = np.zeros(tri.n_nodes)
    contrib = (tri.areas[:, None] / 3.0) * f_nodes[tri.triangles]
    np.add.at(full, tri.triangles, contrib)
    return full[tri.free_nodes]
