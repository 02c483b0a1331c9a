"""Global finite element spaces: DOF numbering, Piola maps, boundary masks.

Every element works in its *ascending-vertex frame*: the local vertices
are ordered by increasing global id before the affine map is formed.
Shared edges and faces are then parametrized identically from both sides,
so curl-conforming degrees of freedom match across elements without any
sign or permutation tables.  The frame's Jacobian determinant may be
negative; the covariant Piola transform and the curl transform carry the
signed determinant, and integrals use its absolute value.
"""

import numpy as np
import scipy.sparse as sp

from .reference import (EDGE_VERTICES, FACE_VERTICES, build_lagrange_basis,
                        build_reference_basis, gradient_coupling)


class FeSpaceError(Exception):
    pass


class FeSpace:
    """Degree-of-freedom structure for one mesh/order/flavor/bc combination.

    Parameters
    ----------
    mesh : Mesh
    p : Nedelec order (the companion scalar space has Lagrange order p+1)
    flavor : 'curl' for the Nedelec space, 'h1' for the scalar multiplier
    bc : 'tangential_zero' (curl) / 'zero_trace' (h1) or 'none'
    """

    def __init__(self, mesh, p, flavor="curl", bc="tangential_zero"):
        if flavor not in ("curl", "h1"):
            raise FeSpaceError(f"unknown flavor {flavor!r}")
        if bc not in ("tangential_zero", "zero_trace", "none"):
            raise FeSpaceError(f"unknown bc {bc!r}")
        self.mesh = mesh
        self.p = p
        self.flavor = flavor
        self.bc = "none" if bc == "none" else (
            "tangential_zero" if flavor == "curl" else "zero_trace")
        self.ref = (build_reference_basis(p) if flavor == "curl"
                    else build_lagrange_basis(p + 1))

        tets = mesh.tets
        order = np.argsort(tets, axis=1)
        self.cell_vertices = np.take_along_axis(tets, order, axis=1)
        self.vertex_permutation = order

        v = mesh.vertices
        cv = self.cell_vertices
        e1 = v[cv[:, 1]] - v[cv[:, 0]]
        e2 = v[cv[:, 2]] - v[cv[:, 0]]
        e3 = v[cv[:, 3]] - v[cv[:, 0]]
        self.jac = np.stack([e1, e2, e3], axis=2)
        self.jac_det = np.linalg.det(self.jac)
        if np.any(np.abs(self.jac_det) < 1e-300):
            raise FeSpaceError("singular element map")
        self.jac_inv = np.linalg.inv(self.jac)
        self.origin = v[cv[:, 0]]

        self._number_dofs()

    # -- numbering --------------------------------------------------------

    def _number_dofs(self):
        mesh = self.mesh
        ref = self.ref
        nt = mesh.num_tets
        edge_id = {tuple(e): i for i, e in enumerate(mesh.edges)}
        face_id = {tuple(f): i for i, f in enumerate(mesh.faces)}

        if self.flavor == "curl":
            p = self.p
            n_edge = p + 1
            n_face = p * (p + 1)
            n_cell = (p - 1) * p * (p + 1) // 2
            off_face = mesh.num_edges * n_edge
            off_cell = off_face + mesh.num_faces * n_face
            self.num_dofs = off_cell + nt * n_cell
            boundary = np.zeros(self.num_dofs, dtype=bool)
            if self.bc != "none":
                for e in np.nonzero(mesh.boundary_edges)[0]:
                    boundary[e * n_edge:(e + 1) * n_edge] = True
                for f in np.nonzero(mesh.boundary_faces)[0]:
                    boundary[off_face + f * n_face: off_face + (f + 1) * n_face] = True
        else:
            q = self.p + 1
            n_edge = q - 1
            n_face = (q - 2) * (q - 1) // 2
            n_cell = max((q - 3) * (q - 2) * (q - 1) // 6, 0)
            off_edge = mesh.num_vertices
            off_face = off_edge + mesh.num_edges * n_edge
            off_cell = off_face + mesh.num_faces * n_face
            self.num_dofs = off_cell + nt * n_cell
            boundary = np.zeros(self.num_dofs, dtype=bool)
            if self.bc != "none":
                boundary[np.nonzero(mesh.boundary_vertices)[0]] = True
                for e in np.nonzero(mesh.boundary_edges)[0]:
                    boundary[off_edge + e * n_edge: off_edge + (e + 1) * n_edge] = True
                for f in np.nonzero(mesh.boundary_faces)[0]:
                    boundary[off_face + f * n_face: off_face + (f + 1) * n_face] = True

        ldof = np.empty((nt, ref.dim), dtype=np.int64)
        cv = self.cell_vertices
        for k, info in enumerate(ref.dofs):
            if info.entity == "vertex":
                ldof[:, k] = cv[:, info.entity_index]
            elif info.entity == "edge":
                i, j = EDGE_VERTICES[info.entity_index]
                keys = np.sort(cv[:, [i, j]], axis=1)
                ids = np.fromiter((edge_id[tuple(r)] for r in keys), dtype=np.int64, count=nt)
                base = 0 if self.flavor == "curl" else off_edge
                ldof[:, k] = base + ids * n_edge + info.moment
            elif info.entity == "face":
                i, j, kk = FACE_VERTICES[info.entity_index]
                keys = np.sort(cv[:, [i, j, kk]], axis=1)
                ids = np.fromiter((face_id[tuple(r)] for r in keys), dtype=np.int64, count=nt)
                ldof[:, k] = off_face + ids * n_face + info.moment
            else:
                ldof[:, k] = off_cell + np.arange(nt) * n_cell + info.moment
        self.cell_dofs = ldof
        self.boundary_mask = boundary
        self.free_dofs = np.nonzero(~boundary)[0]
        self.num_free = len(self.free_dofs)
        full2free = np.full(self.num_dofs, -1, dtype=np.int64)
        full2free[self.free_dofs] = np.arange(self.num_free)
        self.full_to_free = full2free

    # -- vectors ----------------------------------------------------------

    def restrict(self, full):
        return np.asarray(full)[self.free_dofs]

    def extend(self, free):
        out = np.zeros(self.num_dofs)
        out[self.free_dofs] = free
        return out

    # -- geometry / evaluation --------------------------------------------

    def physical_points(self, tet_ids, ref_points):
        """Map reference points into the listed tets (ascending frames)."""
        return (self.origin[tet_ids][:, None, :]
                + np.einsum("tde,qe->tqd", self.jac[tet_ids], ref_points))

    def evaluate(self, coeffs_full, tet_ids, ref_points):
        """Field values at reference points of the listed tets: (nt, nq, 3)."""
        tet_ids = np.asarray(tet_ids)
        vals = self.ref.tabulate(ref_points)
        local = np.asarray(coeffs_full)[self.cell_dofs[tet_ids]]
        if self.flavor == "curl":
            phys = np.einsum("tj,qjd,ted->tqe",
                             local, vals, self.jac_inv[tet_ids].transpose(0, 2, 1))
            return phys
        return np.einsum("tj,qj->tq", local, vals)

    def evaluate_curl(self, coeffs_full, tet_ids, ref_points):
        tet_ids = np.asarray(tet_ids)
        curls = self.ref.tabulate_curl(ref_points)
        local = np.asarray(coeffs_full)[self.cell_dofs[tet_ids]]
        scale = self.jac[tet_ids] / self.jac_det[tet_ids][:, None, None]
        return np.einsum("tj,qjd,ted->tqe", local, curls, scale)

    def interpolate(self, fn):
        """Global coefficients of a smooth field via the moment dofs.

        ``fn`` maps an (n, 3) array of physical points to (n, 3) vectors
        (curl flavor) or (n,) scalars (h1 flavor).  For tangentially
        discontinuous input the shared-entity dofs take the value from the
        highest-index adjacent tet.
        """
        out = np.zeros(self.num_dofs)
        for t in range(self.mesh.num_tets):
            J = self.jac[t]
            x0 = self.origin[t]
            if self.flavor == "curl":
                def pulled(pts):
                    phys = x0[None, :] + pts @ J.T
                    return fn(phys) @ J
            else:
                def pulled(pts):
                    phys = x0[None, :] + pts @ J.T
                    return fn(phys)
            out[self.cell_dofs[t]] = self.ref.apply_dofs(pulled)
        return out


def build_space(mesh, p, flavor="curl", bc="tangential_zero"):
    """Build a global FE space; see FeSpace."""
    return FeSpace(mesh, p, flavor=flavor, bc=bc)


def map_piola(space, tet, ref_values, kind="value"):
    """Covariant Piola map of reference values into physical space.

    kind='value': v = J^{-T} v_ref ; kind='curl': c = J c_ref / det(J).
    """
    vals = np.asarray(ref_values, dtype=float)
    J = space.jac[tet]
    det = space.jac_det[tet]
    if abs(det) < 1e-300:
        raise FeSpaceError("singular element map")
    if kind == "value":
        return vals @ np.linalg.inv(J)
    if kind == "curl":
        return vals @ J.T / det
    raise FeSpaceError(f"unknown Piola kind {kind!r}")


def discrete_gradient(curl_space, h1_space):
    """Sparse matrix of gradient coefficients: columns are Lagrange dofs.

    Exact (rational-derived) local couplings scattered over elements; the
    composite curl of every column vanishes identically.  Returned on free
    dofs of both spaces.
    """
    if curl_space.mesh is not h1_space.mesh or curl_space.p != h1_space.p:
        raise FeSpaceError("gradient requires matching mesh and order")
    Gloc = gradient_coupling(curl_space.p)
    nt = curl_space.mesh.num_tets
    nn, nl = Gloc.shape
    rows = np.repeat(curl_space.cell_dofs, nl, axis=1).ravel()
    cols = np.tile(h1_space.cell_dofs, (1, nn)).ravel()
    vals = np.tile(Gloc.reshape(1, -1), (nt, 1)).ravel()
    # duplicate entries from adjacent tets are bitwise identical; keep one
    key = rows * h1_space.num_dofs + cols
    _, keep = np.unique(key, return_index=True)
    G = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])),
                      shape=(curl_space.num_dofs, h1_space.num_dofs)).tocsr()
    return G[curl_space.free_dofs][:, h1_space.free_dofs].tocsr()
