"""Conforming tetrahedral meshes of axis-aligned boxes.

Boxes are triangulated with the Kuhn split (6 tetrahedra per grid cell,
all sharing the cell's main diagonal), which is conforming on structured
grids and self-similar under dyadic refinement.  Uniform refinement is
realized structurally by doubling the grid, which is equivalent to red
refinement with a fixed interior diagonal and keeps parent/child meshes
exactly nested.
"""

from dataclasses import dataclass
from itertools import permutations

import numpy as np


class MeshError(Exception):
    """Invalid mesh construction input or violated mesh invariant."""


_LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))
_AXIS_PERMS = tuple(permutations((0, 1, 2)))


@dataclass
class BoxInfo:
    """Structured-grid provenance of a box mesh; enables exact refinement."""

    origin: np.ndarray
    lengths: np.ndarray
    divisions: tuple
    partition_planes: tuple  # tuple of (axis, coordinate) pairs


class Mesh:
    """Immutable conforming tetrahedral mesh with oriented entity tables.

    Attributes
    ----------
    vertices : (nv, 3) float array
    tets : (nt, 4) int array, positively oriented
    labels : (nt,) int array of subdomain labels
    edges : (ne, 2) int array, each row ascending
    faces : (nf, 3) int array, each row ascending
    tet_edges, tet_edge_signs : (nt, 6) incidence and orientation signs
    tet_faces, tet_face_signs : (nt, 4) incidence and permutation parity
    boundary_faces, boundary_edges, boundary_vertices : bool masks
    box : BoxInfo or None
    parent_mesh, parent_tet : nesting link set by refine_uniform
    """

    def __init__(self, vertices, tets, labels=None, box=None,
                 parent_mesh=None, parent_tet=None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.tets = np.asarray(tets, dtype=np.int64)
        nt = self.tets.shape[0]
        self.labels = (np.zeros(nt, dtype=np.int64) if labels is None
                       else np.asarray(labels, dtype=np.int64))
        self.box = box
        self.parent_mesh = parent_mesh
        self.parent_tet = parent_tet
        self._build_entities()
        self._check_invariants()

    # -- construction ---------------------------------------------------

    def _build_entities(self):
        tets = self.tets
        nt = tets.shape[0]

        pairs = np.concatenate([np.sort(tets[:, e], axis=1) for e in _LOCAL_EDGES])
        edges, inv = np.unique(pairs, axis=0, return_inverse=True)
        self.edges = edges
        self.tet_edges = inv.reshape(6, nt).T.copy()
        signs = np.empty((nt, 6), dtype=np.int8)
        for k, (i, j) in enumerate(_LOCAL_EDGES):
            signs[:, k] = np.where(tets[:, i] < tets[:, j], 1, -1)
        self.tet_edge_signs = signs

        triples = np.concatenate([np.sort(tets[:, f], axis=1) for f in _LOCAL_FACES])
        faces, finv, fcount = np.unique(triples, axis=0, return_inverse=True,
                                        return_counts=True)
        self.faces = faces
        self.tet_faces = finv.reshape(4, nt).T.copy()
        fsigns = np.empty((nt, 4), dtype=np.int8)
        for k, f in enumerate(_LOCAL_FACES):
            tri = tets[:, f]
            # parity of the permutation sorting the stored triple
            s = np.ones(nt, dtype=np.int8)
            a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
            s = np.where(a > b, -s, s)
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            s = np.where(c < lo, s, np.where(c < hi, -s, s))
            fsigns[:, k] = s
        self.tet_face_signs = fsigns

        self.boundary_faces = fcount == 1
        bverts = np.zeros(len(self.vertices), dtype=bool)
        bverts[faces[self.boundary_faces].ravel()] = True
        self.boundary_vertices = bverts
        bedges = np.zeros(len(edges), dtype=bool)
        if self.boundary_faces.any():
            bf = faces[self.boundary_faces]
            fedges = np.concatenate([
                np.sort(bf[:, [0, 1]], axis=1),
                np.sort(bf[:, [0, 2]], axis=1),
                np.sort(bf[:, [1, 2]], axis=1),
            ])
            edge_lookup = {tuple(e): i for i, e in enumerate(edges)}
            for e in fedges:
                bedges[edge_lookup[tuple(e)]] = True
        self.boundary_edges = bedges

        v = self.vertices
        t = self.tets
        e1 = v[t[:, 1]] - v[t[:, 0]]
        e2 = v[t[:, 2]] - v[t[:, 0]]
        e3 = v[t[:, 3]] - v[t[:, 0]]
        self.jacobians = np.stack([e1, e2, e3], axis=2)  # columns are edge vectors
        self.jac_dets = np.linalg.det(self.jacobians)
        self.volumes = self.jac_dets / 6.0

    def _check_invariants(self):
        if not (self.jac_dets > 0).all():
            bad = int(np.argmin(self.jac_dets))
            raise MeshError(f"non-positive Jacobian determinant in tet {bad}")
        # conformity: every face shared by one or two tets (by construction of
        # np.unique counts; recheck count bounds defensively)
        counts = np.bincount(self.tet_faces.ravel(), minlength=len(self.faces))
        if counts.min() < 1 or counts.max() > 2:
            raise MeshError("mesh is not conforming: face shared by >2 tets")

    # -- basic queries ----------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_tets(self):
        return len(self.tets)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_faces(self):
        return len(self.faces)

    def tet_diameters(self):
        v = self.vertices
        t = self.tets
        d = np.zeros(len(t))
        for i, j in _LOCAL_EDGES:
            d = np.maximum(d, np.linalg.norm(v[t[:, i]] - v[t[:, j]], axis=1))
        return d

    def max_diameter(self):
        return float(self.tet_diameters().max())


def build_box_mesh(extents, divisions, partition_planes=()):
    """Kuhn-triangulated mesh of an axis-aligned box.

    Parameters
    ----------
    extents : pair of corner points ((x0,y0,z0), (x1,y1,z1))
    divisions : (nx, ny, nz) cell counts, each >= 1
    partition_planes : iterable of (axis, coordinate) cuts; every cut must
        coincide with a grid plane of the divisions.

    Subdomain labels index the cartesian product of the intervals the cut
    planes define, in (x, y, z)-major order.
    """
    lo = np.asarray(extents[0], dtype=float)
    hi = np.asarray(extents[1], dtype=float)
    if not (hi > lo).all():
        raise MeshError("box extents must have positive lengths")
    div = tuple(int(n) for n in divisions)
    if any(n < 1 for n in div):
        raise MeshError("divisions must be >= 1 in each axis")
    nx, ny, nz = div
    lengths = hi - lo

    axes_coords = [lo[a] + lengths[a] * np.arange(div[a] + 1) / div[a] for a in range(3)]
    cuts = [[], [], []]
    for axis, coord in partition_planes:
        grid = axes_coords[axis]
        tol = 1e-12 * max(1.0, abs(lengths[axis]))
        k = int(np.argmin(np.abs(grid - coord)))
        if abs(grid[k] - coord) > tol:
            raise MeshError(
                f"partition plane at axis {axis}, coordinate {coord!r} "
                "does not lie on a division plane")
        if 0 < k < div[axis]:
            cuts[axis].append(grid[k])
    cuts = [sorted(c) for c in cuts]

    xs, ys, zs = axes_coords
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    # vertex id = ix + (nx+1)*(iy + (ny+1)*iz)
    verts = np.column_stack([
        X.transpose(2, 1, 0).ravel(),
        Y.transpose(2, 1, 0).ravel(),
        Z.transpose(2, 1, 0).ravel(),
    ])

    def vid(ix, iy, iz):
        return ix + (nx + 1) * (iy + (ny + 1) * iz)

    strides = (1, nx + 1, (nx + 1) * (ny + 1))
    tets = []
    labels = []
    nreg = [len(c) + 1 for c in cuts]
    for iz in range(nz):
        for iy in range(ny):
            for ix in range(nx):
                base = vid(ix, iy, iz)
                centre = lo + lengths * ((np.array([ix, iy, iz]) + 0.5) / np.array(div))
                reg = [int(np.searchsorted(cuts[a], centre[a])) for a in range(3)]
                label = reg[0] + nreg[0] * (reg[1] + nreg[1] * reg[2])
                for perm in _AXIS_PERMS:
                    chain = [base]
                    for a in perm:
                        chain.append(chain[-1] + strides[a])
                    parity = _perm_parity(perm)
                    if parity < 0:
                        chain[2], chain[3] = chain[3], chain[2]
                    tets.append(chain)
                    labels.append(label)

    box = BoxInfo(origin=lo, lengths=lengths, divisions=div,
                  partition_planes=tuple((a, float(c)) for a, cs in enumerate(cuts) for c in cs))
    return Mesh(verts, np.array(tets), np.array(labels), box=box)


def _perm_parity(perm):
    inv = sum(1 for i in range(3) for j in range(i + 1, 3) if perm[i] > perm[j])
    return -1 if inv % 2 else 1


def refine_uniform(mesh):
    """Split every tet into 8 children; the result is conforming and nested.

    Implemented by doubling the structured grid, which on Kuhn meshes
    coincides with red refinement with the fixed Freudenthal diagonal.
    Requires the mesh to carry its box provenance.
    """
    if mesh.box is None:
        raise MeshError("refine_uniform requires a mesh built by build_box_mesh")
    box = mesh.box
    fine = build_box_mesh(
        (box.origin, box.origin + box.lengths),
        tuple(2 * n for n in box.divisions),
        box.partition_planes,
    )
    parent = _locate_parents(mesh, fine)
    counts = np.bincount(parent, minlength=mesh.num_tets)
    if not (counts == 8).all():
        raise MeshError("refinement nesting check failed")  # pragma: no cover
    fine.parent_mesh = mesh
    fine.parent_tet = parent
    return fine


def _locate_parents(coarse, fine):
    """Parent coarse tet of each fine tet, via structured cell lookup."""
    box = coarse.box
    div = np.array(box.divisions)
    cell_size = box.lengths / div
    centroids = fine.vertices[fine.tets].mean(axis=1)
    cell = np.floor((centroids - box.origin) / cell_size).astype(np.int64)
    cell = np.clip(cell, 0, div - 1)
    lin = cell[:, 0] + div[0] * (cell[:, 1] + div[1] * cell[:, 2])
    parent = np.full(fine.num_tets, -1, dtype=np.int64)
    v = coarse.vertices
    for k in range(6):
        cand = lin * 6 + k
        t = coarse.tets[cand]
        # barycentric coordinates of centroids w.r.t. candidate tets
        a = v[t[:, 1]] - v[t[:, 0]]
        b = v[t[:, 2]] - v[t[:, 0]]
        c = v[t[:, 3]] - v[t[:, 0]]
        rhs = centroids - v[t[:, 0]]
        J = np.stack([a, b, c], axis=2)
        lam = np.linalg.solve(J, rhs[:, :, None])[:, :, 0]
        inside = (lam >= -1e-12).all(axis=1) & (lam.sum(axis=1) <= 1 + 1e-12)
        parent[inside & (parent < 0)] = cand[inside & (parent < 0)]
    if (parent < 0).any():
        raise MeshError("failed to locate parent tets during refinement")  # pragma: no cover
    return parent


def mesh_statistics(mesh):
    """Mesh size h, minimum quality, and element counts per subdomain.

    Quality is inscribed radius over diameter, scale invariant.
    """
    diam = mesh.tet_diameters()
    v = mesh.vertices
    t = mesh.tets
    areas = np.zeros(len(t))
    for f in _LOCAL_FACES:
        p0, p1, p2 = v[t[:, f[0]]], v[t[:, f[1]]], v[t[:, f[2]]]
        areas += 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1)
    r_in = 3.0 * mesh.volumes / areas
    labels, counts = np.unique(mesh.labels, return_counts=True)
    return {
        "h": float(diam.max()),
        "min_quality": float((r_in / diam).min()),
        "tets_per_subdomain": dict(zip(labels.tolist(), counts.tolist())),
    }


def save_mesh(mesh, path):
    """Write the plain-text ``tetmesh v1`` format (exact round-trip)."""
    lines = ["tetmesh v1", str(mesh.num_vertices)]
    for p in mesh.vertices:
        lines.append(f"{p[0]!r} {p[1]!r} {p[2]!r}")
    lines.append(str(mesh.num_tets))
    for t, lab in zip(mesh.tets, mesh.labels):
        lines.append(f"{t[0]} {t[1]} {t[2]} {t[3]} {lab}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh(path):
    """Read the ``tetmesh v1`` format written by save_mesh."""
    with open(path) as fh:
        tokens = fh.read().split("\n")
    if tokens[0].strip() != "tetmesh v1":
        raise MeshError(f"unrecognized mesh header {tokens[0]!r}")
    nv = int(tokens[1])
    verts = np.array([[float(x) for x in tokens[2 + i].split()] for i in range(nv)])
    nt = int(tokens[2 + nv])
    rows = [tokens[3 + nv + i].split() for i in range(nt)]
    tets = np.array([[int(x) for x in r[:4]] for r in rows])
    labels = np.array([int(r[4]) for r in rows])
    return Mesh(verts, tets, labels)
