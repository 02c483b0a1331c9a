"""Reference-element bases: first-kind Nedelec (curl-conforming) and Lagrange.

Shape functions are constructed exactly over the rationals: a spanning
polynomial set is assembled, the moment degrees of freedom are applied
with exact simplex integration, and the resulting generalized Vandermonde
matrix is inverted in ``Fraction`` arithmetic.  Unisolvence therefore
holds to the last float digit once coefficients are demoted to float64.

Degree-of-freedom conventions (all sub-entities in ascending local-vertex
order, which the global spaces align with ascending global ids):

* edge moments against shifted Legendre polynomials, tangent scaled by
  the edge vector;
* face moments of the two in-plane components against an L2-orthogonal
  family on the reference triangle;
* interior moments of each component against an L2-orthogonal family on
  the tetrahedron;
* Lagrange: point evaluation at equispaced barycentric nodes.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import polynomials as poly
from .quadrature import segment_rule, tetrahedron_rule, triangle_rule

MAX_ORDER = 4

_REF_VERTS = (
    (Fraction(0), Fraction(0), Fraction(0)),
    (Fraction(1), Fraction(0), Fraction(0)),
    (Fraction(0), Fraction(1), Fraction(0)),
    (Fraction(0), Fraction(0), Fraction(1)),
)
EDGE_VERTICES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
FACE_VERTICES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))


@dataclass(frozen=True)
class DofInfo:
    """Classification of one local degree of freedom."""

    entity: str  # 'vertex' | 'edge' | 'face' | 'interior'
    entity_index: int
    moment: int


class ReferenceBasis:
    """Shape functions on the reference tetrahedron with exact curls/grads.

    Attributes
    ----------
    kind : 'nedelec' or 'lagrange'
    order : polynomial order (Nedelec order p, or Lagrange order)
    dim : number of shape functions
    dofs : list of DofInfo in global numbering order
    dof_points, dof_weights : per-dof quadrature representation; applying
        ``sum_q w_q . v(x_q)`` reproduces the moment exactly for
        polynomials within the construction degree.
    """

    def __init__(self, kind, order, monomials, coeffs_exact, dofs,
                 dof_points, dof_weights):
        self.kind = kind
        self.order = order
        self.monomials = monomials
        self.coeffs_exact = coeffs_exact
        self.dofs = dofs
        self.dof_points = dof_points
        self.dof_weights = dof_weights
        self.dim = len(coeffs_exact)
        self._mono_arr = np.array(monomials, dtype=np.int64)
        if kind == "nedelec":
            self.coeffs = _vec_coeff_array(coeffs_exact, monomials)
            self.curl_coeffs = _vec_coeff_array(
                [poly.v_curl(v) for v in coeffs_exact], monomials)
            idx = {m: k for k, m in enumerate(monomials)}
            jac = np.zeros((self.dim, len(monomials), 3, 3))
            for j, v in enumerate(coeffs_exact):
                for d in range(3):
                    for a in range(3):
                        for m, c in poly.p_diff(v[d], a).items():
                            jac[j, idx[m], d, a] = float(c)
            self.jacobian_coeffs = jac
        else:
            self.coeffs = _scal_coeff_array(coeffs_exact, monomials)
            grads = [[poly.p_diff(s, ax) for ax in range(3)] for s in coeffs_exact]
            self.grad_coeffs = _vec_coeff_array(grads, monomials)

    def _mono_values(self, points):
        pts = np.asarray(points, dtype=float)
        e = self._mono_arr
        return (pts[:, None, 0] ** e[None, :, 0]
                * pts[:, None, 1] ** e[None, :, 1]
                * pts[:, None, 2] ** e[None, :, 2])

    def tabulate(self, points):
        """Values at reference points: (npts, dim, 3) or (npts, dim)."""
        mv = self._mono_values(points)
        if self.kind == "nedelec":
            return np.einsum("qm,jmd->qjd", mv, self.coeffs)
        return np.einsum("qm,jm->qj", mv, self.coeffs)

    def tabulate_curl(self, points):
        mv = self._mono_values(points)
        return np.einsum("qm,jmd->qjd", mv, self.curl_coeffs)

    def tabulate_grad(self, points):
        mv = self._mono_values(points)
        return np.einsum("qm,jmd->qjd", mv, self.grad_coeffs)

    def tabulate_component_grads(self, points):
        """Per-component gradients of vector shapes: (npts, dim, 3, 3)."""
        mv = self._mono_values(points)
        return np.einsum("qm,jmda->qjda", mv, self.jacobian_coeffs)

    def apply_dofs(self, fn):
        """Apply every dof to a callable ``fn(points) -> values``.

        ``fn`` receives an (n, 3) array of reference coordinates and must
        return (n, 3) vectors (Nedelec) or (n,) scalars (Lagrange).
        """
        out = np.empty(self.dim)
        for i in range(self.dim):
            vals = fn(self.dof_points[i])
            out[i] = np.sum(self.dof_weights[i] * vals)
        return out


def _vec_coeff_array(vecs, monomials):
    idx = {m: k for k, m in enumerate(monomials)}
    arr = np.zeros((len(vecs), len(monomials), 3))
    for j, v in enumerate(vecs):
        for d in range(3):
            for m, c in v[d].items():
                arr[j, idx[m], d] = float(c)
    return arr


def _scal_coeff_array(scals, monomials):
    idx = {m: k for k, m in enumerate(monomials)}
    arr = np.zeros((len(scals), len(monomials)))
    for j, s in enumerate(scals):
        for m, c in s.items():
            arr[j, idx[m]] = float(c)
    return arr


def _check_order(p):
    if not (0 <= p <= MAX_ORDER):
        raise ValueError(f"unsupported polynomial order {p}; supported range is 0..{MAX_ORDER}")


def nedelec_dimension(p):
    return (p + 1) * (p + 3) * (p + 4) // 2


@lru_cache(maxsize=None)
def build_reference_basis(p):
    """First-kind Nedelec basis of order p on the reference tetrahedron."""
    _check_order(p)
    prebasis = _nedelec_prebasis(p)
    dim = nedelec_dimension(p)
    assert len(prebasis) == dim

    edge_family = [poly.shifted_legendre(k) for k in range(p + 1)]
    face_family = poly.orthogonal_family(p - 1, 2) if p >= 1 else []
    cell_family = poly.orthogonal_family(p - 2, 3) if p >= 2 else []

    dofs = []
    rows = []  # exact dof(prebasis) rows
    dof_points = []
    dof_weights = []

    for ei, (i, j) in enumerate(EDGE_VERTICES):
        vi, vj = _REF_VERTS[i], _REF_VERTS[j]
        tang = [vj[d] - vi[d] for d in range(3)]
        mat = [[tang[d]] for d in range(3)]
        restricted = [
            _dot_restrict(v, vi, mat, tang) for v in prebasis
        ]
        rule = segment_rule(2 * p + 3)
        s = rule.cartesian[:, 0]
        pts = np.array([[float(vi[d]) + s_ * float(tang[d]) for d in range(3)] for s_ in s])
        tangf = np.array([float(t) for t in tang])
        for k, q in enumerate(edge_family):
            dofs.append(DofInfo("edge", ei, k))
            rows.append([poly.seg_integral(poly.p_mul(r, q)) for r in restricted])
            qv = _eval1(q, s)
            dof_points.append(pts)
            dof_weights.append((rule.weights * qv)[:, None] * tangf[None, :])

    for fi, (i, j, k) in enumerate(FACE_VERTICES):
        vi, vj, vk = _REF_VERTS[i], _REF_VERTS[j], _REF_VERTS[k]
        t1 = [vj[d] - vi[d] for d in range(3)]
        t2 = [vk[d] - vi[d] for d in range(3)]
        mat = [[t1[d], t2[d]] for d in range(3)]
        rest1 = [_dot_restrict(v, vi, mat, t1) for v in prebasis]
        rest2 = [_dot_restrict(v, vi, mat, t2) for v in prebasis]
        rule = triangle_rule(2 * p + 2)
        uv = rule.cartesian
        pts = (np.array([float(c) for c in vi])[None, :]
               + uv[:, :1] * np.array([float(c) for c in t1])[None, :]
               + uv[:, 1:] * np.array([float(c) for c in t2])[None, :])
        for qi, q in enumerate(face_family):
            qv = _eval2(q, uv)
            for a, (rest, tang) in enumerate(((rest1, t1), (rest2, t2))):
                dofs.append(DofInfo("face", fi, 2 * qi + a))
                rows.append([poly.tri_integral(poly.p_mul(r, q)) for r in rest])
                tangf = np.array([float(t) for t in tang])
                dof_points.append(pts)
                dof_weights.append((rule.weights * qv)[:, None] * tangf[None, :])

    if cell_family:
        rule = tetrahedron_rule(2 * p + 2)
        pts = rule.cartesian
        for qi, q in enumerate(cell_family):
            qv = _eval3(q, pts)
            for d in range(3):
                dofs.append(DofInfo("interior", 0, 3 * qi + d))
                rows.append([poly.tet_integral(poly.p_mul(v[d], q)) for v in prebasis])
                wv = np.zeros((len(pts), 3))
                wv[:, d] = rule.weights * qv
                dof_points.append(pts)
                dof_weights.append(wv)

    assert len(rows) == dim
    inv = poly.invert_fraction_matrix(rows)
    shapes = []
    for jcol in range(dim):
        v = poly.v_zero()
        for kpre in range(dim):
            c = inv[kpre][jcol]
            if c != 0:
                v = poly.v_add(v, poly.v_scale(prebasis[kpre], c))
        shapes.append(v)

    monomials = poly.monomials_upto(p + 1, 3)
    return ReferenceBasis("nedelec", p, monomials, shapes, dofs,
                          dof_points, dof_weights)


def _nedelec_prebasis(p):
    """Spanning set: (P_p)^3 plus an exact basis of x cross (homogeneous P_p)^3."""
    pre = []
    for m in poly.monomials_upto(p, 3):
        for d in range(3):
            v = poly.v_zero()
            v[d] = poly.p_mono(m)
            pre.append(v)
    # homogeneous degree p+1 part: independent subset of x cross generators
    homog = [m for m in poly.monomials_upto(p, 3) if sum(m) == p]
    gens = []
    for m in homog:
        for d in range(3):
            w = poly.v_zero()
            w[d] = poly.p_mono(m)
            gens.append(poly.v_cross_position(w))
    monos_hi = [m for m in poly.monomials_upto(p + 1, 3) if sum(m) == p + 1]
    col = {(m, d): i for i, (m, d) in enumerate(
        [(m, d) for m in monos_hi for d in range(3)])}
    reduced = []  # rows in echelon form: (pivot_col, row_vector)
    for g in gens:
        vec = [poly.Zero] * len(col)
        for d in range(3):
            for m, c in g[d].items():
                vec[col[(m, d)]] = c
        for pivot, rowv in reduced:
            if vec[pivot] != 0:
                f = vec[pivot] / rowv[pivot]
                vec = [a - f * b for a, b in zip(vec, rowv)]
        nz = next((i for i, a in enumerate(vec) if a != 0), None)
        if nz is not None:
            reduced.append((nz, vec))
            pre.append(g)
    return pre


def _dot_restrict(v, shift, mat, tang):
    """Restrict vector polynomial to an affine sub-simplex and dot with tang."""
    out = {}
    for d in range(3):
        if tang[d] == 0:
            continue
        sub = poly.p_subst_affine(v[d], shift, mat)
        out = poly.p_add(out, poly.p_scale(sub, tang[d]))
    return out


def _eval1(q, s):
    out = np.zeros_like(s)
    for (a,), c in q.items():
        out += float(c) * s ** a
    return out


def _eval2(q, uv):
    out = np.zeros(len(uv))
    for (a, b), c in q.items():
        out += float(c) * uv[:, 0] ** a * uv[:, 1] ** b
    return out


def _eval3(q, pts):
    out = np.zeros(len(pts))
    for (a, b, c), coef in q.items():
        out += float(coef) * pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c
    return out


def lagrange_dimension(order):
    return (order + 1) * (order + 2) * (order + 3) // 6


@lru_cache(maxsize=None)
def build_lagrange_basis(order):
    """Nodal Lagrange basis at equispaced barycentric nodes."""
    if not (1 <= order <= MAX_ORDER + 1):
        raise ValueError(f"unsupported Lagrange order {order}; supported range is 1..{MAX_ORDER + 1}")
    nodes = []  # (barycentric multi-index, DofInfo)
    for ent_idx, node in _lagrange_nodes(order):
        nodes.append((node, ent_idx))

    monomials3 = poly.monomials_upto(order, 3)
    dim = lagrange_dimension(order)
    assert len(nodes) == dim

    rows = []
    dofs = []
    dof_points = []
    dof_weights = []
    for bary, info in nodes:
        pt = tuple(Fraction(b, order) for b in bary[1:])
        row = [pt[0] ** m[0] * pt[1] ** m[1] * pt[2] ** m[2] for m in monomials3]
        rows.append(row)
        dofs.append(info)
        dof_points.append(np.array([[float(c) for c in pt]]))
        dof_weights.append(np.ones((1,)))

    inv = poly.invert_fraction_matrix(rows)
    shapes = []
    for jcol in range(dim):
        s = {}
        for kpre in range(dim):
            c = inv[kpre][jcol]
            if c != 0:
                s = poly.p_add(s, poly.p_mono(monomials3[kpre], c))
        shapes.append(s)
    return ReferenceBasis("lagrange", order, monomials3, shapes, dofs,
                          dof_points, dof_weights)


def _lagrange_nodes(order):
    """Equispaced nodes with entity classification in canonical order."""
    q = order
    vert_nodes = []
    edge_nodes = {e: [] for e in range(6)}
    face_nodes = {f: [] for f in range(4)}
    cell_nodes = []
    for i0 in range(q, -1, -1):
        for i1 in range(q - i0, -1, -1):
            for i2 in range(q - i0 - i1, -1, -1):
                i3 = q - i0 - i1 - i2
                bary = (i0, i1, i2, i3)
                support = tuple(v for v in range(4) if bary[v] > 0)
                if len(support) == 1:
                    vert_nodes.append((bary, support[0]))
                elif len(support) == 2:
                    e = EDGE_VERTICES.index(support)
                    edge_nodes[e].append(bary)
                elif len(support) == 3:
                    f = FACE_VERTICES.index(support)
                    face_nodes[f].append(bary)
                else:
                    cell_nodes.append(bary)

    out = []
    for bary, v in sorted(vert_nodes, key=lambda t: t[1]):
        out.append((DofInfo("vertex", v, 0), bary))
    for e in range(6):
        i, j = EDGE_VERTICES[e]
        ordered = sorted(edge_nodes[e], key=lambda b: b[j])
        for k, bary in enumerate(ordered):
            out.append((DofInfo("edge", e, k), bary))
    for f in range(4):
        i, j, k = FACE_VERTICES[f]
        ordered = sorted(face_nodes[f], key=lambda b: (b[j], b[k]))
        for m, bary in enumerate(ordered):
            out.append((DofInfo("face", f, m), bary))
    for m, bary in enumerate(sorted(cell_nodes, key=lambda b: (b[1], b[2], b[3]))):
        out.append((DofInfo("interior", 0, m), bary))
    return [(info, bary) for info, bary in out]


@lru_cache(maxsize=None)
def gradient_coupling(p):
    """Exact local matrix of Nedelec dofs applied to Lagrange gradients.

    Column j holds the Nedelec-order-p coefficients of the gradient of the
    order-(p+1) Lagrange shape function j.  Because both bases use the
    ascending-vertex convention, scattering this one matrix elementwise
    yields the global discrete gradient.
    """
    ned = build_reference_basis(p)
    lag = build_lagrange_basis(p + 1)
    cols = []
    for s in lag.coeffs_exact:
        grad = [poly.p_diff(s, ax) for ax in range(3)]
        cols.append(_apply_nedelec_dofs_exact(p, grad))
    mat = np.array(cols, dtype=float).T
    assert mat.shape == (ned.dim, lag.dim)
    return mat


def _apply_nedelec_dofs_exact(p, vecpoly):
    """All Nedelec order-p dofs applied exactly to one vector polynomial."""
    edge_family = [poly.shifted_legendre(k) for k in range(p + 1)]
    face_family = poly.orthogonal_family(p - 1, 2) if p >= 1 else []
    cell_family = poly.orthogonal_family(p - 2, 3) if p >= 2 else []
    vals = []
    for (i, j) in EDGE_VERTICES:
        vi, vj = _REF_VERTS[i], _REF_VERTS[j]
        tang = [vj[d] - vi[d] for d in range(3)]
        mat = [[tang[d]] for d in range(3)]
        r = _dot_restrict(vecpoly, vi, mat, tang)
        for q in edge_family:
            vals.append(float(poly.seg_integral(poly.p_mul(r, q))))
    for (i, j, k) in FACE_VERTICES:
        vi, vj, vk = _REF_VERTS[i], _REF_VERTS[j], _REF_VERTS[k]
        t1 = [vj[d] - vi[d] for d in range(3)]
        t2 = [vk[d] - vi[d] for d in range(3)]
        mat = [[t1[d], t2[d]] for d in range(3)]
        r1 = _dot_restrict(vecpoly, vi, mat, t1)
        r2 = _dot_restrict(vecpoly, vi, mat, t2)
        for q in face_family:
            vals.append(float(poly.tri_integral(poly.p_mul(r1, q))))
            vals.append(float(poly.tri_integral(poly.p_mul(r2, q))))
    for q in cell_family:
        for d in range(3):
            vals.append(float(poly.tet_integral(poly.p_mul(vecpoly[d], q))))
    return vals
