"""Assembly of weighted mass, curl-curl and mixed divergence operators.

Element integrals reduce, for affine maps and piecewise-constant
coefficients, to a contraction of a reference moment tensor with a 3x3
per-element metric; the contraction runs through the selected kernel
backend.  Global reduction sorts triplets by (row, col, value bits)
before summation, which makes the assembled matrices bitwise identical
across reruns and element permutations.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import kernels
from .quadrature import tetrahedron_rule
from .reference import build_lagrange_basis, build_reference_basis
from .spaces import discrete_gradient


class AssemblyError(Exception):
    pass


@dataclass
class SparseOperator:
    """Assembled sparse operator on free degrees of freedom."""

    matrix: sp.csr_matrix
    role: str
    row_space: object
    col_space: object

    @property
    def shape(self):
        return self.matrix.shape

    def symmetry_error(self):
        d = self.matrix - self.matrix.T
        scale = max(np.abs(self.matrix.data).max(), 1e-300)
        return float(np.abs(d.data).max() / scale) if d.nnz else 0.0


@lru_cache(maxsize=None)
def _value_moments(p, degree):
    rule = tetrahedron_rule(degree)
    tab = build_reference_basis(p).tabulate(rule.cartesian)
    return np.einsum("q,qid,qje->ijde", rule.weights, tab, tab)


@lru_cache(maxsize=None)
def _curl_moments(p, degree):
    rule = tetrahedron_rule(degree)
    tab = build_reference_basis(p).tabulate_curl(rule.cartesian)
    return np.einsum("q,qid,qje->ijde", rule.weights, tab, tab)


@lru_cache(maxsize=None)
def _mixed_moments(p, degree):
    rule = tetrahedron_rule(degree)
    vals = build_reference_basis(p).tabulate(rule.cartesian)
    grads = build_lagrange_basis(p + 1).tabulate_grad(rule.cartesian)
    return np.einsum("q,qid,qje->ijde", rule.weights, vals, grads)


@lru_cache(maxsize=None)
def _component_grad_moments(p, degree):
    rule = tetrahedron_rule(degree)
    tab = build_reference_basis(p).tabulate_component_grads(rule.cartesian)
    return np.einsum("q,qida,qjeb->ijdaeb", rule.weights, tab, tab)


def _coo_to_csr_canonical(rows, cols, vals, shape):
    """Deterministic duplicate reduction independent of triplet order."""
    bits = np.ascontiguousarray(vals).view(np.uint64)
    order = np.lexsort((bits, cols, rows))
    r, c, v = rows[order], cols[order], vals[order]
    if len(r) == 0:
        return sp.csr_matrix(shape)
    new = np.empty(len(r), dtype=bool)
    new[0] = True
    new[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
    starts = np.nonzero(new)[0]
    sums = np.add.reduceat(v, starts)
    m = sp.csr_matrix((sums, (r[starts], c[starts])), shape=shape)
    m.sort_indices()
    return m


def _scatter(element_mats, row_space, col_space):
    rows_l = row_space.full_to_free[row_space.cell_dofs]
    cols_l = col_space.full_to_free[col_space.cell_dofs]
    nt, ni, nj = element_mats.shape
    rows = np.repeat(rows_l, nj, axis=1).ravel()
    cols = np.tile(cols_l, (1, ni)).ravel()
    vals = element_mats.reshape(nt, -1).ravel()
    keep = (rows >= 0) & (cols >= 0)
    return _coo_to_csr_canonical(rows[keep], cols[keep], np.ascontiguousarray(vals[keep]),
                                 (row_space.num_free, col_space.num_free))


def assemble(space, coeffs, role, other_space=None, quad_degree=None):
    """Assemble one of the weak-form operators on free dofs.

    role 'mass'      : (eps u, v) on the curl space
    role 'curlcurl'  : (chi curl u, curl v) on the curl space
    role 'mixed'     : (eps grad q, v), columns in the h1 space
    """
    p = space.p
    degree = quad_degree if quad_degree is not None else 2 * p + 2
    eps_t, _, chi_t = coeffs.tensor_arrays(space.mesh.labels)
    absdet = np.abs(space.jac_det)

    if role == "mass":
        metrics = np.einsum("tde,tef,tgf->tdg", space.jac_inv, eps_t, space.jac_inv)
        metrics *= absdet[:, None, None]
        mats = kernels.element_matrices(_value_moments(p, degree), metrics)
        return SparseOperator(_scatter(mats, space, space), "mass", space, space)
    if role == "curlcurl":
        metrics = np.einsum("ted,tef,tfg->tdg", space.jac, chi_t, space.jac)
        metrics /= absdet[:, None, None]
        mats = kernels.element_matrices(_curl_moments(p, degree), metrics)
        return SparseOperator(_scatter(mats, space, space), "curlcurl", space, space)
    if role == "mixed":
        if other_space is None or other_space.flavor != "h1":
            raise AssemblyError("mixed role needs the scalar multiplier space")
        if other_space.mesh is not space.mesh or other_space.p != space.p:
            raise AssemblyError("mixed role needs matching mesh and order")
        metrics = np.einsum("tde,tef,tgf->tdg", space.jac_inv, eps_t, space.jac_inv)
        metrics *= absdet[:, None, None]
        mats = kernels.element_matrices(_mixed_moments(p, degree), metrics)
        return SparseOperator(_scatter(mats, space, other_space), "mixed",
                              space, other_space)
    raise AssemblyError(f"unknown assembly role {role!r}")


def assemble_broken_h1(space, coeffs, weight="eps", quad_degree=None):
    """Broken H1 seminorm Gram matrix with per-subdomain scalar weight.

    weight 'eps' uses the largest eigenvalue of eps per subdomain, 'chi'
    the largest eigenvalue of chi.
    """
    if space.flavor != "curl":
        raise AssemblyError("broken H1 matrix is defined on the curl space")
    p = space.p
    degree = quad_degree if quad_degree is not None else 2 * p + 2
    table = coeffs.eps_max if weight == "eps" else coeffs.chi_max
    w_t = np.array([table[k] for k in space.mesh.labels.tolist()])
    absdet = np.abs(space.jac_det)
    Wg = _component_grad_moments(p, degree)
    Mcov = np.einsum("tde,tge->tdg", space.jac_inv, space.jac_inv)
    mats = np.einsum("ijdaeb,tde,tab->tij", Wg, Mcov, Mcov, optimize=True)
    mats *= (w_t * absdet)[:, None, None]
    return SparseOperator(_scatter(mats, space, space), "broken_h1", space, space)


class Forms:
    """Lazy bundle of the operators tied to one mesh, order and coefficients.

    Holds the tangential-zero curl space, the zero-trace scalar space, the
    weighted mass/curl-curl/mixed matrices, the exact discrete gradient
    and the broken H1 Gram matrices.
    """

    def __init__(self, mesh, p, coeffs):
        from .spaces import FeSpace
        self.mesh = mesh
        self.p = p
        self.coeffs = coeffs
        self.space = FeSpace(mesh, p, "curl", "tangential_zero")
        self.multiplier_space = FeSpace(mesh, p, "h1", "zero_trace")
        self._cache = {}

    def _get(self, name, builder):
        if name not in self._cache:
            self._cache[name] = builder()
        return self._cache[name]

    @property
    def mass(self):
        return self._get("mass", lambda: assemble(self.space, self.coeffs, "mass").matrix)

    @property
    def curlcurl(self):
        return self._get("curlcurl",
                         lambda: assemble(self.space, self.coeffs, "curlcurl").matrix)

    @property
    def mixed(self):
        return self._get("mixed", lambda: assemble(
            self.space, self.coeffs, "mixed", other_space=self.multiplier_space).matrix)

    @property
    def gradient(self):
        return self._get("gradient",
                         lambda: discrete_gradient(self.space, self.multiplier_space))

    def broken_h1(self, weight="eps"):
        return self._get(f"broken_{weight}", lambda: assemble_broken_h1(
            self.space, self.coeffs, weight=weight).matrix)

    def energy_matrix(self, omega):
        if omega <= 0:
            raise ValueError("energy norm requires omega > 0")
        return (omega * omega) * self.mass + self.curlcurl


def norm_weighted(forms, coeffs_free, weight="eps"):
    """eps-weighted L2 norm of the field, or chi-weighted norm of its curl."""
    x = np.asarray(coeffs_free)
    A = forms.mass if weight == "eps" else forms.curlcurl
    return float(np.sqrt(max(x @ (A @ x), 0.0)))


def norm_energy(forms, coeffs_free, omega):
    """Energy norm: sqrt(omega^2 |v|_eps^2 + |curl v|_chi^2)."""
    if omega <= 0:
        raise ValueError("energy norm requires omega > 0")
    x = np.asarray(coeffs_free)
    val = omega * omega * (x @ (forms.mass @ x)) + x @ (forms.curlcurl @ x)
    return float(np.sqrt(max(val, 0.0)))


def norm_broken_h1(forms, coeffs_free, weight="eps"):
    """Broken H1 norm with the domain-diameter derivative scaling."""
    x = np.asarray(coeffs_free)
    base = norm_weighted(forms, x, weight=weight) ** 2
    d = forms.coeffs.domain_diameter
    semi = x @ (forms.broken_h1(weight) @ x)
    return float(np.sqrt(max(base + d * d * semi, 0.0)))


def write_matrix_market(op, path):
    """Coordinate-format dump (symmetric roles store the lower triangle)."""
    m = op.matrix.tocoo()
    symmetric = op.role in ("mass", "curlcurl", "broken_h1")
    kind = "symmetric" if symmetric else "general"
    lines = [f"%%MatrixMarket matrix coordinate real {kind}"]
    r, c, v = m.row, m.col, m.data
    if symmetric:
        keep = r >= c
        r, c, v = r[keep], c[keep], v[keep]
    order = np.lexsort((r, c))
    lines.append(f"{op.shape[0]} {op.shape[1]} {len(r)}")
    for i in order:
        lines.append(f"{r[i] + 1} {c[i] + 1} {v[i]!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
