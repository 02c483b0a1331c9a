"""Exact rational polynomial arithmetic on reference simplices.

Polynomials are dicts mapping exponent tuples to ``fractions.Fraction``
coefficients; the tuple length fixes the number of variables.  All
construction-time algebra for the finite element bases (products, curls,
affine substitutions, simplex moments) is carried out exactly so that
unisolvence and discrete complex identities hold to machine precision
once coefficients are converted to floats.
"""

from fractions import Fraction
from math import factorial

Zero = Fraction(0)
One = Fraction(1)


def p_zero():
    return {}


def p_const(c, nvars=3):
    c = Fraction(c)
    if c == 0:
        return {}
    return {(0,) * nvars: c}


def p_mono(expo, c=One):
    c = Fraction(c)
    if c == 0:
        return {}
    return {tuple(expo): c}


def p_add(*polys):
    out = {}
    for p in polys:
        for m, c in p.items():
            s = out.get(m, Zero) + c
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
    return out


def p_scale(p, c):
    c = Fraction(c)
    if c == 0:
        return {}
    return {m: v * c for m, v in p.items()}


def p_mul(p, q):
    out = {}
    for mp, cp in p.items():
        for mq, cq in q.items():
            m = tuple(a + b for a, b in zip(mp, mq))
            s = out.get(m, Zero) + cp * cq
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
    return out


def p_diff(p, axis):
    out = {}
    for m, c in p.items():
        if m[axis] == 0:
            continue
        mm = list(m)
        mm[axis] -= 1
        out[tuple(mm)] = c * m[axis]
    return out


def p_degree(p):
    return max((sum(m) for m in p), default=0)


def v_zero():
    return [{}, {}, {}]


def v_add(u, v):
    return [p_add(u[i], v[i]) for i in range(3)]


def v_scale(u, c):
    return [p_scale(u[i], c) for i in range(3)]


def v_curl(v):
    """Curl of a 3-variable vector polynomial."""
    return [
        p_add(p_diff(v[2], 1), p_scale(p_diff(v[1], 2), -1)),
        p_add(p_diff(v[0], 2), p_scale(p_diff(v[2], 0), -1)),
        p_add(p_diff(v[1], 0), p_scale(p_diff(v[0], 1), -1)),
    ]


def v_cross_position(v):
    """x cross v, where x is the position field (x, y, z)."""
    x = p_mono((1, 0, 0))
    y = p_mono((0, 1, 0))
    z = p_mono((0, 0, 1))
    return [
        p_add(p_mul(y, v[2]), p_scale(p_mul(z, v[1]), -1)),
        p_add(p_mul(z, v[0]), p_scale(p_mul(x, v[2]), -1)),
        p_add(p_mul(x, v[1]), p_scale(p_mul(y, v[0]), -1)),
    ]


def p_subst_affine(p, shift, mat):
    """Substitute x_i = shift_i + sum_k mat[i][k] t_k into p.

    ``shift`` has one Fraction per original variable; ``mat`` is a list of
    rows, one per original variable, each with one Fraction per new
    variable.  Returns a polynomial in the new variables.
    """
    nnew = len(mat[0]) if mat else 0
    one = p_const(1, nnew)
    # linear forms for each original variable, as polynomials in t
    forms = []
    for i in range(len(shift)):
        f = p_const(shift[i], nnew)
        for k in range(nnew):
            f = p_add(f, p_mono(tuple(1 if j == k else 0 for j in range(nnew)), mat[i][k]))
        forms.append(f)
    # cache powers of each form
    maxdeg = p_degree(p)
    powers = []
    for f in forms:
        pw = [one]
        for _ in range(maxdeg):
            pw.append(p_mul(pw[-1], f))
        powers.append(pw)
    out = {}
    for m, c in p.items():
        term = p_const(c, nnew)
        for i, e in enumerate(m):
            if e:
                term = p_mul(term, powers[i][e])
        out = p_add(out, term)
    return out


def tet_integral(p):
    """Exact integral over the unit reference tetrahedron."""
    s = Zero
    for (a, b, c), coef in p.items():
        s += coef * Fraction(factorial(a) * factorial(b) * factorial(c), factorial(a + b + c + 3))
    return s


def tri_integral(p):
    """Exact integral over the unit reference triangle (2 variables)."""
    s = Zero
    for (a, b), coef in p.items():
        s += coef * Fraction(factorial(a) * factorial(b), factorial(a + b + 2))
    return s


def seg_integral(p):
    """Exact integral over [0, 1] (1 variable)."""
    s = Zero
    for (a,), coef in p.items():
        s += coef * Fraction(1, a + 1)
    return s


def shifted_legendre(k):
    """Legendre polynomial of degree k mapped to [0, 1], exact coefficients."""
    # P_k(2s - 1) via the recurrence (n+1)P_{n+1} = (2n+1) t P_n - n P_{n-1}
    t = p_add(p_mono((1,), 2), p_const(-1, 1))
    p0 = p_const(1, 1)
    if k == 0:
        return p0
    p1 = t
    for n in range(1, k):
        p2 = p_add(
            p_scale(p_mul(t, p1), Fraction(2 * n + 1, n + 1)),
            p_scale(p0, Fraction(-n, n + 1)),
        )
        p0, p1 = p1, p2
    return p1


def monomials_upto(deg, nvars):
    """All exponent tuples of total degree <= deg, graded lexicographic."""
    out = []
    for d in range(deg + 1):
        out.extend(_monos_of_degree(d, nvars))
    return out


def _monos_of_degree(d, nvars):
    if nvars == 1:
        return [(d,)]
    out = []
    for e in range(d, -1, -1):
        for rest in _monos_of_degree(d - e, nvars - 1):
            out.append((e,) + rest)
    return out


def orthogonal_family(deg, nvars):
    """L2-orthogonal polynomial family on the reference simplex.

    Gram-Schmidt on graded monomials, unnormalized to stay rational.
    Used as the fixed moment families for face and interior degrees of
    freedom; exact orthogonality is not required for unisolvence but
    keeps the moment sets canonical.
    """
    integ = {1: seg_integral, 2: tri_integral, 3: tet_integral}[nvars]
    basis = []
    for m in monomials_upto(deg, nvars):
        q = p_mono(m)
        for b in basis:
            num = integ(p_mul(q, b))
            den = integ(p_mul(b, b))
            if num != 0:
                q = p_add(q, p_scale(b, -num / den))
        basis.append(q)
    return basis


def invert_fraction_matrix(rows):
    """Exact inverse of a square matrix of Fractions via Gauss-Jordan.

    Raises ValueError if singular.
    """
    n = len(rows)
    a = [list(r) + [One if i == j else Zero for j in range(n)] for i, r in enumerate(rows)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if a[r][col] != 0:
                piv = r
                break
        if piv is None:
            raise ValueError("matrix is singular")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
        inv = One / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [vr - f * vc for vr, vc in zip(a[r], a[col])]
    return [row[n:] for row in a]
