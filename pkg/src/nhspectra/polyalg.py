"""Complex polynomial arithmetic, simultaneous root finding and resultants.

Univariate polynomials store ascending coefficient arrays; multivariate
polynomials store sparse exponent-tuple -> coefficient maps.  Resultants of
polynomials with polynomial coefficients are computed by evaluation and
interpolation on roots-of-unity grids, never by symbolic determinant
expansion.
"""

from __future__ import annotations

import numpy as np

from .errors import DegreeZero, DegreeBudgetExceeded, NonConvergence, ZeroPolynomial

#: Relative magnitude below which a coefficient counts as zero.
COEFF_ZERO_TOL = 1e-12

#: Roots closer than this are merged into one cluster (reported at the mean).
ROOT_CLUSTER_TOL = 1e-7

#: Default relative residual target for poly_roots.
ROOT_RESIDUAL_TOL = 1e-10

_ABERTH_MAX_ITER = 50


class UniPoly:
    """Univariate polynomial with complex coefficients, ascending degree.

    Trailing coefficients whose magnitude is at most ``tol`` times the
    largest magnitude are trimmed on construction, so ``degree`` is the
    index of the last numerically nonzero coefficient.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, tol=COEFF_ZERO_TOL):
        c = np.atleast_1d(np.asarray(coeffs, dtype=complex)).ravel()
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        scale = float(np.max(np.abs(c)))
        if scale > 0.0:
            k = c.size - 1
            while k > 0 and abs(c[k]) <= tol * scale:
                k -= 1
            c = c[: k + 1]
        else:
            c = np.zeros(1, dtype=complex)
        self.coeffs = c

    @property
    def degree(self):
        return self.coeffs.size - 1

    def scale(self):
        """Largest coefficient magnitude."""
        return float(np.max(np.abs(self.coeffs)))

    def is_zero(self, tol=COEFF_ZERO_TOL):
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for c in self.coeffs[::-1]:
            out = out * z + c
        return out if out.shape else complex(out)

    def derivative(self):
        if self.degree == 0:
            return UniPoly([0.0])
        k = np.arange(1, self.coeffs.size)
        return UniPoly(self.coeffs[1:] * k)

    def eval_abs(self, z):
        """Sum of |c_k| |z|^k; the natural residual scale at z."""
        az = np.abs(np.asarray(z, dtype=complex))
        out = np.zeros_like(az)
        for c in np.abs(self.coeffs[::-1]):
            out = out * az + c
        return out if out.shape else float(out)

    def __repr__(self):
        return f"UniPoly(degree={self.degree})"


def _aberth_refine(coeffs, roots, tol):
    """One-shot Aberth-Ehrlich polish of a full root set.

    Returns (roots, residuals, converged).  `coeffs` ascending.
    """
    p = UniPoly(coeffs)
    dp = p.derivative()
    z = np.array(roots, dtype=complex)
    for _ in range(_ABERTH_MAX_ITER):
        pv = p(z)
        res_scale = np.maximum(p.eval_abs(z), np.finfo(float).tiny)
        if np.all(np.abs(pv) <= tol * res_scale):
            return z, np.abs(pv), True
        dv = dp(z)
        w = np.zeros_like(z)
        ok = np.abs(dv) > 0
        w[ok] = pv[ok] / dv[ok]
        # Aberth correction: Newton step divided by the repulsion sum.
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        s = np.sum(1.0 / diff, axis=1)
        denom = 1.0 - w * s
        step = np.where(np.abs(denom) > 1e-30, w / denom, w)
        z = z - step
    pv = p(z)
    res_scale = np.maximum(p.eval_abs(z), np.finfo(float).tiny)
    return z, np.abs(pv), bool(np.all(np.abs(pv) <= tol * res_scale))


def _cluster_roots(roots, tol=ROOT_CLUSTER_TOL):
    """Merge roots within `tol` of each other; each cluster reports its mean."""
    z = np.array(roots, dtype=complex)
    n = z.size
    if n <= 1:
        return z
    thr = tol * max(1.0, float(np.max(np.abs(z))))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= thr:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = np.empty(n, dtype=complex)
    for members in groups.values():
        mean = np.mean(z[members])
        for i in members:
            out[i] = mean
    return out


def sort_by_modulus_phase(z):
    """Canonical root order: ascending modulus, ties by phase in [0, 2pi)."""
    z = np.asarray(z, dtype=complex)
    phase = np.mod(np.angle(z), 2.0 * np.pi)
    order = np.lexsort((phase, np.abs(z)))
    return z[order]


def poly_roots(p, tol=ROOT_RESIDUAL_TOL):
    """All complex roots of `p` (with multiplicity), canonically sorted.

    Companion-matrix eigenvalues seed an Aberth-Ehrlich refinement pass.
    Roots within ROOT_CLUSTER_TOL of each other are reported as a cluster
    centered at their mean.

    Raises ZeroPolynomial for a (numerically) zero input and NonConvergence
    if the refinement budget is exhausted; the exception then carries the
    best iterate and residual.
    """
    if not isinstance(p, UniPoly):
        p = UniPoly(p)
    if p.is_zero():
        raise ZeroPolynomial("all coefficients below tolerance")
    if p.degree < 1:
        raise ZeroPolynomial("degree zero polynomial has no roots")
    seed = np.roots(p.coeffs[::-1])
    roots, residuals, converged = _aberth_refine(p.coeffs, seed, tol)
    if not converged:
        raise NonConvergence(
            f"root refinement budget exceeded (max residual {residuals.max():.3e})",
            roots=sort_by_modulus_phase(roots),
            residual=float(residuals.max()),
        )
    return sort_by_modulus_phase(_cluster_roots(roots))


class MultiPoly:
    """Sparse multivariate polynomial over the complex numbers.

    `variables` is an ordered tuple of names; `terms` maps exponent tuples
    to coefficients.  Terms with |coefficient| <= tol * max|coefficient|
    are dropped.
    """

    __slots__ = ("variables", "terms")

    def __init__(self, variables, terms=None, tol=COEFF_ZERO_TOL):
        self.variables = tuple(variables)
        terms = dict(terms or {})
        if terms:
            scale = max(abs(c) for c in terms.values())
            if scale > 0.0:
                terms = {
                    e: complex(c)
                    for e, c in terms.items()
                    if abs(c) > tol * scale
                }
            else:
                terms = {}
        self.terms = terms

    # -- constructors -------------------------------------------------

    @classmethod
    def constant(cls, variables, value):
        if value == 0:
            return cls(variables, {})
        return cls(variables, {(0,) * len(tuple(variables)): complex(value)})

    @classmethod
    def monomial(cls, variables, var, power=1, coeff=1.0):
        variables = tuple(variables)
        e = [0] * len(variables)
        e[variables.index(var)] = power
        return cls(variables, {tuple(e): complex(coeff)})

    # -- queries ------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def degree(self, var):
        if not self.terms:
            return 0
        i = self.variables.index(var)
        return max(e[i] for e in self.terms)

    def min_power(self, var):
        if not self.terms:
            return 0
        i = self.variables.index(var)
        return min(e[i] for e in self.terms)

    def max_abs_coeff(self):
        if not self.terms:
            return 0.0
        return max(abs(c) for c in self.terms.values())

    # -- arithmetic ---------------------------------------------------

    def _check_same_vars(self, other):
        if self.variables != other.variables:
            raise ValueError("variable mismatch")

    def __add__(self, other):
        if np.isscalar(other):
            other = MultiPoly.constant(self.variables, other)
        self._check_same_vars(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return MultiPoly(self.variables, terms)

    def __sub__(self, other):
        if np.isscalar(other):
            other = MultiPoly.constant(self.variables, other)
        return self + (other * -1.0)

    def __mul__(self, other):
        if np.isscalar(other):
            return MultiPoly(
                self.variables, {e: c * other for e, c in self.terms.items()}
            )
        self._check_same_vars(other)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0.0) + c1 * c2
        return MultiPoly(self.variables, terms)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    # -- evaluation and views -----------------------------------------

    def evaluate(self, values):
        """Evaluate at a point (or numpy-broadcast grids), values by name."""
        vals = [np.asarray(values[v], dtype=complex) for v in self.variables]
        out = 0.0
        for e, c in self.terms.items():
            term = c
            for v, p in zip(vals, e):
                if p:
                    term = term * v**p
            out = out + term
        return out

    def eval_abs(self, values):
        """Sum of |c| * prod |v|^e; residual scale at the point."""
        vals = [np.abs(np.asarray(values[v], dtype=complex)) for v in self.variables]
        out = 0.0
        for e, c in self.terms.items():
            term = abs(c)
            for v, p in zip(vals, e):
                if p:
                    term = term * v**p
            out = out + term
        return out

    def partial(self, var, value):
        """Substitute a numeric value for one variable."""
        i = self.variables.index(var)
        rest = self.variables[:i] + self.variables[i + 1 :]
        terms = {}
        for e, c in self.terms.items():
            ne = e[:i] + e[i + 1 :]
            terms[ne] = terms.get(ne, 0.0) + c * value**e[i]
        return MultiPoly(rest, terms)

    def coeffs_in(self, var):
        """View as univariate in `var`: ascending list of MultiPoly coefficients."""
        i = self.variables.index(var)
        rest = self.variables[:i] + self.variables[i + 1 :]
        deg = self.degree(var)
        buckets = [dict() for _ in range(deg + 1)]
        for e, c in self.terms.items():
            ne = e[:i] + e[i + 1 :]
            b = buckets[e[i]]
            b[ne] = b.get(ne, 0.0) + c
        return [MultiPoly(rest, b, tol=0.0) for b in buckets]

    def to_unipoly(self):
        if len(self.variables) != 1:
            raise ValueError("to_unipoly needs exactly one variable")
        deg = self.degree(self.variables[0])
        c = np.zeros(deg + 1, dtype=complex)
        for e, coeff in self.terms.items():
            c[e[0]] += coeff
        return UniPoly(c)

    def derivative(self, var):
        i = self.variables.index(var)
        terms = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            ne = list(e)
            ne[i] -= 1
            terms[tuple(ne)] = terms.get(tuple(ne), 0.0) + c * e[i]
        return MultiPoly(self.variables, terms, tol=0.0)

    # -- structure manipulation ---------------------------------------

    def shift_down(self, var, k):
        """Divide by var**k (every term must have exponent >= k)."""
        if k == 0:
            return self
        i = self.variables.index(var)
        terms = {}
        for e, c in self.terms.items():
            if e[i] < k:
                raise ValueError(f"term not divisible by {var}**{k}")
            ne = list(e)
            ne[i] -= k
            terms[tuple(ne)] = c
        return MultiPoly(self.variables, terms, tol=0.0)

    def strip_content(self, variables=None):
        """Remove the largest common monomial factor in the given variables."""
        out = self
        for v in variables or self.variables:
            m = out.min_power(v)
            if m > 0:
                out = out.shift_down(v, m)
        return out

    def drop_small(self, rel_tol):
        """Re-trim against the current max coefficient magnitude."""
        return MultiPoly(self.variables, self.terms, tol=rel_tol)

    def real_coeff_part(self):
        return MultiPoly(
            self.variables,
            {e: complex(c.real) for e, c in self.terms.items()},
        )

    def imag_coeff_part(self):
        return MultiPoly(
            self.variables,
            {e: complex(c.imag) for e, c in self.terms.items()},
        )

    def rename(self, mapping):
        return MultiPoly(
            tuple(mapping.get(v, v) for v in self.variables), self.terms, tol=0.0
        )

    def normalized(self):
        """Scale so the largest coefficient magnitude is 1."""
        s = self.max_abs_coeff()
        if s == 0.0:
            return self
        return self * (1.0 / s)

    def __repr__(self):
        return f"MultiPoly({self.variables}, nterms={len(self.terms)})"


class SylvesterMatrix:
    """Sylvester matrix of two polynomials in one variable.

    Rows 0..m-1 hold shifted copies of f's coefficients (descending), rows
    m..m+n-1 shifted copies of g's, where n = deg f and m = deg g.  Entries
    live in the coefficient domain: complex scalars or MultiPoly.
    """

    __slots__ = ("entries", "deg_f", "deg_g")

    def __init__(self, entries, deg_f, deg_g):
        self.entries = entries
        self.deg_f = deg_f
        self.deg_g = deg_g

    @property
    def size(self):
        return self.deg_f + self.deg_g

    def to_numeric(self):
        out = np.zeros((self.size, self.size), dtype=complex)
        for i in range(self.size):
            for j in range(self.size):
                e = self.entries[i][j]
                out[i, j] = complex(e)
        return out


def _elim_coeffs(f, var):
    """Ascending coefficient list of f in the eliminated variable."""
    if isinstance(f, UniPoly):
        return list(f.coeffs)
    if isinstance(f, MultiPoly):
        if var is None:
            if len(f.variables) != 1:
                raise ValueError("specify the variable to eliminate")
            var = f.variables[0]
        return f.coeffs_in(var)
    return list(UniPoly(f).coeffs)


def _trim_top(coeffs):
    """Drop numerically-zero leading coefficients (scalar or MultiPoly)."""
    def mag(c):
        return c.max_abs_coeff() if isinstance(c, MultiPoly) else abs(c)

    scale = max((mag(c) for c in coeffs), default=0.0)
    k = len(coeffs) - 1
    while k > 0 and mag(coeffs[k]) <= COEFF_ZERO_TOL * scale:
        k -= 1
    return coeffs[: k + 1]


def sylvester(f, g, var=None):
    """Sylvester matrix of f and g viewed as univariate in `var`."""
    fc = _trim_top(_elim_coeffs(f, var))
    gc = _trim_top(_elim_coeffs(g, var))
    n, m = len(fc) - 1, len(gc) - 1
    if n < 1 or m < 1:
        raise DegreeZero("both inputs need positive degree in the eliminated variable")
    size = n + m
    rows = [[0.0] * size for _ in range(size)]
    fdesc = fc[::-1]
    gdesc = gc[::-1]
    for r in range(m):
        for j, c in enumerate(fdesc):
            rows[r][r + j] = c
    for r in range(n):
        for j, c in enumerate(gdesc):
            rows[m + r][r + j] = c
    return SylvesterMatrix(rows, n, m)


def _grid_eval(coeff, grids):
    """Evaluate a coefficient (scalar or MultiPoly) on a meshgrid tuple."""
    if isinstance(coeff, MultiPoly):
        return coeff.evaluate(dict(zip(coeff.variables, grids)))
    shape = grids[0].shape if grids else ()
    return np.full(shape, complex(coeff)) if shape else complex(coeff)


def resultant(f, g, eliminate=None, budget=4_000_000, det_chunk=4096,
              trim_tol=1e-11):
    """Resultant of f and g with respect to `eliminate`.

    Scalar-coefficient inputs give a complex number (determinant of the
    numeric Sylvester matrix).  Polynomial coefficients give the resultant
    as a MultiPoly in the remaining variables, computed by sampling the
    scalar determinant on roots-of-unity grids sized by a priori degree
    bounds and interpolating with FFTs.
    """
    fc = _trim_top(_elim_coeffs(f, eliminate))
    gc = _trim_top(_elim_coeffs(g, eliminate))
    n, m = len(fc) - 1, len(gc) - 1
    if n < 1 or m < 1:
        raise DegreeZero("both inputs need positive degree in the eliminated variable")

    rest_vars = []
    for c in fc + gc:
        if isinstance(c, MultiPoly):
            for v in c.variables:
                if v not in rest_vars:
                    rest_vars.append(v)

    def vdeg(coeffs, v):
        return max(
            (c.degree(v) for c in coeffs if isinstance(c, MultiPoly)), default=0
        )

    if not rest_vars:
        mat = sylvester(UniPoly([complex(c) for c in fc]),
                        UniPoly([complex(c) for c in gc])).to_numeric()
        return complex(np.linalg.det(mat))

    sizes = [m * vdeg(fc, v) + n * vdeg(gc, v) + 1 for v in rest_vars]
    npts = int(np.prod(sizes))
    if npts * (n + m) ** 2 > budget:
        raise DegreeBudgetExceeded(
            f"interpolation grid {sizes} with matrix size {n + m} exceeds budget"
        )

    axes = [np.exp(2j * np.pi * np.arange(s) / s) for s in sizes]
    grids = np.meshgrid(*axes, indexing="ij")
    flat = [g.ravel() for g in grids]

    size = n + m
    mats = np.zeros((npts, size, size), dtype=complex)
    fvals = [np.broadcast_to(_grid_eval(c, flat), (npts,)) for c in fc]
    gvals = [np.broadcast_to(_grid_eval(c, flat), (npts,)) for c in gc]
    fdesc = fvals[::-1]
    gdesc = gvals[::-1]
    for r in range(m):
        for j in range(n + 1):
            mats[:, r, r + j] = fdesc[j]
    for r in range(n):
        for j in range(m + 1):
            mats[:, m + r, r + j] = gdesc[j]

    dets = np.empty(npts, dtype=complex)
    for start in range(0, npts, det_chunk):
        stop = min(start + det_chunk, npts)
        dets[start:stop] = np.linalg.det(mats[start:stop])

    values = dets.reshape(sizes)
    coeff_array = np.fft.fftn(values) / npts

    scale = float(np.max(np.abs(coeff_array))) if coeff_array.size else 0.0
    terms = {}
    if scale > 0.0:
        keep = np.argwhere(np.abs(coeff_array) > trim_tol * scale)
        for idx in keep:
            terms[tuple(int(i) for i in idx)] = complex(coeff_array[tuple(idx)])
    return MultiPoly(tuple(rest_vars), terms, tol=0.0)
