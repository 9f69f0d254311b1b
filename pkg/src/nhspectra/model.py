"""Tight-binding chain models and their characteristic polynomials.

A one-band chain is a Laurent polynomial h(beta) = sum_n t_n beta^n with
left range M and right range N; a multi-band chain is a q x q matrix of
Laurent polynomials.  Both expose the pole-cleared characteristic
polynomial P(beta, E) = beta^p det(h(beta) - E).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    AllZeroHops,
    DegenerateModel,
    QVanishesOnCircle,
    TooSmallL,
    ZeroBeta,
)
from .polyalg import COEFF_ZERO_TOL, MultiPoly

BETA, ENERGY = "beta", "E"


def _trim_hops(hops, tol=COEFF_ZERO_TOL):
    if not hops:
        return {}
    scale = max(abs(t) for t in hops.values())
    if scale == 0.0:
        return {}
    return {int(n): complex(t) for n, t in hops.items() if abs(t) > tol * scale}


@dataclass(frozen=True)
class OneBandModel:
    """Single-band chain: hops maps offset n -> amplitude t_n, -M <= n <= N."""

    hops: dict

    def __post_init__(self):
        object.__setattr__(self, "hops", _trim_hops(self.hops))
        if not self.hops or (self.left_range + self.right_range) < 1:
            raise AllZeroHops("a one-band model needs at least one nonzero hop")

    @property
    def bands(self):
        return 1

    @property
    def left_range(self):
        return max(0, -min(self.hops))

    @property
    def right_range(self):
        return max(0, max(self.hops))

    @property
    def pole_order(self):
        return self.left_range

    def coefficient_matrices(self):
        return {n: np.array([[t]], dtype=complex) for n, t in self.hops.items()}


class _LaurentDet:
    """det(h(beta) - E) with the true (possibly negative) minimal beta power."""

    def __init__(self, poly, min_beta):
        self.poly = poly          # MultiPoly in (beta, E), min beta power 0
        self.min_beta = min_beta  # exponent the stored power 0 really stands for


def _poly_det(polys, vars_):
    n = len(polys)
    if n == 1:
        return polys[0][0]
    if n == 2:
        return polys[0][0] * polys[1][1] - polys[0][1] * polys[1][0]
    det = MultiPoly.constant(vars_, 0.0)
    for j in range(n):
        minor = [[polys[i][k] for k in range(n) if k != j] for i in range(1, n)]
        term = polys[0][j] * _poly_det(minor, vars_)
        det = det + (term if j % 2 == 0 else -term)
    return det


def _multiband_det(entries, q, M):
    """Symbolic det(h(beta) - E) for coefficient matrices `entries`."""
    vars_ = (BETA, ENERGY)
    cell = [[{} for _ in range(q)] for _ in range(q)]
    for n, mat in entries.items():
        for i in range(q):
            for j in range(q):
                c = mat[i, j]
                if c != 0.0:
                    cell[i][j][(n + M, 0)] = cell[i][j].get((n + M, 0), 0.0) + c
    polys = [[MultiPoly(vars_, cell[i][j]) for j in range(q)] for i in range(q)]
    shifted_E = MultiPoly(vars_, {(M, 1): 1.0})  # beta^M * E on the diagonal
    for i in range(q):
        polys[i][i] = polys[i][i] - shifted_E
    det = _poly_det(polys, vars_)
    if det.is_zero():
        raise DegenerateModel("det(h(beta) - E) is identically zero")
    low = det.min_power(BETA)
    return _LaurentDet(det.shift_down(BETA, low), low - q * M)


@dataclass(frozen=True)
class MultiBandModel:
    """q-band chain: entries maps offset n -> q x q coefficient matrix."""

    entries: dict
    pole_order: int = field(init=False)

    def __post_init__(self):
        scale = max(
            (float(np.max(np.abs(np.asarray(m)))) for m in self.entries.values()),
            default=0.0,
        )
        if scale == 0.0:
            raise AllZeroHops("a multi-band model needs at least one nonzero entry")
        mats = {}
        q = None
        for n, m in self.entries.items():
            m = np.asarray(m, dtype=complex)
            if q is None:
                q = m.shape[0]
            if m.shape != (q, q):
                raise ValueError("all coefficient matrices must share shape (q, q)")
            if np.max(np.abs(m)) > COEFF_ZERO_TOL * scale:
                mats[int(n)] = m
        object.__setattr__(self, "entries", mats)
        det = _multiband_det(mats, q, max(0, -min(mats)))
        if det.poly.degree(BETA) == 0:
            raise DegenerateModel("det(h(beta) - E) does not depend on beta")
        object.__setattr__(self, "pole_order", max(0, -det.min_beta))

    @property
    def bands(self):
        return int(next(iter(self.entries.values())).shape[0])

    @property
    def left_range(self):
        return max(0, -min(self.entries))

    @property
    def right_range(self):
        return max(0, max(self.entries))

    def coefficient_matrices(self):
        return self.entries


@dataclass(frozen=True)
class CharPoly:
    """Pole-cleared characteristic polynomial P(beta, E) = beta^p det(h - E)."""

    poly: MultiPoly
    pole_order: int
    beta_degree: int
    energy_degree: int

    def beta_poly(self, energy):
        """P(., E) as a UniPoly in beta."""
        return self.poly.partial(ENERGY, complex(energy)).to_unipoly()

    def residual_scale(self, beta, energy):
        return self.poly.eval_abs({BETA: beta, ENERGY: energy})

    def __call__(self, beta, energy):
        return self.poly.evaluate({BETA: beta, ENERGY: energy})


def char_poly(model):
    """Characteristic polynomial of a model, cleared of beta poles.

    One-band: P = sum_n t_n beta^{n+M} - E beta^M with p = M.
    Multi-band: P = beta^p det(h(beta) - E) with p the minimal power that
    clears all poles of the determinant.
    """
    if isinstance(model, OneBandModel):
        M, N = model.left_range, model.right_range
        terms = {(n + M, 0): t for n, t in model.hops.items()}
        terms[(M, 1)] = terms.get((M, 1), 0.0) - 1.0
        poly = MultiPoly((BETA, ENERGY), terms)
        return CharPoly(poly, M, M + N, 1)
    det = _multiband_det(model.entries, model.bands, model.left_range)
    p = max(0, -det.min_beta)
    shift = det.min_beta + p  # >= 0; re-express stored powers relative to beta^0
    poly = MultiPoly(
        det.poly.variables,
        {(e[0] + shift, e[1]): c for e, c in det.poly.terms.items()},
        tol=0.0,
    )
    return CharPoly(poly, p, poly.degree(BETA), model.bands)


def extended_hn(t_m2, t_m1, t_p1, t_p2):
    """Hatano-Nelson chain with first- and second-neighbor asymmetric hops."""
    if t_m2 == 0 and t_m1 == 0:
        raise AllZeroHops("need a nonzero leftward hop")
    if t_p1 == 0 and t_p2 == 0:
        raise AllZeroHops("need a nonzero rightward hop")
    return OneBandModel({-2: t_m2, -1: t_m1, 1: t_p1, 2: t_p2})


def standard_hn(t_p1, t_m1):
    """Nearest-neighbor Hatano-Nelson chain."""
    return extended_hn(0.0, t_m1, t_p1, 0.0)


def nh_ssh(t1, t2, t3, gamma):
    """Two-band chain h = h_x sigma_x + h_y sigma_y with asymmetric coupling.

    Off-diagonal blocks: h12 = t1 + (t3 + gamma) beta + t2 / beta and
    h21 = t1 + t2 beta + (t3 - gamma) / beta.  No sigma_z component, so the
    spectrum pairs as (E, -E); at gamma = t3 = 0 the chain is Hermitian.
    """
    z = np.zeros((2, 2), dtype=complex)
    entries = {}
    for n, (h12, h21) in {
        0: (t1, t1),
        1: (t3 + gamma, t2),
        -1: (t2, t3 - gamma),
    }.items():
        m = z.copy()
        m[0, 1] = h12
        m[1, 0] = h21
        entries[n] = m
    return MultiBandModel(entries)


def bloch_eval(model, beta):
    """h(beta); a complex scalar for one-band models, a q x q matrix otherwise."""
    if beta == 0:
        raise ZeroBeta("beta must be nonzero")
    beta = complex(beta)
    if isinstance(model, OneBandModel):
        return complex(sum(t * beta**n for n, t in model.hops.items()))
    q = model.bands
    out = np.zeros((q, q), dtype=complex)
    for n, mat in model.entries.items():
        out += mat * beta**n
    return out


def bloch_eigenvalues(model, beta):
    """Eigenvalues of h(beta) as a 1D array (length q)."""
    h = bloch_eval(model, beta)
    if isinstance(model, OneBandModel):
        return np.array([h], dtype=complex)
    return np.linalg.eigvals(h)


def real_space_hamiltonian(model, length, boundary="OBC"):
    """Dense chain Hamiltonian on `length` cells; OBC truncates, PBC wraps."""
    if boundary not in ("OBC", "PBC"):
        raise ValueError("boundary must be 'OBC' or 'PBC'")
    M, N = model.left_range, model.right_range
    if length < max(M, N) + 1:
        raise TooSmallL(f"need at least {max(M, N) + 1} cells, got {length}")
    q = model.bands
    H = np.zeros((q * length, q * length), dtype=complex)
    for n, mat in model.coefficient_matrices().items():
        for i in range(length):
            j = i + n
            if boundary == "PBC":
                j %= length
            elif not (0 <= j < length):
                continue
            H[q * i : q * i + q, q * j : q * j + q] += mat
    return H


def nfold_construct(n, phi, q_hops, samples=1024, min_ratio=1e-6):
    """One-band model h(beta) = (1 - e^{i phi} beta^n) q(beta).

    `q_hops` gives the Laurent coefficients of q(beta), which must not
    vanish on the unit circle (checked by dense sampling plus a local
    minimization of |q| around the smallest sample).  The resulting chain
    has an n-fold spectral self-intersection at E = 0 with unit-circle
    solutions beta = exp(i (2 pi m - phi) / n).
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    q_hops = _trim_hops(q_hops)
    if not q_hops:
        raise AllZeroHops("q(beta) is numerically zero")

    def qabs(theta):
        b = np.exp(1j * theta)
        return abs(sum(c * b**k for k, c in q_hops.items()))

    thetas = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    vals = np.array([qabs(t) for t in thetas])
    i0 = int(np.argmin(vals))
    window = 2.0 * np.pi / samples
    res = minimize_scalar(
        qabs, bounds=(thetas[i0] - window, thetas[i0] + window), method="bounded"
    )
    if min(res.fun, float(vals.min())) < min_ratio * float(vals.max()):
        raise QVanishesOnCircle(
            f"|q| dips to {min(res.fun, float(vals.min())):.3e} on the unit circle"
        )

    phase = np.exp(1j * phi)
    hops = dict(q_hops)
    for k, c in q_hops.items():
        hops[k + n] = hops.get(k + n, 0.0) - phase * c
    return OneBandModel(hops)


def nfold_bloch_momenta(n, phi):
    """Unit-circle momenta of the engineered n-fold point at E = 0."""
    return np.sort(np.mod((2.0 * np.pi * np.arange(1, n + 1) - phi) / n, 2.0 * np.pi))


# -- model description files (see CLI docs for the schema) -------------


def model_from_dict(spec):
    kind = spec.get("type")
    if kind == "one_band":
        hops = {int(n): complex(re, im) for n, re, im in spec["hops"]}
        return OneBandModel(hops)
    if kind == "ssh":
        def p(name):
            v = spec[name]
            return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
        return nh_ssh(p("t1"), p("t2"), p("t3"), p("gamma"))
    if kind == "nfold":
        q_hops = {int(n): complex(re, im) for n, re, im in spec["q_hops"]}
        return nfold_construct(int(spec["n"]), float(spec["phi"]), q_hops)
    raise ValueError(f"unknown model type {kind!r}")


def model_to_dict(model):
    if isinstance(model, OneBandModel):
        return {
            "type": "one_band",
            "hops": [[n, t.real, t.imag] for n, t in sorted(model.hops.items())],
        }
    raise ValueError("only one-band models serialize to hop lists")
