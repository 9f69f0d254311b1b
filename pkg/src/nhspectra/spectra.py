"""Periodic, finite open-boundary and thermodynamic-limit spectra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import SizeCapExceeded, TooSmallL, UnmatchedGbzPoint
from .model import (
    BETA,
    ENERGY,
    OneBandModel,
    bloch_eval,
    bloch_eigenvalues,
    char_poly,
    real_space_hamiltonian,
)
from .polyalg import poly_roots

#: Relative band gap below which tracking is flagged ambiguous.
BAND_TRACK_TOL = 1e-6

#: Largest finite non-Hermitian eigensolve trusted in double precision.
FINITE_SIZE_CAP = 80


@dataclass
class SpectrumCurve:
    """One tracked band of the Bloch spectrum, sampled over k in [0, 2pi)."""

    band: int
    samples: list  # of (k, E) pairs, sorted by k
    closed: bool
    tracking_ambiguous: bool = False

    def energies(self):
        return np.array([e for _, e in self.samples], dtype=complex)

    def momenta(self):
        return np.array([k for k, _ in self.samples], dtype=float)


@dataclass
class ObcSpectrum:
    """Open-boundary energies, either finite-size or thermodynamic-limit."""

    source: str  # "finite(L)" or "thermodynamic"
    values: np.ndarray

    def sorted_values(self):
        v = np.asarray(self.values, dtype=complex)
        order = np.lexsort((v.imag, v.real))
        return v[order]


def pbc_spectrum(model, num_k=512):
    """Bloch spectrum sampled on `num_k` momenta, one curve per band.

    Bands are tracked by nearest-neighbor continuation between consecutive
    momenta; a near-degeneracy (relative gap below BAND_TRACK_TOL) sets the
    ambiguity flag on every curve but samples are still emitted.
    """
    if num_k < 8:
        raise ValueError("num_k must be at least 8")
    q = model.bands
    ks = np.linspace(0.0, 2.0 * np.pi, num_k, endpoint=False)
    if q == 1:
        samples = [(float(k), bloch_eval(model, np.exp(1j * k))) for k in ks]
        return [SpectrumCurve(0, samples, closed=True)]

    cp = char_poly(model)
    deriv_b = cp.poly.derivative(BETA)
    deriv_e = cp.poly.derivative(ENERGY)

    def velocities(k, energies):
        # dE/dk = -i beta dP/dbeta / dP/dE along the unit circle
        beta = np.exp(1j * k)
        out = np.zeros(q, dtype=complex)
        for i, e in enumerate(energies):
            pe = deriv_e.evaluate({BETA: beta, ENERGY: e})
            if abs(pe) < 1e-300:
                return None  # band touching: prediction unavailable
            out[i] = -1j * beta * deriv_b.evaluate({BETA: beta, ENERGY: e}) / pe
        return out

    dk = float(ks[1] - ks[0])
    tracks = [[] for _ in range(q)]
    ambiguous = False
    prev = None
    scale = 0.0
    for k in ks:
        ev = bloch_eigenvalues(model, np.exp(1j * k))
        scale = max(scale, float(np.max(np.abs(ev))))
        if prev is None:
            order = np.lexsort((ev.imag, ev.real))
            ev = ev[order]
        else:
            vel = velocities(k - dk, prev)
            predicted = prev if vel is None else prev + vel * dk
            cost = np.abs(predicted[:, None] - ev[None, :])
            rows, cols = linear_sum_assignment(cost)
            ev = ev[cols[np.argsort(rows)]]
        gaps = np.abs(ev[:, None] - ev[None, :])[np.triu_indices(q, 1)]
        if gaps.size and gaps.min() < BAND_TRACK_TOL * max(scale, 1e-300):
            ambiguous = True
        for b in range(q):
            tracks[b].append((float(k), complex(ev[b])))
        prev = ev

    first = np.array([tracks[b][0][1] for b in range(q)])
    ev = bloch_eigenvalues(model, np.exp(1j * 0.0))
    vel = velocities(ks[-1], prev)
    predicted = prev if vel is None else prev + vel * dk
    cost = np.abs(predicted[:, None] - ev[None, :])
    rows, cols = linear_sum_assignment(cost)
    wrap = ev[cols[np.argsort(rows)]]
    curves = []
    for b in range(q):
        closed = bool(abs(wrap[b] - first[b]) <= 1e-9 * max(scale, 1.0))
        curves.append(SpectrumCurve(b, tracks[b], closed, ambiguous))
    return curves


def _balance_radius(model):
    """Similarity radius r making the extreme hops equal in magnitude.

    conj(D) H D with D = diag(r^cell) rescales hop n by r^n; choosing
    r = (|h_{-M}| / |h_N|)^(1/(M+N)) balances the outermost hops, which
    bounds the non-normality of the finite chain without changing its
    spectrum.
    """
    mats = model.coefficient_matrices()
    M, N = model.left_range, model.right_range
    if M == 0 or N == 0:
        return 1.0
    lo = float(np.max(np.abs(mats.get(-M, np.zeros(1)))))
    hi = float(np.max(np.abs(mats.get(N, np.zeros(1)))))
    if lo == 0.0 or hi == 0.0:
        return 1.0
    return (lo / hi) ** (1.0 / (M + N))


def obc_finite(model, length, size_cap=FINITE_SIZE_CAP):
    """Eigenvalues of the open chain on `length` cells.

    The chain is conjugated by an exact diagonal similarity before the
    dense eigensolve; this leaves the spectrum unchanged but keeps the
    skin-effect non-normality bounded.  Lengths beyond `size_cap` are
    refused: beyond that the double-precision eigenproblem is dominated by
    pseudospectrum explosion rather than by the true spectrum.
    """
    M, N = model.left_range, model.right_range
    if length < M + N + 1:
        raise TooSmallL(f"need at least {M + N + 1} cells, got {length}")
    if length > size_cap:
        raise SizeCapExceeded(
            f"finite eigensolve capped at {size_cap} cells (got {length})"
        )
    r = _balance_radius(model)
    balanced = {n: mat * r**n for n, mat in model.coefficient_matrices().items()}
    q = model.bands
    H = np.zeros((q * length, q * length), dtype=complex)
    for n, mat in balanced.items():
        for i in range(length):
            j = i + n
            if 0 <= j < length:
                H[q * i : q * i + q, q * j : q * j + q] += mat
    values = np.linalg.eigvals(H)
    order = np.lexsort((values.imag, values.real))
    return ObcSpectrum(f"finite({length})", values[order])


def obc_thermodynamic(model, gbz_points):
    """Thermodynamic-limit open-boundary energies from GBZ points.

    Accepts AgbzPoint objects (their energies are used directly) or raw
    complex beta values; for the latter the energy is the Bloch eigenvalue
    whose characteristic roots contain beta within the tie tolerance.
    """
    if len(gbz_points) == 0:
        raise ValueError("gbz_points must be nonempty")
    energies = []
    cp = None
    for pt in gbz_points:
        if hasattr(pt, "energy"):
            energies.append(complex(pt.energy))
            continue
        beta = complex(pt)
        if isinstance(model, OneBandModel):
            energies.append(bloch_eval(model, beta))
            continue
        if cp is None:
            cp = char_poly(model)
        matched = None
        for e in bloch_eigenvalues(model, beta):
            roots = poly_roots(cp.beta_poly(e))
            if np.min(np.abs(roots - beta)) <= 1e-6 * max(1.0, abs(beta)):
                matched = complex(e)
                break
        if matched is None:
            raise UnmatchedGbzPoint(f"beta={beta} is not a characteristic root")
        energies.append(matched)
    values = np.array(energies, dtype=complex)
    order = np.lexsort((values.imag, values.real))
    return ObcSpectrum("thermodynamic", values[order])


def hausdorff_distance(a, b):
    """Symmetric Hausdorff distance between two finite complex point sets."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))
