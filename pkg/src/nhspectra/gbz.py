"""Auxiliary generalized Brillouin zone construction.

Two independent routes are provided.  The sampling route fixes the phase
offset theta, eliminates the energy with a resultant, root-finds in beta
and verifies every candidate against the root ordering.  The symbolic
route eliminates energy and theta entirely, producing one real bivariate
polynomial F(Re beta, Im beta) whose zero set contains the aGBZ; because
resultants are sound but not tight, F is never trusted without the
root-ordering verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegreeBudgetExceeded,
    EliminationDegenerate,
    IdenticallyZero,
    OpenCurve,
)
from .model import BETA, ENERGY, CharPoly, char_poly
from .polyalg import MultiPoly, poly_roots, resultant

#: Relative modulus tolerance for grouping equal-magnitude roots.
TIE_TOL = 1e-6

#: Distance below which sampled aGBZ points are considered duplicates.
DEDUPE_TOL = 1e-8

#: Default number of theta samples in (0, 2 pi), endpoints excluded.
THETA_GRID_SIZE = 720

_SVAR, _TVAR, _XVAR, _YVAR, _UVAR = "s", "t", "x", "y", "u"


@dataclass(frozen=True)
class RootOrdering:
    """Characteristic roots at fixed energy, ascending modulus.

    `tie_groups` partitions 1-based root indices into maximal contiguous
    runs of equal modulus (relative tolerance `tie_tol`).
    """

    energy: complex
    roots: np.ndarray
    tie_groups: tuple
    tie_tol: float

    def group_containing(self, index):
        """Tie group (1-based, inclusive) containing the 1-based index."""
        for lo, hi in self.tie_groups:
            if lo <= index <= hi:
                return (lo, hi)
        raise IndexError(index)

    def match_index(self, beta, match_tol=1e-6):
        """1-based index of the root nearest to beta, or None if too far."""
        d = np.abs(self.roots - beta)
        i = int(np.argmin(d))
        if d[i] <= match_tol * max(1.0, abs(beta)):
            return i + 1
        return None

    def unit_modulus_indices(self, tol=None):
        tol = self.tie_tol if tol is None else tol
        return [
            i + 1
            for i, r in enumerate(self.roots)
            if abs(abs(r) - 1.0) <= tol * 1.0 + tol * abs(r)
        ]


def ordered_roots(cp: CharPoly, energy, tie_tol=TIE_TOL):
    """Roots of P(., E) sorted ascending by modulus with tie groups."""
    roots = poly_roots(cp.beta_poly(energy))
    mods = np.abs(roots)
    groups = []
    lo = 0
    for i in range(1, len(roots)):
        if (mods[i] - mods[i - 1]) > tie_tol * 0.5 * (mods[i] + mods[i - 1]):
            groups.append((lo + 1, i))
            lo = i
    groups.append((lo + 1, len(roots)))
    return RootOrdering(complex(energy), roots, tuple(groups), tie_tol)


@dataclass(frozen=True)
class AgbzPoint:
    """A verified aGBZ point with its adjacent-pair label.

    `label` is the 1-based adjacent index pair (i, i+1) of the tied roots;
    `tie_range` records the full tie group (useful at junctions where more
    than two moduli coincide).  `partner_phase` is the theta for which
    beta * e^{i theta} is the matching second root.
    """

    beta: complex
    energy: complex
    label: tuple
    partner_phase: float
    tie_range: tuple = field(default=None)

    def sort_key(self):
        return (self.label, np.mod(np.angle(self.beta), 2.0 * np.pi))


def _energies_at_beta(cp, beta):
    """Roots in E of P(beta0, .); the band energies attached to beta0."""
    ep = cp.poly.partial(BETA, complex(beta)).to_unipoly()
    if ep.degree < 1:
        return np.array([], dtype=complex)
    return poly_roots(ep)


def verify_agbz_candidate(cp, beta, theta=None, tie_tol=TIE_TOL, match_tol=1e-6):
    """Check that `beta` lies on the aGBZ; return verified AgbzPoints.

    A candidate verifies at energy E when beta matches a characteristic
    root whose tie group has at least two members; when `theta` is given
    the partner beta * e^{i theta} must match a root of the same modulus.
    One point is emitted per adjacent pair of the tie group.
    """
    out = []
    for e in _energies_at_beta(cp, beta):
        ordering = ordered_roots(cp, e, tie_tol)
        i0 = ordering.match_index(beta, match_tol)
        if i0 is None:
            continue
        lo, hi = ordering.group_containing(i0)
        if hi == lo:
            continue
        if theta is not None:
            partner = beta * np.exp(1j * theta)
            j0 = ordering.match_index(partner, match_tol)
            if j0 is None or not (lo <= j0 <= hi) or j0 == i0:
                continue
            phase = float(np.mod(theta, 2.0 * np.pi))
        else:
            phase = float("nan")
        for a in range(lo, hi):
            out.append(
                AgbzPoint(
                    beta=complex(beta),
                    energy=complex(e),
                    label=(a, a + 1),
                    partner_phase=phase,
                    tie_range=(lo, hi),
                )
            )
    return out


# -- energy elimination helpers ----------------------------------------


def _with_s_shift(poly):
    """P(beta * s, E) from P(beta, E): each beta^a term gains s^a."""
    vars_ = (BETA, _SVAR, ENERGY)
    terms = {(a, a, b): c for (a, b), c in poly.terms.items()}
    return MultiPoly(vars_, terms, tol=0.0)


def _embed_s(poly):
    """P(beta, E) viewed in the (beta, s, E) variable set."""
    vars_ = (BETA, _SVAR, ENERGY)
    terms = {(a, 0, b): c for (a, b), c in poly.terms.items()}
    return MultiPoly(vars_, terms, tol=0.0)


def _even_energy_reduction(poly):
    """Substitute u = E^2 when P contains only even energy powers.

    Chiral (sublattice-symmetric) chains produce characteristic
    polynomials even in E; eliminating u instead of E halves the degrees
    and avoids the perfect-square resultants that defeat sign-change
    scanning later on.
    """
    scale = poly.max_abs_coeff()
    if any(
        e[-1] % 2 == 1 and abs(c) > 1e-12 * scale for e, c in poly.terms.items()
    ):
        return None
    terms = {e[:-1] + (e[-1] // 2,): c for e, c in poly.terms.items()}
    renamed = poly.variables[:-1] + (_UVAR,)
    return MultiPoly(renamed, terms, tol=0.0)


def _eliminate_energy(f1, f2):
    """Resultant in the energy-like variable of (beta, s, E) polynomials."""
    r1 = _even_energy_reduction(f1)
    r2 = _even_energy_reduction(f2)
    if r1 is not None and r2 is not None:
        return resultant(r1, r2, _UVAR)
    return resultant(f1, f2, ENERGY)


def _resultant_scale(f, g, var):
    """Crude magnitude scale of Res_var(f, g) for degeneracy detection."""
    n = max(f.degree(var), 1)
    m = max(g.degree(var), 1)
    sf = max(f.max_abs_coeff(), 1e-300)
    sg = max(g.max_abs_coeff(), 1e-300)
    return (sf**m) * (sg**n) * math.factorial(min(n + m, 12))


def agbz_sample_theta(model, theta_grid=None, tie_tol=TIE_TOL,
                      dedupe_tol=DEDUPE_TOL):
    """Sample the aGBZ by sweeping the partner phase theta.

    For each theta the energy is eliminated symbolically from
    P(beta, E) = 0 and P(beta e^{i theta}, E) = 0, the resulting beta
    polynomial is root-found, and every candidate is verified and labeled
    through the root ordering.  Raises EliminationDegenerate when the
    resultant collapses for some theta (a model symmetry); other thetas
    are unaffected only if the caller filters, so the error carries theta.
    """
    if theta_grid is None:
        theta_grid = np.linspace(0.0, 2.0 * np.pi, THETA_GRID_SIZE + 2)[1:-1]
    theta_grid = np.asarray(theta_grid, dtype=float)
    if np.any(theta_grid <= 0.0) or np.any(theta_grid >= 2.0 * np.pi):
        raise ValueError("theta grid must lie strictly inside (0, 2 pi)")

    cp = char_poly(model)
    f1 = _embed_s(cp.poly)
    f2s = _with_s_shift(cp.poly)

    points = {}
    for theta in theta_grid:
        s0 = np.exp(1j * theta)
        f2 = f2s.partial(_SVAR, s0)
        f2 = MultiPoly(
            (BETA, _SVAR, ENERGY),
            {(a, 0, b): c for (a, b), c in f2.terms.items()},
            tol=0.0,
        )
        r = _eliminate_energy(f1, f2)
        if _SVAR in r.variables:
            r = r.partial(_SVAR, 1.0)
        r = r.strip_content([BETA])
        scale = _resultant_scale(cp.poly, cp.poly, ENERGY)
        if r.is_zero() or r.max_abs_coeff() <= 1e-14 * scale or r.degree(BETA) < 1:
            raise EliminationDegenerate(
                f"energy elimination degenerate at theta={theta:.6f}", theta=theta
            )
        betas = poly_roots(r.to_unipoly())
        seen = []
        for b in betas:
            if abs(b) < 1e-12 or any(abs(b - p) <= dedupe_tol for p in seen):
                continue
            seen.append(b)
            for pt in verify_agbz_candidate(cp, b, theta, tie_tol):
                key = (
                    pt.label,
                    round(pt.beta.real / dedupe_tol),
                    round(pt.beta.imag / dedupe_tol),
                    round(pt.energy.real / dedupe_tol),
                    round(pt.energy.imag / dedupe_tol),
                )
                points.setdefault(key, pt)
    return sorted(points.values(), key=AgbzPoint.sort_key)


# -- symbolic implicit curve -------------------------------------------


@dataclass(frozen=True)
class ImplicitCurve:
    """Real bivariate polynomial F(x, y) vanishing on the aGBZ.

    x and y are Re beta and Im beta.  The coefficient of largest magnitude
    is normalized to 1.  Extraneous branches are possible; callers filter
    through verify_agbz_candidate.
    """

    poly: MultiPoly

    def __call__(self, beta):
        beta = np.asarray(beta, dtype=complex)
        return self.poly.evaluate({_XVAR: beta.real, _YVAR: beta.imag})

    def evaluate_xy(self, x, y):
        return self.poly.evaluate({_XVAR: x, _YVAR: y})

    def scale_at(self, beta):
        beta = np.asarray(beta, dtype=complex)
        return self.poly.eval_abs({_XVAR: beta.real, _YVAR: beta.imag})

    def coefficients(self):
        """JSON-ready list of (i, j, re c_ij, im c_ij), sorted."""
        return [
            [e[0], e[1], c.real, c.imag]
            for e, c in sorted(self.poly.terms.items())
        ]


def _binomial_expand_beta(a):
    """(x + i y)^a as a dict (xe, ye) -> complex coefficient."""
    out = {}
    for k in range(a + 1):
        out[(a - k, k)] = complex(math.comb(a, k)) * (1j) ** k
    return out


def _weierstrass_pair(j, big_j, cache={}):
    """(1 + i t)^j (1 - i t)^(J - j) as ascending complex t coefficients."""
    key = (j, big_j)
    if key not in cache:
        p = np.array([1.0 + 0j])
        for _ in range(j):
            p = np.convolve(p, np.array([1.0, 1j]))
        for _ in range(big_j - j):
            p = np.convolve(p, np.array([1.0, -1j]))
        cache[key] = p
    return cache[key]


def _to_xy_t(g):
    """Map G(beta, s) to G~(x, y, t) via beta = x + iy and the Weierstrass
    substitution s = (1 + it)/(1 - it) with denominators cleared."""
    big_j = g.degree(_SVAR)
    terms = {}
    for (a, j), c in g.terms.items():
        tpoly = _weierstrass_pair(j, big_j)
        xy = _binomial_expand_beta(a)
        for (xe, ye), cxy in xy.items():
            base = c * cxy
            for te, ct in enumerate(tpoly):
                if ct == 0:
                    continue
                key = (xe, ye, te)
                terms[key] = terms.get(key, 0.0) + base * ct
    return MultiPoly((_XVAR, _YVAR, _TVAR), terms)


def agbz_implicit(model, degree_cap=24, budget=60_000_000, trim_tol=1e-10):
    """Implicit aGBZ polynomial by full resultant elimination.

    Pipeline: eliminate the energy from the pair P(beta, E), P(beta s, E)
    giving G(beta, s); strip monomial content; substitute beta = x + i y
    and the Weierstrass rational parametrization of s, clearing
    denominators; strip the trivial power of t forced by the theta -> 0
    degeneracy; split into real and imaginary parts; eliminate t with a
    second resultant.  The result is normalized to max |c_ij| = 1.
    """
    cp = char_poly(model)
    if cp.energy_degree > 2:
        raise DegreeBudgetExceeded("implicit pipeline supports up to two bands")
    if cp.beta_degree > degree_cap:
        raise DegreeBudgetExceeded(
            f"beta degree {cp.beta_degree} exceeds cap {degree_cap}"
        )

    f1 = _embed_s(cp.poly)
    f2 = _with_s_shift(cp.poly)
    g = _eliminate_energy(f1, f2)
    if isinstance(g, complex) or g.is_zero():
        raise IdenticallyZero("energy elimination collapsed")
    g = g.strip_content([BETA, _SVAR]).drop_small(trim_tol * 0.01)

    gt = _to_xy_t(g).strip_content([_XVAR, _YVAR])
    t_strip = _noise_aware_t_content(gt)
    for extra in range(4):
        try:
            core = _strip_t_layers(gt, t_strip + extra)
        except ValueError:
            break
        a = core.real_coeff_part()
        b = core.imag_coeff_part()
        if a.is_zero() or b.is_zero() or a.degree(_TVAR) < 1 or b.degree(_TVAR) < 1:
            continue
        f = resultant(a, b, _TVAR, budget=budget)
        if isinstance(f, complex):
            continue
        f = f.real_coeff_part().drop_small(trim_tol)
        if not f.is_zero() and (f.degree(_XVAR) > 0 or f.degree(_YVAR) > 0):
            return ImplicitCurve(f.normalized())
    raise IdenticallyZero("implicit curve collapsed after trivial-factor removal")


def _noise_aware_t_content(poly):
    """Lowest t power carrying a coefficient polynomial above noise level."""
    scale = poly.max_abs_coeff()
    coeffs = poly.coeffs_in(_TVAR)
    k = 0
    while k < len(coeffs) - 1 and coeffs[k].max_abs_coeff() <= 1e-9 * scale:
        k += 1
    return k


def _strip_t_layers(poly, k):
    """Divide by t**k, tolerating only noise-level coefficients below t^k."""
    if k == 0:
        return poly
    scale = poly.max_abs_coeff()
    low = [c for e, c in poly.terms.items() if e[2] < k]
    if any(abs(c) > 1e-9 * scale for c in low):
        raise ValueError("nonzero coefficients below the t strip power")
    kept = {e: c for e, c in poly.terms.items() if e[2] >= k}
    if not kept:
        raise ValueError("stripping would empty the polynomial")
    return MultiPoly(poly.variables, kept, tol=0.0).shift_down(_TVAR, k)


def gbz_extract(points, cp: CharPoly):
    """Subset of aGBZ points on the GBZ proper: label (p, p+1)."""
    p = cp.pole_order
    return [pt for pt in points if pt.label == (p, p + 1)]


def _theta_tracks(points):
    """Split sampled points into analytic arcs by continuation in theta.

    Arcs of the aGBZ are smooth curves beta(theta); following nearest
    neighbors between consecutive theta samples keeps crossing arcs (which
    meet only at junction points, at different theta) on separate tracks.
    """
    groups = {}
    for pt in points:
        bucket = groups.setdefault(round(pt.partner_phase, 12), [])
        # one beta can carry several energies (e.g. the chiral pair E, -E);
        # the curve in the beta plane must be traced once
        if all(abs(pt.beta - b) > 1e-9 for b in bucket):
            bucket.append(pt.beta)
    thetas = sorted(groups)
    if len(thetas) < 3:
        raise OpenCurve("too few distinct theta samples to trace arcs")

    # continuation scale: median nearest-neighbor distance between
    # consecutive theta groups
    hops = []
    for t0, t1 in zip(thetas[:-1], thetas[1:]):
        a = np.array(groups[t0])
        b = np.array(groups[t1])
        hops.extend(np.abs(b[:, None] - a[None, :]).min(axis=1))
    scale = float(np.median(hops)) if hops else 0.0
    if scale == 0.0:
        raise OpenCurve("degenerate theta sampling")
    reach = 8.0 * scale

    tracks = []
    active = {}  # track index -> last beta
    for theta in thetas:
        pts = list(groups[theta])
        pairs = sorted(
            (abs(b - last), ti, pi)
            for ti, last in active.items()
            for pi, b in enumerate(pts)
        )
        used_t, used_p = set(), set()
        next_active = {}
        for d, ti, pi in pairs:
            if d > reach:
                break
            if ti in used_t or pi in used_p:
                continue
            used_t.add(ti)
            used_p.add(pi)
            tracks[ti].append(pts[pi])
            next_active[ti] = pts[pi]
        for pi, b in enumerate(pts):
            if pi not in used_p:
                tracks.append([b])
                next_active[len(tracks) - 1] = b
        active = next_active
    return tracks, scale


def _join_track_ends(tracks, join_radius):
    """Merge arcs whose endpoints meet; returns (closed, open) curves.

    Endpoint gaps below `join_radius` are sampling gaps of one analytic
    curve (e.g. across the theta -> 0 wrap at branch points); junction
    crossings of distinct curves are far wider and are never joined.
    """
    curves = [list(t) for t in tracks if len(t) >= 3]
    merged = True
    while merged:
        merged = False
        best = None
        for i in range(len(curves)):
            for j in range(i + 1, len(curves)):
                for fi in (False, True):
                    for fj in (False, True):
                        a = curves[i][-1] if not fi else curves[i][0]
                        b = curves[j][0] if not fj else curves[j][-1]
                        d = abs(a - b)
                        if d <= join_radius and (best is None or d < best[0]):
                            best = (d, i, j, fi, fj)
        if best is not None:
            _, i, j, fi, fj = best
            a = curves[i] if not fi else curves[i][::-1]
            b = curves[j] if not fj else curves[j][::-1]
            curves[i] = a + b
            curves.pop(j)
            merged = True
    closed, open_ = [], []
    for c in curves:
        if abs(c[0] - c[-1]) <= join_radius:
            closed.append(np.array(c, dtype=complex))
        else:
            open_.append(np.array(c, dtype=complex))
    return closed, open_


def _sphere_close(open_curves, inner_radius, outer_radius):
    """Close unbounded sub-boundary branches through 0 or infinity.

    Hair branches of the extreme sub-boundaries run radially to beta = 0
    or to infinity (the |E| -> infinity tails of the root ordering); on
    the Riemann sphere the curve closes through those points.  Each open
    curve is extended radially to a closure circle (inside every relevant
    zero, or outside all of them) and the ends are joined by arcs along
    that circle.  The crossing parity of the resulting polygon matches
    the sphere picture for every point between the closure circles.
    """
    outward = []
    for c in open_curves:
        k = min(6, len(c) - 1)
        ends_out = []
        for end, ref in ((c[0], c[k]), (c[-1], c[-1 - k])):
            radial = (abs(end) - abs(ref)) / max(abs(end - ref), 1e-300)
            if abs(radial) < 0.3:
                raise OpenCurve("open arc end is not a radial hair branch")
            ends_out.append(radial > 0.0)
        if ends_out[0] != ends_out[1]:
            raise OpenCurve("open arc with mixed inner/outer hair directions")
        outward.append(ends_out[0])
    if len(set(outward)) > 1:
        raise OpenCurve("cannot close arcs through both 0 and infinity")
    r_close = outer_radius if outward[0] else inner_radius

    def extend(curve):
        pieces = []
        for end, flip in ((curve[0], True), (curve[-1], False)):
            ray = np.linspace(abs(end), r_close, 24)[1:]
            seg = ray * np.exp(1j * np.angle(end))
            pieces.append(seg)
        return np.concatenate([pieces[0][::-1], curve, pieces[1]])

    extended = [extend(np.asarray(c)) for c in open_curves]
    remaining = list(range(len(extended)))
    polygon = list(extended[remaining.pop(0)])
    while True:
        exit_angle = np.angle(polygon[-1])
        start_angle = np.angle(polygon[0])
        cands = []
        for idx in remaining:
            c = extended[idx]
            for flip in (False, True):
                entry = c[-1] if flip else c[0]
                cands.append(
                    (np.mod(np.angle(entry) - exit_angle, 2 * np.pi), idx, flip)
                )
        close_gap = np.mod(start_angle - exit_angle, 2.0 * np.pi)
        if cands:
            cands.sort()
            da, idx, flip = cands[0]
            arc = r_close * np.exp(
                1j * (exit_angle + np.linspace(0.0, da, 90)[1:-1])
            )
            polygon.extend(arc)
            nxt = extended[idx][::-1] if flip else extended[idx]
            polygon.extend(nxt)
            remaining.remove(idx)
        else:
            arc = r_close * np.exp(
                1j * (exit_angle + np.linspace(0.0, close_gap, 90)[1:-1])
            )
            polygon.extend(arc)
            return np.array(polygon, dtype=complex)


def _polygon_winding(polygon, z):
    """Integer winding number of a closed polygon around z."""
    rel = polygon - z
    ang = np.angle(np.roll(rel, -1) / rel)
    return int(np.round(ang.sum() / (2.0 * np.pi)))


def polygonize_sub_boundary(points, energy_cap=None, inner_radius=None,
                            outer_radius=None):
    """Closed polygon(s) covering one sub-boundary of the root ordering.

    Points with |E| above `energy_cap` (default: 4 x the median point
    energy) are discarded, the rest are split into analytic arcs by
    continuation in theta and arcs are merged across sampling gaps.
    Bounded loops close directly; unbounded branches (hairs running to
    beta = 0 or infinity) are closed through the compactification circles
    `inner_radius` / `outer_radius`.  Returns a list of closed polygons;
    point-membership is their combined crossing parity.
    """
    energies = np.array([abs(pt.energy) for pt in points])
    if energy_cap is None:
        energy_cap = 4.0 * float(np.median(energies))
    kept = [pt for pt, e in zip(points, energies) if e <= energy_cap]
    if len(kept) < 8:
        raise OpenCurve("too few points below the energy cap to polygonize")
    tracks, scale = _theta_tracks(kept)
    # generous endpoint radius: bridges both sampling gaps (a few x scale)
    # and the sqrt-slowdown gaps where arcs approach junction points;
    # crossing parity is insensitive to the wiring order, which is
    # closest-pair-first
    closed, open_ = _join_track_ends(tracks, 25.0 * scale)
    if not closed and not open_:
        raise OpenCurve("no arcs survive the track assembly")
    radii = np.concatenate([np.abs(c) for c in closed + open_])
    # closure circles must clear both the sampled curve and the caller's zeros
    inner_radius = min(
        0.5 * float(radii.min()),
        inner_radius if inner_radius is not None else np.inf,
    )
    outer_radius = max(
        2.0 * float(radii.max()),
        outer_radius if outer_radius is not None else 0.0,
    )
    polygons = [c for c in closed if len(c) >= 8]
    if open_:
        polygons.append(_sphere_close(open_, inner_radius, outer_radius))
    if not polygons:
        raise OpenCurve("no polygon survived arc assembly")
    return polygons


def sub_boundary_zero_count(points, cp: CharPoly, energy, label=None,
                            energy_cap=None):
    """Number of characteristic roots inside a sub-boundary, by parity.

    Crossing the sub-boundary anywhere swaps the ranks i and i+1 of the
    root ordering, so membership on the enclosed side is the parity of
    the crossing count: a root is inside when its total winding with
    respect to the polygonized curve is odd.  `points` are aGBZ points of
    one label (filtered here when `label` is given).  Raises OpenCurve
    when the sampled curve cannot be closed.
    """
    if label is not None:
        points = [pt for pt in points if pt.label == tuple(label)]
    labels = {pt.label for pt in points}
    if len(labels) != 1:
        raise ValueError(f"points must carry exactly one label, got {labels}")
    roots = poly_roots(cp.beta_poly(energy))
    mods = np.abs(roots)
    polygons = polygonize_sub_boundary(
        points,
        energy_cap,
        inner_radius=0.5 * float(mods.min()),
        outer_radius=2.0 * float(mods.max()),
    )
    count = 0
    for r in roots:
        winding = sum(_polygon_winding(p, r) for p in polygons)
        count += winding % 2
    return int(count)
