"""Self-intersections of the periodic spectrum and their geometry.

A geometric sweep over the sampled Bloch curves finds crossing candidates;
a two-variable Newton iteration owns the precision; clustering assembles
multiplicities.  Every detected point is tied back to the beta plane: the
unit-modulus tie group of the root ordering, the winding structure of the
adjacent energy sectors, and the intersections of the implicit aGBZ curve
with the unit circle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NewtonDivergence, OnSpectrum, RadiusUnderflow
from .gbz import (
    TIE_TOL,
    agbz_implicit,
    ordered_roots,
    verify_agbz_candidate,
)
from .model import BETA, ENERGY, bloch_eval, bloch_eigenvalues, char_poly
from .spectra import pbc_spectrum
from .topology import winding_bz

#: Cluster radius for merging refined crossing energies.
CLUSTER_TOL = 1e-6

#: Circular distance below which two momentum solutions are identical.
K_DEDUPE_TOL = 1e-7

_NEWTON_MAX_ITER = 50
_NEWTON_TOL = 1e-12


@dataclass
class SelfIntersection:
    """An n-fold self-intersection of the periodic spectrum."""

    energy: complex
    multiplicity: int
    k_solutions: np.ndarray          # sorted, in [0, 2 pi)
    bands: np.ndarray                # band index per momentum solution
    beta_solutions: np.ndarray       # e^{i k}, unit modulus
    w_min: int = None
    w_max: int = None
    inward_count: int = None
    ordering_indices: tuple = None   # 1-based inclusive range, unit-modulus ties
    sector_windings: tuple = None
    edge_directions: tuple = None
    cluster_ambiguous: bool = False
    matched_agbz_phases: tuple = ()

    def as_report_dict(self):
        return {
            "reE0": self.energy.real,
            "imE0": self.energy.imag,
            "n": self.multiplicity,
            "kSolutions": [float(k) for k in self.k_solutions],
            "bands": [int(b) for b in self.bands],
            "wMin": self.w_min,
            "wMax": self.w_max,
            "inwardCount": self.inward_count,
            "orderingIndices": list(self.ordering_indices or ()),
            "matchedAgbzPhases": [float(p) for p in self.matched_agbz_phases],
        }


def _branch_value(model, k, hint=None):
    beta = np.exp(1j * k)
    if model.bands == 1:
        return bloch_eval(model, beta)
    ev = bloch_eigenvalues(model, beta)
    if hint is None:
        return ev[0]
    return complex(ev[np.argmin(np.abs(ev - hint))])


def _dE_dk(cp, deriv_b, deriv_e, k, energy):
    """Implicit derivative of a band along the unit circle."""
    beta = np.exp(1j * k)
    pb = deriv_b.evaluate({BETA: beta, ENERGY: energy})
    pe = deriv_e.evaluate({BETA: beta, ENERGY: energy})
    if abs(pe) < 1e-300:
        raise ZeroDivisionError("band derivative singular (dP/dE = 0)")
    return -1j * beta * pb / pe


def _orient(p, q, r):
    v = (q.real - p.real) * (r.imag - q.imag) - (q.imag - p.imag) * (r.real - q.real)
    # collinear within rounding noise of the sampled curve counts as zero
    scale = abs(q - p) * abs(r - q)
    if abs(v) <= 1e-12 * scale:
        return 0
    return 1 if v > 0.0 else -1


def _proper_crossing(a, b, c, d):
    """Strict transversal crossing test with exact sign predicates."""
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    return o1 * o2 < 0 and o3 * o4 < 0


def _segment_params(a, b, c, d):
    """Parameters (t, u) of the crossing of segments ab and cd."""
    denom = (b.real - a.real) * (d.imag - c.imag) - (b.imag - a.imag) * (
        d.real - c.real
    )
    t = (
        (c.real - a.real) * (d.imag - c.imag)
        - (c.imag - a.imag) * (d.real - c.real)
    ) / denom
    u = (
        (c.real - a.real) * (b.imag - a.imag)
        - (c.imag - a.imag) * (b.real - a.real)
    ) / denom
    return t, u


def _circ_dist(k1, k2):
    d = abs(k1 - k2) % (2.0 * np.pi)
    return min(d, 2.0 * np.pi - d)


def _candidate_pairs(segments, scale):
    """Bucket segment bounding boxes on a uniform grid; yield near pairs."""
    cell = max(scale / 256.0, 1e-12)
    buckets = {}
    boxes = []
    for idx, (band, i, a, b, ka, kb) in enumerate(segments):
        lo_x, hi_x = sorted((a.real, b.real))
        lo_y, hi_y = sorted((a.imag, b.imag))
        boxes.append((lo_x, hi_x, lo_y, hi_y))
        for cx in range(int(lo_x / cell), int(hi_x / cell) + 1):
            for cy in range(int(lo_y / cell), int(hi_y / cell) + 1):
                buckets.setdefault((cx, cy), []).append(idx)
    seen = set()
    for members in buckets.values():
        for ii in range(len(members)):
            for jj in range(ii + 1, len(members)):
                p = (members[ii], members[jj])
                if p not in seen:
                    seen.add(p)
                    yield p


def find_intersections(model, num_k=2048, tol_e=CLUSTER_TOL, refine_local=True):
    """Detect, refine and classify self-intersections of the PBC spectrum.

    Sampled curve segments (including cross-band pairs) are swept for
    transversal crossings; each candidate is polished by Newton iteration
    on E(k1) - E(k2) with the trivial diagonal k1 = k2 excluded by a
    minimal separation; refined energies are clustered within `tol_e` and
    the cluster size fixes the multiplicity.  Diverged candidates are
    dropped.  With `refine_local` the winding structure around each point
    is attached (see local_structure).
    """
    if num_k < 256:
        raise ValueError("num_k must be at least 256")
    cp = char_poly(model)
    deriv_b = cp.poly.derivative(BETA)
    deriv_e = cp.poly.derivative(ENERGY)
    curves = pbc_spectrum(model, num_k)

    segments = []
    e_scale = 0.0
    for c in curves:
        es = c.energies()
        ks = c.momenta()
        e_scale = max(e_scale, float(np.max(np.abs(es))), float(np.ptp(es.real)),
                      float(np.ptp(es.imag)))
        wrap_e = _branch_value(model, 2.0 * np.pi, es[-1])
        pts = np.append(es, wrap_e)
        kk = np.append(ks, 2.0 * np.pi)
        for i in range(len(pts) - 1):
            segments.append((c.band, i, pts[i], pts[i + 1], kk[i], kk[i + 1]))

    min_sep = 1e-3 * (2.0 * np.pi / num_k)
    solutions = []
    for ii, jj in _candidate_pairs(segments, e_scale):
        b1, i1, a, b, ka1, kb1 = segments[ii]
        b2, i2, c, d, ka2, kb2 = segments[jj]
        if b1 == b2 and (abs(i1 - i2) <= 1 or abs(i1 - i2) >= num_k - 1):
            continue
        if not _proper_crossing(a, b, c, d):
            continue
        t, u = _segment_params(a, b, c, d)
        k1 = ka1 + t * (kb1 - ka1)
        k2 = ka2 + u * (kb2 - ka2)
        hint1 = a + t * (b - a)
        hint2 = c + u * (d - c)
        try:
            sol = _newton_refine(
                model, cp, deriv_b, deriv_e, k1, k2, b1, b2, hint1, hint2,
                e_scale, min_sep,
            )
        except (NewtonDivergence, ZeroDivisionError):
            continue
        solutions.append(sol)

    clusters = _cluster_solutions(solutions, tol_e)
    out = []
    for center, members, ambiguous in clusters:
        ksol = []
        for e0, k, band in members:
            if all(
                not (band == b and _circ_dist(k, kk) < K_DEDUPE_TOL)
                for kk, b in ksol
            ):
                ksol.append((k, band))
        ksol.sort()
        ks = np.array([k for k, _ in ksol])
        bands = np.array([b for _, b in ksol], dtype=int)
        si = SelfIntersection(
            energy=complex(center),
            multiplicity=len(ksol),
            k_solutions=ks,
            bands=bands,
            beta_solutions=np.exp(1j * ks),
            cluster_ambiguous=ambiguous,
        )
        ordering = ordered_roots(cp, si.energy)
        unit = ordering.unit_modulus_indices()
        if unit and unit == list(range(unit[0], unit[-1] + 1)):
            si.ordering_indices = (unit[0], unit[-1])
        if refine_local:
            try:
                ls = local_structure(model, si.energy, expected=si.multiplicity)
            except (RadiusUnderflow, OnSpectrum):
                ls = None
            if ls is not None:
                si.sector_windings = tuple(ls.sector_windings)
                si.edge_directions = tuple(ls.edge_directions)
                si.w_min = min(ls.sector_windings)
                si.w_max = max(ls.sector_windings)
                si.inward_count = ls.inward_count
        out.append(si)
    out.sort(key=lambda s: (s.energy.real, s.energy.imag))
    return out


def _newton_refine(model, cp, deriv_b, deriv_e, k1, k2, band1, band2,
                   hint1, hint2, e_scale, min_sep):
    e1 = _branch_value(model, k1, hint1)
    e2 = _branch_value(model, k2, hint2)
    for _ in range(_NEWTON_MAX_ITER):
        g = e1 - e2
        if abs(g) <= _NEWTON_TOL * max(e_scale, 1.0):
            if band1 == band2 and _circ_dist(k1, k2) < min_sep:
                raise NewtonDivergence("collapsed onto the trivial diagonal")
            # transversality: a doubled-back curve coincides with parallel
            # tangents and encloses no area; that is not a crossing
            j1 = _dE_dk(cp, deriv_b, deriv_e, k1, e1)
            j2 = _dE_dk(cp, deriv_b, deriv_e, k2, e2)
            cross = (np.conj(j1) * j2).imag
            if abs(cross) <= 1e-6 * (abs(j1) * abs(j2) + 1e-300):
                raise NewtonDivergence("tangents parallel at the coincidence")
            return (complex(0.5 * (e1 + e2)), float(np.mod(k1, 2 * np.pi)), band1), (
                complex(0.5 * (e1 + e2)), float(np.mod(k2, 2 * np.pi)), band2)
        j1 = _dE_dk(cp, deriv_b, deriv_e, k1, e1)
        j2 = _dE_dk(cp, deriv_b, deriv_e, k2, e2)
        det = -j1.real * j2.imag + j1.imag * j2.real
        if abs(det) < 1e-14 * (abs(j1) * abs(j2) + 1e-300):
            raise NewtonDivergence("singular Jacobian (parallel tangents)")
        dk1 = (-g.real * (-j2.imag) - (-g.imag) * (-j2.real)) / det
        dk2 = (j1.real * (-g.imag) - j1.imag * (-g.real)) / det
        if max(abs(dk1), abs(dk2)) > np.pi:
            raise NewtonDivergence("step left the sampling neighborhood")
        k1 += dk1
        k2 += dk2
        e1 = _branch_value(model, k1, e1 + j1 * dk1)
        e2 = _branch_value(model, k2, e2 + j2 * dk2)
    raise NewtonDivergence("out of iterations")


def _cluster_solutions(solutions, tol_e):
    """Union refined crossings into energy clusters within tol_e."""
    entries = []  # (E0, k, band)
    for sol in solutions:
        entries.extend(sol)
    if not entries:
        return []
    es = np.array([e for e, _, _ in entries])
    n = len(entries)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(es[i] - es[j]) <= tol_e:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    centers = {root: np.mean(es[m]) for root, m in groups.items()}
    roots = list(groups)
    ambiguous = {
        r: any(
            r2 != r and abs(centers[r] - centers[r2]) <= 2.0 * tol_e
            for r2 in roots
        )
        for r in roots
    }
    return [
        (centers[r], [entries[i] for i in groups[r]], ambiguous[r])
        for r in roots
    ]


@dataclass
class LocalStructure:
    """Winding data in the punctured neighborhood of an intersection."""

    radius: float
    edge_angles: tuple
    edge_momenta: tuple
    edge_directions: tuple     # "inward" | "outward", angle-ordered
    sector_windings: tuple     # 2n values, sector j follows edge j
    inward_count: int


def local_structure(model, e0, radius=None, expected=None, num_scan=4096,
                    min_radius=1e-8):
    """Edges and sector windings around an intersection energy `e0`.

    The circle |E - e0| = radius is shrunk until exactly 2n spectrum
    branches cross it (n = number of unit-modulus characteristic roots at
    e0, or `expected` if given).  Edge direction is the sign of the radial
    derivative d|E(k) - e0|/dk; sector windings come from winding_bz at
    sector midpoints.  `inward_count` counts inward edges on the
    counterclockwise arc from a minimal-winding sector to the opposite
    maximal-winding sector.
    """
    e0 = complex(e0)
    cp = char_poly(model)
    deriv_b = cp.poly.derivative(BETA)
    deriv_e = cp.poly.derivative(ENERGY)
    if expected is None:
        ordering = ordered_roots(cp, e0)
        expected = len(ordering.unit_modulus_indices())
    if expected < 2:
        raise ValueError("no multiple unit-modulus roots at this energy")
    n_edges = 2 * expected

    curves = pbc_spectrum(model, num_scan)
    branch_data = []
    for c in curves:
        ks = np.append(c.momenta(), 2.0 * np.pi)
        es = np.append(c.energies(), _branch_value(model, 2.0 * np.pi,
                                                   c.energies()[-1]))
        branch_data.append((c.band, ks, np.abs(es - e0), es))
    diam = max(float(np.max(d)) for _, _, d, _ in branch_data)
    r = radius if radius is not None else 0.05 * diam

    while r >= min_radius:
        crossings = []
        for band, ks, dist, es in branch_data:
            sign = dist - r
            hit = np.nonzero(sign[:-1] * sign[1:] < 0.0)[0]
            for i in hit:
                k_star = _bisect_circle(model, e0, r, ks[i], ks[i + 1], es[i])
                crossings.append((band, k_star, es[i]))
        if len(crossings) == n_edges:
            break
        r *= 0.5
    else:
        raise RadiusUnderflow(
            f"could not isolate {n_edges} branches above radius {min_radius}"
        )

    edges = []
    for band, k_star, hint in crossings:
        e_star = _branch_value(model, k_star, hint)
        de = _dE_dk(cp, deriv_b, deriv_e, k_star, e_star)
        radial = (np.conj(e_star - e0) * de).real / max(abs(e_star - e0), 1e-300)
        angle = float(np.mod(np.angle(e_star - e0), 2.0 * np.pi))
        edges.append((angle, k_star, "inward" if radial < 0.0 else "outward"))
    edges.sort()
    angles = [a for a, _, _ in edges]
    momenta = [k for _, k, _ in edges]
    directions = [d for _, _, d in edges]

    windings = []
    for j in range(n_edges):
        a0 = angles[j]
        a1 = angles[(j + 1) % n_edges]
        if j == n_edges - 1:
            a1 += 2.0 * np.pi
        mid = 0.5 * (a0 + a1)
        w = None
        for rr in (0.5 * r, 0.35 * r, 0.65 * r):
            try:
                w = winding_bz(model, e0 + rr * np.exp(1j * mid), guard_tol=1e-8,
                               _cp=cp)
                break
            except OnSpectrum:
                continue
        if w is None:
            raise OnSpectrum("sector midpoint kept landing on the spectrum")
        windings.append(w)

    inward = _inward_count(windings, directions)
    return LocalStructure(
        radius=r,
        edge_angles=tuple(angles),
        edge_momenta=tuple(momenta),
        edge_directions=tuple(directions),
        sector_windings=tuple(windings),
        inward_count=inward,
    )


def _bisect_circle(model, e0, r, k_lo, k_hi, hint):
    f_lo = abs(_branch_value(model, k_lo, hint) - e0) - r
    for _ in range(80):
        k_mid = 0.5 * (k_lo + k_hi)
        f_mid = abs(_branch_value(model, k_mid, hint) - e0) - r
        if f_lo * f_mid <= 0.0:
            k_hi = k_mid
        else:
            k_lo, f_lo = k_mid, f_mid
        if k_hi - k_lo < 1e-13:
            break
    return 0.5 * (k_lo + k_hi)


def _inward_count(windings, directions):
    """Inward edges on the CCW arc from a w_min sector to the opposite w_max.

    Sector j sits between edge j and edge j+1, so the arc from sector i to
    sector i+n (the opposite one) crosses edges i+1 .. i+n.  Minimal and
    maximal windings occupy opposite sectors; the first opposite pair
    attaining (w_min, w_max) is used.
    """
    m = len(windings)
    n = m // 2
    w_min, w_max = min(windings), max(windings)
    for i in range(m):
        if windings[i] == w_min and windings[(i + n) % m] == w_max:
            return sum(
                directions[(i + 1 + j) % m] == "inward" for j in range(n)
            )
    # fall back to any min sector and the first max reached going CCW
    i = windings.index(w_min)
    count = 0
    for j in range(1, m + 1):
        if directions[(i + j) % m] == "inward":
            count += 1
        if windings[(i + j) % m] == w_max:
            break
    return count


def verify_nfold_condition(model, si: SelfIntersection, tie_tol=TIE_TOL):
    """Check the index window of unit-modulus roots at an intersection.

    The expected window is [l_min - k + 1, l_max + k] with l = p + w, where
    p is the pole order, (w_min, w_max) the adjacent winding extremes and k
    the inward-trajectory count.  Returns a report mapping with the
    expected and observed 1-based ranges.
    """
    cp = char_poly(model)
    ordering = ordered_roots(cp, si.energy, tie_tol)
    unit = ordering.unit_modulus_indices()
    observed = (unit[0], unit[-1]) if unit else None
    contiguous = bool(unit) and unit == list(range(unit[0], unit[-1] + 1))
    expected = None
    if si.w_min is not None and si.inward_count is not None:
        l_min = cp.pole_order + si.w_min
        l_max = cp.pole_order + si.w_max
        expected = (l_min - si.inward_count + 1, l_max + si.inward_count)
    return {
        "ok": contiguous and expected is not None and observed == expected,
        "expected": expected,
        "observed": observed,
        "contiguous": contiguous,
        "unit_count": len(unit),
        "multiplicity": si.multiplicity,
    }


def bz_agbz_intersections(model, curve=None, scan=8192, tie_tol=TIE_TOL):
    """Unit-circle points of the aGBZ as (phase, energy) pairs.

    Scans F(cos phi, sin phi) for sign changes (plus deep minima, which
    catch tangential or double zeros), bisects each bracket, then verifies
    every candidate through the root ordering at the energies attached to
    e^{i phi}.  Only verified points are returned.
    """
    if curve is None:
        curve = agbz_implicit(model)
    cp = char_poly(model)
    phis = np.linspace(0.0, 2.0 * np.pi, scan, endpoint=False)
    betas = np.exp(1j * phis)
    vals = np.real(curve(betas))
    scales = np.maximum(curve.scale_at(betas), 1e-300)
    h = vals / scales

    candidates = []
    for i in range(scan):
        j = (i + 1) % scan
        if h[i] == 0.0:
            candidates.append(phis[i])
        elif h[i] * h[j] < 0.0:
            lo, hi = phis[i], phis[i] + (2.0 * np.pi / scan)
            flo = h[i]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                fm = float(
                    np.real(curve(np.exp(1j * mid)))
                    / max(curve.scale_at(np.exp(1j * mid)), 1e-300)
                )
                if flo * fm <= 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            candidates.append(0.5 * (lo + hi))
    # local minima of |h| without a sign change: tangential (even-order)
    # contacts, e.g. where two sub-boundaries meet the circle at one point
    mag = np.abs(h)
    step = 2.0 * np.pi / scan

    def mag_at(phi):
        b = np.exp(1j * phi)
        return abs(float(np.real(curve(b)))) / max(float(curve.scale_at(b)), 1e-300)

    for i in range(scan):
        if mag[i] < 1e-3 and mag[i] <= mag[i - 1] and mag[i] <= mag[(i + 1) % scan]:
            res = minimize_scalar(
                mag_at,
                bounds=(phis[i] - step, phis[i] + step),
                method="bounded",
                options={"xatol": 1e-13},
            )
            if res.fun < 1e-7:
                candidates.append(float(np.mod(res.x, 2.0 * np.pi)))

    out = []
    seen = []
    for phi in sorted(candidates):
        if any(_circ_dist(phi, p) < 1e-7 for p in seen):
            continue
        beta = np.exp(1j * phi)
        pts = verify_agbz_candidate(cp, beta, theta=None, tie_tol=tie_tol)
        energies = []
        for pt in pts:
            if all(abs(pt.energy - e) > 1e-9 for e in energies):
                energies.append(pt.energy)
        if energies:
            seen.append(phi)
            for e in energies:
                out.append((float(phi), complex(e)))
    out.sort(key=lambda t: (t[0], t[1].real, t[1].imag))
    return out


@dataclass
class CorrespondenceReport:
    """Match between spectrum self-intersections and aGBZ/BZ crossings."""

    passed: bool
    intersections: list
    circle_points: list
    pairs: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    def as_dict(self):
        return {
            "passed": self.passed,
            "intersections": [s.as_report_dict() for s in self.intersections],
            "circlePoints": [
                {"phi": p, "reE": e.real, "imE": e.imag}
                for p, e in self.circle_points
            ],
            "pairs": self.pairs,
            "violations": self.violations,
        }


def verify_correspondence(model, tol_e=CLUSTER_TOL, num_k=2048, curve=None):
    """One-to-multiple correspondence check.

    Every detected n-fold intersection must match exactly n aGBZ/BZ points
    at its energy, and every aGBZ/BZ point must belong to some detected
    intersection.  Matched pairs and violations are reported; both lists
    empty on a simple loop still passes.
    """
    intersections = find_intersections(model, num_k=num_k, tol_e=tol_e)
    circle = bz_agbz_intersections(model, curve=curve)

    pairs = []
    violations = []
    used = [False] * len(circle)
    for si in intersections:
        matched = [
            i for i, (phi, e) in enumerate(circle) if abs(e - si.energy) <= tol_e
        ]
        phases = sorted(circle[i][0] for i in matched)
        si.matched_agbz_phases = tuple(phases)
        for i in matched:
            used[i] = True
        if len(matched) != si.multiplicity:
            violations.append(
                f"E0={si.energy:.6g}: multiplicity {si.multiplicity} but "
                f"{len(matched)} aGBZ/BZ points"
            )
        else:
            kset = np.sort(si.k_solutions)
            if len(phases) == len(kset) and np.max(
                np.abs(np.array(phases) - kset)
            ) > 1e-5:
                violations.append(
                    f"E0={si.energy:.6g}: aGBZ/BZ phases differ from momenta"
                )
            else:
                pairs.append(
                    {
                        "reE0": si.energy.real,
                        "imE0": si.energy.imag,
                        "n": si.multiplicity,
                        "phases": [float(p) for p in phases],
                    }
                )
    for i, (phi, e) in enumerate(circle):
        if not used[i]:
            violations.append(
                f"aGBZ/BZ point phi={phi:.6f}, E={e:.6g} matches no intersection"
            )
    return CorrespondenceReport(
        passed=not violations,
        intersections=intersections,
        circle_points=circle,
        pairs=pairs,
        violations=violations,
    )
