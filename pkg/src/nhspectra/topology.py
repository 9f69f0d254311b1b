"""Spectral winding numbers over the complex energy plane.

The primary route counts characteristic roots inside the unit circle and
subtracts the pole order; the independent oracle accumulates the phase of
det(h(beta) - E_b) along a sampled contour.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OnSpectrum, PhaseUnresolved
from .model import OneBandModel, bloch_eval, char_poly
from .polyalg import poly_roots

#: Relative modulus distance from 1 below which a root counts as on-spectrum.
GUARD_TOL = 1e-4

#: Largest phase step per contour segment accepted without refinement.
MAX_PHASE_STEP = np.pi / 4.0

_MAX_CONTOUR_POINTS = 1 << 20


def winding_bz(model, e_b, guard_tol=GUARD_TOL, _cp=None):
    """Winding of the Bloch spectrum around `e_b`.

    Equals (number of characteristic roots with |beta| < 1) minus the pole
    order.  Raises OnSpectrum when a root modulus falls within `guard_tol`
    of 1, i.e. `e_b` lies on or too near the periodic spectrum.
    """
    cp = _cp if _cp is not None else char_poly(model)
    roots = poly_roots(cp.beta_poly(e_b))
    mods = np.abs(roots)
    if np.any(np.abs(mods - 1.0) < guard_tol):
        raise OnSpectrum(f"characteristic root on the unit circle for E_b={e_b}")
    return int(np.sum(mods < 1.0)) - cp.pole_order


def _det_h_minus(model, betas, e_b):
    betas = np.asarray(betas, dtype=complex)
    if isinstance(model, OneBandModel):
        vals = np.zeros_like(betas)
        for n, t in model.hops.items():
            vals = vals + t * betas**n
        return vals - e_b
    out = np.empty(betas.shape, dtype=complex)
    for i, b in np.ndenumerate(betas):
        h = bloch_eval(model, b)
        out[i] = np.linalg.det(h - e_b * np.eye(h.shape[0]))
    return out


def winding_contour(model, e_b, contour, num_samples=256):
    """Phase winding of det(h(beta) - e_b) along a closed contour.

    `contour` is either a callable t in [0, 1) -> complex or a sequence of
    complex points (a closed polygon).  Segments are split until every
    phase step is below MAX_PHASE_STEP; the accumulated phase must land
    within 0.1 of an integer multiple of 2 pi.
    """
    if callable(contour):
        ts = np.linspace(0.0, 1.0, num_samples, endpoint=False)
        pts = np.asarray([contour(t) for t in ts], dtype=complex)
    else:
        pts = np.asarray(contour, dtype=complex).ravel()
        if pts.size >= 2 and abs(pts[0] - pts[-1]) < 1e-15:
            pts = pts[:-1]
    if pts.size < 3:
        raise ValueError("contour needs at least 3 points")

    scale = float(np.max(np.abs(_det_h_minus(model, pts, e_b))))
    for _ in range(32):
        vals = _det_h_minus(model, pts, e_b)
        if np.any(np.abs(vals) < 1e-12 * max(scale, 1e-300)):
            raise OnSpectrum("contour passes through a zero of det(h - E_b)")
        ratios = np.roll(vals, -1) / vals
        steps = np.angle(ratios)
        if np.max(np.abs(steps)) < MAX_PHASE_STEP:
            total = steps.sum() / (2.0 * np.pi)
            w = int(np.round(total))
            if abs(total - w) > 0.1:
                raise PhaseUnresolved(
                    f"accumulated phase {total:.3f} not close to an integer"
                )
            return w
        if 2 * pts.size > _MAX_CONTOUR_POINTS:
            break
        # halve every segment: midpoints of the polygon chords
        mids = 0.5 * (pts + np.roll(pts, -1))
        refined = np.empty(2 * pts.size, dtype=complex)
        refined[0::2] = pts
        refined[1::2] = mids
        pts = refined
    raise PhaseUnresolved("phase steps did not settle under refinement budget")


def unit_circle(num=512):
    """Closed unit-circle polygon, counterclockwise."""
    t = np.linspace(0.0, 2.0 * np.pi, num, endpoint=False)
    return np.exp(1j * t)


@dataclass
class WindingRaster:
    """Grid of integer winding numbers over a rectangle of the energy plane.

    `values` holds Python ints where defined and None where the reference
    energy sits within guard distance of the spectrum.
    """

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int
    values: list  # row-major: values[iy][ix], iy indexes Im ascending

    def centers(self):
        xs = self.re_min + (np.arange(self.nx) + 0.5) * (
            (self.re_max - self.re_min) / self.nx
        )
        ys = self.im_min + (np.arange(self.ny) + 0.5) * (
            (self.im_max - self.im_min) / self.ny
        )
        return xs, ys

    def defined_values(self):
        return sorted({v for row in self.values for v in row if v is not None})


def winding_raster(model, bbox, resolution=(200, 200), guard_tol=GUARD_TOL,
                   threads=1):
    """winding_bz per cell center; undefined cells degrade individually.

    `bbox` is (re_min, re_max, im_min, im_max); `resolution` is (nx, ny),
    at least 16 x 16.  Rows are independent; `threads` caps the worker
    count and the output grid is deterministic regardless.
    """
    nx, ny = resolution
    if nx < 16 or ny < 16:
        raise ValueError("resolution must be at least 16 x 16")
    re_min, re_max, im_min, im_max = (float(v) for v in bbox)
    cp = char_poly(model)
    xs = re_min + (np.arange(nx) + 0.5) * ((re_max - re_min) / nx)
    ys = im_min + (np.arange(ny) + 0.5) * ((im_max - im_min) / ny)

    def compute_row(y):
        row = []
        for x in xs:
            try:
                row.append(winding_bz(model, complex(x, y), guard_tol, _cp=cp))
            except OnSpectrum:
                row.append(None)
        return row

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(compute_row, ys))
    else:
        rows = [compute_row(y) for y in ys]
    return WindingRaster(re_min, re_max, im_min, im_max, nx, ny, rows)


def spectrum_bbox(curves, margin=0.1):
    """Axis-aligned box around sampled spectrum curves, padded by `margin`."""
    es = np.concatenate([c.energies() for c in curves])
    re_min, re_max = float(es.real.min()), float(es.real.max())
    im_min, im_max = float(es.imag.min()), float(es.imag.max())
    diam = max(re_max - re_min, im_max - im_min, 1e-6)
    pad = margin * diam
    return (re_min - pad, re_max + pad, im_min - pad, im_max + pad)
