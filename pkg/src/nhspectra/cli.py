"""Batch driver: load a run configuration, execute one task, emit artifacts.

Configurations are JSON documents::

    {
      "schemaVersion": 1,
      "task": "spectrum",
      "model": {"type": "one_band", "hops": [[-1, 0.5, 0.0], [1, 2.0, 0.0]]},
      "params": {"numK": 512},
      "out": "runs/std-hn"
    }

Model schema: ``type`` is ``one_band`` (``hops`` as ``[n, re, im]`` rows),
``ssh`` (``t1``, ``t2``, ``t3``, ``gamma`` as numbers or ``[re, im]``) or
``nfold`` (``n``, ``phi``, ``q_hops`` rows).  Outputs use 17 significant
digits and canonical row ordering, so identical configurations produce
byte-identical data files.  The manifest additionally records wall time.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import ConfigInvalid, NhSpectraError
from .gbz import agbz_implicit, agbz_sample_theta, gbz_extract
from .intersect import find_intersections, verify_correspondence
from .model import char_poly, model_from_dict, model_to_dict, nfold_construct
from .spectra import obc_finite, obc_thermodynamic, pbc_spectrum
from .topology import spectrum_bbox, winding_raster

TASKS = (
    "spectrum",
    "obc",
    "agbz",
    "gbz",
    "winding-raster",
    "intersections",
    "verify",
    "nfold-generate",
)

_PARAM_DEFAULTS = {
    "spectrum": {"numK": 512},
    "obc": {"L": 40, "thermodynamic": False, "thetaGrid": 720},
    "agbz": {"thetaGrid": 720, "implicit": False, "tieTol": 1e-6},
    "gbz": {"thetaGrid": 720, "tieTol": 1e-6},
    "winding-raster": {"bbox": None, "resolution": [200, 200], "guardTol": 1e-4},
    "intersections": {"numK": 2048, "tolE": 1e-6},
    "verify": {"numK": 2048, "tolE": 1e-6},
    "nfold-generate": {"n": 2, "phi": 0.0, "qHops": [[0, 1.0, 0.0]]},
}

_TOLERANCE_KEYS = {"tieTol", "tolE", "guardTol"}


def _fmt(x):
    """Fixed 17-significant-digit float formatting for data files."""
    return f"{float(x):.17g}"


def validate_config(raw):
    """Validate a raw config mapping; returns (model_spec, task, params, out)."""
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a JSON object")
    allowed = {"schemaVersion", "task", "model", "params", "out"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
    if raw.get("schemaVersion") != 1:
        raise ConfigInvalid("schemaVersion must be 1")
    task = raw.get("task")
    if task not in TASKS:
        raise ConfigInvalid(f"task must be one of {TASKS}")
    params = dict(_PARAM_DEFAULTS[task])
    given = raw.get("params", {})
    if not isinstance(given, dict):
        raise ConfigInvalid("params must be an object")
    unknown = set(given) - set(params)
    if unknown:
        raise ConfigInvalid(f"unknown params for {task}: {sorted(unknown)}")
    params.update(given)
    for key in _TOLERANCE_KEYS & set(params):
        if not (float(params[key]) > 0.0):
            raise ConfigInvalid(f"tolerance {key} must be positive")
    if task == "spectrum" and int(params["numK"]) < 8:
        raise ConfigInvalid("numK must be at least 8")
    if task in ("intersections", "verify") and int(params["numK"]) < 256:
        raise ConfigInvalid("numK must be at least 256")
    model_spec = raw.get("model")
    if task != "nfold-generate" and model_spec is None:
        raise ConfigInvalid("model is required for this task")
    return model_spec, task, params, raw.get("out", "run")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _task_spectrum(model, params, prefix, warnings):
    curves = pbc_spectrum(model, int(params["numK"]))
    rows = []
    for c in curves:
        if c.tracking_ambiguous and "BandTrackingAmbiguous" not in warnings:
            warnings.append("BandTrackingAmbiguous")
        for k, e in c.samples:
            rows.append((str(c.band), _fmt(k), _fmt(e.real), _fmt(e.imag)))
    path = prefix + "pbc.csv"
    _write_csv(path, "band,k,reE,imE", rows)
    return [path], {"bands": len(curves), "samples": len(rows)}


def _task_obc(model, params, prefix, warnings):
    spectra = [obc_finite(model, int(params["L"]))]
    if params["thermodynamic"]:
        grid = np.linspace(0, 2 * np.pi, int(params["thetaGrid"]) + 2)[1:-1]
        pts = agbz_sample_theta(model, grid)
        spectra.append(obc_thermodynamic(model, gbz_extract(pts, char_poly(model))))
    rows = []
    for sp in spectra:
        for e in sp.sorted_values():
            rows.append((sp.source, _fmt(e.real), _fmt(e.imag)))
    path = prefix + "obc.csv"
    _write_csv(path, "source,reE,imE", rows)
    return [path], {"sources": [sp.source for sp in spectra]}


def _agbz_rows(points):
    rows = []
    for pt in sorted(points, key=lambda p: p.sort_key()):
        rows.append(
            (
                _fmt(pt.beta.real),
                _fmt(pt.beta.imag),
                str(pt.label[0]),
                str(pt.label[1]),
                _fmt(pt.partner_phase),
                _fmt(pt.energy.real),
                _fmt(pt.energy.imag),
            )
        )
    return rows


def _task_agbz(model, params, prefix, warnings, extract=False):
    grid = np.linspace(0, 2 * np.pi, int(params["thetaGrid"]) + 2)[1:-1]
    points = agbz_sample_theta(model, grid, tie_tol=float(params["tieTol"]))
    outputs = []
    summary = {"points": len(points)}
    if extract:
        points = gbz_extract(points, char_poly(model))
        summary["points"] = len(points)
        path = prefix + "gbz.csv"
    else:
        path = prefix + "agbz.csv"
    _write_csv(path, "reBeta,imBeta,labelLow,labelHigh,theta,reE,imE", _agbz_rows(points))
    outputs.append(path)
    if not extract and params.get("implicit"):
        curve = agbz_implicit(model)
        jpath = prefix + "agbz_implicit.json"
        with open(jpath, "w", encoding="utf-8") as fh:
            json.dump(curve.coefficients(), fh, indent=1)
            fh.write("\n")
        outputs.append(jpath)
        summary["implicitTerms"] = len(curve.poly.terms)
    return outputs, summary


def _task_raster(model, params, prefix, warnings, threads=1):
    bbox = params["bbox"]
    if bbox is None:
        bbox = spectrum_bbox(pbc_spectrum(model, 512))
    nx, ny = (int(v) for v in params["resolution"])
    raster = winding_raster(
        model, bbox, (nx, ny), guard_tol=float(params["guardTol"]), threads=threads
    )
    xs, ys = raster.centers()
    rows = []
    undefined = 0
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            v = raster.values[iy][ix]
            if v is None:
                undefined += 1
            rows.append((_fmt(x), _fmt(y), "NA" if v is None else str(v)))
    if undefined:
        warnings.append(f"OnSpectrum: {undefined} undefined cells")
    path = prefix + "raster.csv"
    _write_csv(path, "reE,imE,winding", rows)
    return [path], {
        "bbox": [float(v) for v in bbox],
        "definedValues": raster.defined_values(),
    }


def _task_intersections(model, params, prefix, warnings):
    found = find_intersections(
        model, num_k=int(params["numK"]), tol_e=float(params["tolE"])
    )
    if any(si.cluster_ambiguous for si in found):
        warnings.append("ClusterAmbiguous")
    path = prefix + "intersections.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([si.as_report_dict() for si in found], fh, indent=1)
        fh.write("\n")
    return [path], {"count": len(found)}


def _task_verify(model, params, prefix, warnings):
    report = verify_correspondence(
        model, tol_e=float(params["tolE"]), num_k=int(params["numK"])
    )
    path = prefix + "verify.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, indent=1)
        fh.write("\n")
    matched = sum(p["n"] for p in report.pairs)
    return [path], {
        "correspondence": "PASS" if report.passed else "FAIL",
        "matchedPairs": matched,
        "violations": report.violations,
    }


def _task_nfold(params, prefix, warnings):
    q_hops = {int(n): complex(re, im) for n, re, im in params["qHops"]}
    model = nfold_construct(int(params["n"]), float(params["phi"]), q_hops)
    path = prefix + "model.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")
    return [path], {"hops": len(model.hops)}


def run(raw_config, threads=1):
    """Execute one validated task; returns (exit_code, manifest dict)."""
    started = time.time()
    try:
        model_spec, task, params, out = validate_config(raw_config)
        model = model_from_dict(model_spec) if model_spec is not None else None
    except (ConfigInvalid, ValueError, KeyError, TypeError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2, None
    prefix = out if out.endswith(("/", "-", "_", ".")) else out + "_"
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    warnings = []
    try:
        if task == "spectrum":
            outputs, summary = _task_spectrum(model, params, prefix, warnings)
        elif task == "obc":
            outputs, summary = _task_obc(model, params, prefix, warnings)
        elif task == "agbz":
            outputs, summary = _task_agbz(model, params, prefix, warnings)
        elif task == "gbz":
            outputs, summary = _task_agbz(model, params, prefix, warnings, extract=True)
        elif task == "winding-raster":
            outputs, summary = _task_raster(model, params, prefix, warnings, threads)
        elif task == "intersections":
            outputs, summary = _task_intersections(model, params, prefix, warnings)
        elif task == "verify":
            outputs, summary = _task_verify(model, params, prefix, warnings)
        else:
            outputs, summary = _task_nfold(params, prefix, warnings)
    except NhSpectraError as exc:
        sys.stderr.write(f"numerical failure in task {task}: {exc}\n")
        manifest = {
            "schemaVersion": 1,
            "task": task,
            "config": raw_config,
            "version": __version__,
            "status": "error",
            "error": f"{type(exc).__name__}: {exc}",
            "wallTimeSeconds": time.time() - started,
        }
        _write_manifest(prefix, manifest)
        return 3, manifest
    manifest = {
        "schemaVersion": 1,
        "task": task,
        "config": raw_config,
        "version": __version__,
        "status": "ok",
        "outputs": outputs,
        "summary": summary,
        "warnings": warnings,
        "wallTimeSeconds": time.time() - started,
    }
    _write_manifest(prefix, manifest)
    return 0, manifest


def _write_manifest(prefix, manifest):
    with open(prefix + "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def load_preset(name):
    ref = importlib.resources.files("nhspectra").joinpath(f"presets/{name}.json")
    if not ref.is_file():
        raise ConfigInvalid(f"unknown preset {name!r}")
    return json.loads(ref.read_text(encoding="utf-8"))


def _apply_overrides(config, overrides):
    params = dict(config.get("params", {}))
    for item in overrides:
        if "=" not in item:
            raise ConfigInvalid(f"bad --tol-override {item!r}, expected KEY=VAL")
        key, val = item.split("=", 1)
        try:
            params[key] = json.loads(val)
        except json.JSONDecodeError:
            raise ConfigInvalid(f"bad --tol-override value {val!r}")
    config = dict(config)
    config["params"] = params
    return config


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="nhspectra",
        description="Spectra, generalized Brillouin zones and winding "
        "topology of 1D non-Hermitian chains.",
    )
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="path to a JSON run configuration")
    group.add_argument("--preset", help="named built-in configuration "
                       "(fig2b, fig2c, fig2d, fig3)")
    parser.add_argument("--out", help="output path prefix (overrides config)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap for parallel tasks")
    parser.add_argument("--tol-override", action="append", default=[],
                        metavar="KEY=VAL", help="override a task parameter")
    args = parser.parse_args(argv)

    try:
        if args.preset:
            config = load_preset(args.preset)
        else:
            with open(args.config, "r", encoding="utf-8") as fh:
                config = json.load(fh)
        config = _apply_overrides(config, args.tol_override)
    except (OSError, json.JSONDecodeError, ConfigInvalid) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    if args.out:
        config["out"] = args.out
    code, _ = run(config, threads=max(1, args.threads))
    return code


if __name__ == "__main__":
    sys.exit(main())
