"""Scenario loading, validation and the run pipeline.

A scenario file is a JSON object with exactly these top-level keys:

    name         string
    metric       {"family": ..., "params": {...}}
    initial_set  one ring [[x1, x2], ...] or a list of such rings
    t_grid       strictly increasing positive slice times
    dt_step      integrator step (optional, default 1e-3)
    oracle       {"dx", "dt_layer", "extents", "neighborhood_radius"?}  (optional)
    refinement   {"max_gap"}  (optional)
    outputs      subset of ["fronts_csv", "traces_csv", "seeds_csv",
                 "svg", "report_json"]  (optional, default report_json)

Validation failures name the JSON pointer of the offending field.  Running a
scenario lifts the initial rings, propagates the front over t_grid, applies
trimming, evaluates the invariant suites, optionally compares against the
lattice oracle, and writes the requested artifacts.  All emitted files are
deterministic: fixed float formatting, fixed orderings, no timestamps.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field as dataclass_field
from typing import List, Optional

import numpy as np

from .errors import ConewaveError, ConfigurationError, DataError
from .front import (WavefrontResult, front_is_simple, propagate,
                    refine_front, write_front_csv)
from .geodesic import GeodesicTrace, propagate_states, write_traces_csv
from .geometry import points_in_polygon, polyline_is_simple
from .lift import BoundarySpline, lift_front, orthogonality_residual, write_seeds_csv
from .metric import FAMILIES, MetricModel, build_metric, verify_cone_conditions
from .oracle import (LatticeSpec, achronality_check, compare_front_to_oracle,
                     earliest_arrival, write_arrival_csv)
from . import svgplot

__all__ = ["Scenario", "load_scenario", "parse_scenario", "run_scenario",
           "dump_report_json", "OUTPUT_KINDS"]

OUTPUT_KINDS = ("fronts_csv", "traces_csv", "seeds_csv", "svg", "report_json")

_TOP_KEYS = {"name", "metric", "initial_set", "t_grid", "dt_step",
             "oracle", "refinement", "outputs"}


@dataclass
class Scenario:
    name: str
    family: str
    params: dict
    rings: List[np.ndarray]
    t_grid: np.ndarray
    dt_step: float = 1e-3
    oracle: Optional[dict] = None
    refinement: Optional[dict] = None
    outputs: tuple = ("report_json",)
    n_seeds: int = 64


def _fail(pointer: str, message: str):
    raise ConfigurationError(f"{pointer}: {message}")


def parse_scenario(obj) -> Scenario:
    """Validate a decoded scenario object; errors carry JSON pointers."""
    if not isinstance(obj, dict):
        _fail("", "scenario must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        _fail("/" + sorted(unknown)[0], "unknown key")
    for req in ("name", "metric", "initial_set", "t_grid"):
        if req not in obj:
            _fail("/" + req, "missing required key")

    name = obj["name"]
    if not isinstance(name, str) or not name:
        _fail("/name", "must be a non-empty string")

    metric = obj["metric"]
    if not isinstance(metric, dict) or set(metric) - {"family", "params"}:
        _fail("/metric", 'must be {"family", "params"}')
    family = metric.get("family")
    if family not in FAMILIES:
        _fail("/metric/family", f"unknown family {family!r}; "
              f"known: {sorted(FAMILIES)}")
    params = metric.get("params", {})
    if not isinstance(params, dict):
        _fail("/metric/params", "must be an object")
    if family == "quartic" and "lambda" in params:
        lam = params["lambda"]
        if not isinstance(lam, (int, float)) or not (1.0 / 3.0 < lam < 3.0):
            _fail("/metric/params/lambda",
                  "must be a number strictly between 1/3 and 3")
    try:
        build_metric(family, params)
    except ConewaveError as exc:
        _fail("/metric/params", str(exc))

    rings = _parse_rings(obj["initial_set"])

    t_grid = obj["t_grid"]
    if (not isinstance(t_grid, list) or not t_grid
            or not all(isinstance(v, (int, float)) for v in t_grid)):
        _fail("/t_grid", "must be a non-empty list of numbers")
    t_arr = np.asarray(t_grid, dtype=float)
    if t_arr[0] <= 0.0 or np.any(np.diff(t_arr) <= 0.0):
        _fail("/t_grid", "must be strictly increasing and positive")

    dt_step = obj.get("dt_step", 1e-3)
    if not isinstance(dt_step, (int, float)) or dt_step <= 0:
        _fail("/dt_step", "must be a positive number")

    oracle = obj.get("oracle")
    if oracle is not None:
        oracle = _parse_oracle(oracle)

    refinement = obj.get("refinement")
    if refinement is not None:
        if not isinstance(refinement, dict) or set(refinement) != {"max_gap"}:
            _fail("/refinement", 'must be {"max_gap"}')
        if not isinstance(refinement["max_gap"], (int, float)) \
                or refinement["max_gap"] <= 0:
            _fail("/refinement/max_gap", "must be a positive number")

    outputs = obj.get("outputs", ["report_json"])
    if not isinstance(outputs, list):
        _fail("/outputs", "must be a list")
    for k, out in enumerate(outputs):
        if out not in OUTPUT_KINDS:
            _fail(f"/outputs/{k}", f"unknown output {out!r}; "
                  f"known: {list(OUTPUT_KINDS)}")

    return Scenario(name=name, family=family, params=params, rings=rings,
                    t_grid=t_arr, dt_step=float(dt_step), oracle=oracle,
                    refinement=refinement, outputs=tuple(outputs))


def _parse_rings(spec) -> List[np.ndarray]:
    if not isinstance(spec, list) or not spec:
        _fail("/initial_set", "must be a ring or a non-empty list of rings")
    # one ring: a list of [x1, x2] pairs; otherwise a list of rings
    if all(isinstance(v, list) and len(v) == 2
           and all(isinstance(c, (int, float)) for c in v) for v in spec):
        ring_specs = [spec]
    else:
        ring_specs = spec
    rings = []
    for k, rs in enumerate(ring_specs):
        where = f"/initial_set/{k}" if ring_specs is spec else "/initial_set"
        if (not isinstance(rs, list) or len(rs) < 3
                or not all(isinstance(v, list) and len(v) == 2
                           and all(isinstance(c, (int, float)) for c in v)
                           for v in rs)):
            _fail(where, "ring must be a list of at least 3 [x1, x2] vertices")
        ring = np.asarray(rs, dtype=float)
        m = len(ring)
        edges = np.stack([np.arange(m), (np.arange(m) + 1) % m], axis=1)
        if not polyline_is_simple(ring, edges):
            _fail(where, "ring must be a simple polygon")
        rings.append(ring)
    for a in range(len(rings)):
        for b in range(len(rings)):
            if a != b and points_in_polygon(rings[a], rings[b]).any():
                _fail("/initial_set",
                      f"rings {a} and {b} overlap or nest; rings must be disjoint")
    return rings


def _parse_oracle(spec) -> dict:
    if not isinstance(spec, dict):
        _fail("/oracle", "must be an object")
    allowed = {"dx", "dt_layer", "extents", "neighborhood_radius"}
    unknown = set(spec) - allowed
    if unknown:
        _fail("/oracle/" + sorted(unknown)[0], "unknown key")
    for req in ("dx", "dt_layer", "extents"):
        if req not in spec:
            _fail(f"/oracle/{req}", "missing required key")
    for key in ("dx", "dt_layer"):
        if not isinstance(spec[key], (int, float)) or spec[key] <= 0:
            _fail(f"/oracle/{key}", "must be a positive number")
    ext = spec["extents"]
    bad = (not isinstance(ext, list) or len(ext) != 2
           or any(not isinstance(ax, list) or len(ax) != 2
                  or not all(isinstance(v, (int, float)) for v in ax)
                  or ax[0] >= ax[1] for ax in ext))
    if bad:
        _fail("/oracle/extents", "must be [[x1min, x1max], [x2min, x2max]], increasing")
    radius = spec.get("neighborhood_radius", 3)
    if not isinstance(radius, int) or radius < 1:
        _fail("/oracle/neighborhood_radius", "must be an integer >= 1")
    return {"dx": float(spec["dx"]), "dt_layer": float(spec["dt_layer"]),
            "extents": [[float(v) for v in ax] for ax in ext],
            "neighborhood_radius": radius}


def load_scenario(path) -> Scenario:
    """Read, decode and validate a scenario file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"scenario is not valid JSON: {exc}") from exc
    return parse_scenario(obj)


# ---------------------------------------------------------------------------
# deterministic report serialization

def _json_scalar(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not np.isfinite(v):          # JSON has no inf/nan literals
            return '"%s"' % repr(v)
        return "%.17g" % v
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _json_emit(obj, indent):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {_json_emit(obj[k], indent + 1)}'
                 for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not len(obj):
            return "[]"
        items = [f"{pad}  {_json_emit(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _json_scalar(obj)


def dump_report_json(report: dict) -> str:
    """Serialize a report with sorted keys and fixed float formatting, so
    byte-identical reruns produce byte-identical files."""
    return _json_emit(report, 0) + "\n"


# ---------------------------------------------------------------------------
# the pipeline

def _suite(name, passed, margin, details):
    return {"name": name, "pass": bool(passed),
            "margin": None if margin is None else float(margin),
            "details": details}


def _metric_suite(model: MetricModel, rings) -> dict:
    probes = [ring.mean(axis=0) for ring in rings]
    for ring in rings:
        probes.extend(ring[:: max(1, len(ring) // 4)][:4])
    worst = np.inf
    all_ok = True
    for x in probes:
        rep = verify_cone_conditions(model, (0.0, x))
        worst = min(worst, rep.strong_convexity_margin)
        all_ok = all_ok and rep.passed
    return _suite("metric_conditions", all_ok, worst,
                  {"probe_points": len(probes),
                   "worst_strong_convexity_margin": float(worst)})


def _lift_all(model, rings, t, n_seeds):
    seeds = []
    for k, ring in enumerate(rings):
        spline = BoundarySpline(ring)
        seeds.extend(lift_front(model, spline, n_seeds=max(n_seeds, len(ring)),
                                t=t, loop=k, index_offset=len(seeds)))
    return seeds


def _traces_from_states(taus, XS, YS) -> List[GeodesicTrace]:
    n_t, n_seeds = XS.shape[:2]
    ones = np.ones((n_t, 1))
    traces = []
    for i in range(n_seeds):
        txs = np.concatenate([taus[:, None], XS[:, i, :]], axis=1)
        vels = np.concatenate([ones, YS[:, i, :]], axis=1)
        traces.append(GeodesicTrace(seed_index=i, parametrization="time",
                                    taus=taus.copy(), txs=txs, vels=vels))
    return traces


def run_scenario(s: Scenario, out_dir, use_oracle: bool = False,
                 use_refine: bool = False, want_svg: bool = False,
                 timings: bool = False):
    """Execute the pipeline; returns (exit_code, report dict).

    Exit 0 when every enabled suite passes, 1 when a suite fails, 2 when a
    module raises; in the last case the report carries the structured error.
    Artifacts land in out_dir (created if needed).
    """
    os.makedirs(out_dir, exist_ok=True)
    outputs = set(s.outputs)
    if want_svg:
        outputs.add("svg")
    report = {"scenario": s.name, "suites": [], "first_cut_time": None,
              "timings": None}
    clock = {} if timings else None
    try:
        code = _run_pipeline(s, out_dir, outputs, use_oracle, use_refine,
                             report, clock)
    except ConewaveError as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = 2
    if timings:
        report["timings"] = clock
    if "report_json" in outputs or code == 2:
        with open(os.path.join(out_dir, "report.json"), "w", newline="\n") as fh:
            fh.write(dump_report_json(report))
    return code, report


def _run_pipeline(s, out_dir, outputs, use_oracle, use_refine, report, clock):
    def tick(label, t0):
        if clock is not None:
            clock[label] = time.perf_counter() - t0

    if use_oracle and s.oracle is None:
        raise ConfigurationError("oracle comparison requested but the "
                                 "scenario has no /oracle block")
    if use_refine and s.refinement is None:
        raise ConfigurationError("refinement requested but the scenario has "
                                 "no /refinement block")

    model = build_metric(s.family, s.params)
    suites = report["suites"]
    suites.append(_metric_suite(model, s.rings))

    t0 = time.perf_counter()
    seeds = _lift_all(model, s.rings, 0.0, s.n_seeds)
    resid = orthogonality_residual(model, seeds)
    suites.append(_suite("lift_residuals", resid <= 1e-10, 1e-10 - resid,
                         {"seeds": len(seeds), "max_residual": float(resid)}))
    tick("lift", t0)

    t0 = time.perf_counter()
    slice_times = np.concatenate([[0.0], s.t_grid])
    result = propagate(model, seeds, t_end=float(s.t_grid[-1]),
                       slice_times=slice_times, dt_step=s.dt_step)
    report["first_cut_time"] = result.first_cut_time
    tick("propagate", t0)

    t0 = time.perf_counter()
    X0 = np.asarray([sd.x for sd in seeds])
    Y0 = np.asarray([sd.y for sd in seeds])
    XS, YS = propagate_states(model, 0.0, X0, Y0, slice_times,
                              dt_step=s.dt_step)
    Lres = np.abs(model.L_vec(slice_times[:, None], XS,
                              np.ones(XS.shape[:2]), YS))
    drift = float(Lres.max())
    suites.append(_suite("conservation", drift <= 1e-8, 1e-8 - drift,
                         {"max_lightlike_residual": drift,
                          "sampled_states": int(Lres.size)}))
    tick("conservation", t0)

    active_counts = [int(sl.active.sum()) for sl in result.slices]
    monotone = all(a >= b for a, b in zip(active_counts, active_counts[1:]))
    trimmed = active_counts[0] - active_counts[-1]
    suites.append(_suite("trim", monotone, None,
                         {"active_counts": active_counts,
                          "trimmed_total": trimmed,
                          "first_cut_time": result.first_cut_time}))

    failures = [k for k, sl in enumerate(result.slices)
                if not front_is_simple(sl)]
    suites.append(_suite("front_simplicity", not failures, None,
                         {"checked_slices": len(result.slices),
                          "failing_slices": failures}))

    if use_oracle:
        t0 = time.perf_counter()
        spec = s.oracle
        grid = LatticeSpec.from_extents(spec["extents"], spec["dx"])
        fld = earliest_arrival(model, s.rings, grid, spec["dt_layer"],
                               neighborhood_radius=spec["neighborhood_radius"])
        cmp_rep = compare_front_to_oracle(fld, result)
        suites.append(_suite("oracle_comparison", cmp_rep["pass"],
                             cmp_rep["tolerance"] - cmp_rep["max"], cmp_rep))
        worst_lead = -np.inf
        violations = 0
        margin = None
        for sl in result.slices[1:]:
            arep = achronality_check(fld, sl)
            violations += len(arep["violations"])
            worst_lead = max(worst_lead, arep["max_lead"])
            margin = arep["margin"]
        suites.append(_suite("achronality", violations == 0,
                             None if margin is None else margin - worst_lead,
                             {"violations": violations,
                              "max_lead": float(worst_lead),
                              "margin": margin}))
        write_arrival_csv(fld, os.path.join(out_dir, "arrival.csv"))
        tick("oracle", t0)

    if use_refine:
        t0 = time.perf_counter()
        max_gap = s.refinement["max_gap"]
        final = result.slices[-1]
        gaps_before = _gap_stats(final)
        refined = refine_front(model, final, max_gap)
        # Gaps close within each loop; the jump from one loop's seeds to the
        # next loop's is not a sampling gap and no seeding can shrink it.
        worst_after = 0.0
        for lp in sorted({sd.loop for sd in refined}):
            Xl = np.asarray([sd.x for sd in refined if sd.loop == lp])
            gl = np.linalg.norm(np.roll(Xl, -1, axis=0) - Xl, axis=1)
            worst_after = max(worst_after, float(gl.max()))
        suites.append(_suite("refinement", worst_after <= max_gap * 1.05,
                             max_gap - worst_after,
                             {"max_gap": max_gap,
                              "seeds_before": int(final.active.sum()),
                              "seeds_after": len(refined),
                              "worst_gap_before": gaps_before,
                              "worst_gap_after": worst_after}))
        tick("refine", t0)

    if "seeds_csv" in outputs:
        write_seeds_csv(seeds, os.path.join(out_dir, "seeds.csv"))
    if "fronts_csv" in outputs:
        write_front_csv(result, os.path.join(out_dir, "fronts.csv"))
    if "traces_csv" in outputs:
        write_traces_csv(_traces_from_states(slice_times, XS, YS),
                         os.path.join(out_dir, "traces.csv"))
    if "svg" in outputs:
        svgplot.render_scene(result, s.rings,
                             os.path.join(out_dir, "scene.svg"))

    return 0 if all(su["pass"] for su in report["suites"]) else 1


def _gap_stats(sl) -> float:
    edges = sl.active_edges()
    if not len(edges):
        return 0.0
    gaps = np.linalg.norm(sl.positions[edges[:, 1]]
                          - sl.positions[edges[:, 0]], axis=1)
    return float(gaps.max())
