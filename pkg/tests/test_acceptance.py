"""End-to-end acceptance checklist.

Nine numbered checks, each printing one PASS/FAIL line (run with -s to see
them alongside the pytest verdicts).  Tolerances and runtime budgets are part
of the contract; a failed budget fails the check.
"""
import time

import numpy as np

from conewave import (
    BoundarySpline,
    LatticeSpec,
    achronality_check,
    build_metric,
    compare_front_to_oracle,
    earliest_arrival,
    front_is_simple,
    lift_front,
    orthogonality_residual,
    propagate,
    relift_flow,
)
from conewave.fields import CallableScalar
from conewave.geodesic import propagate_states
from conewave.scenario import parse_scenario, run_scenario


def circle(r=1.0, m=64, center=(0.0, 0.0)):
    th = np.arange(m) * 2 * np.pi / m
    return np.stack([center[0] + r * np.cos(th),
                     center[1] + r * np.sin(th)], axis=-1)


def report(num, name, ok, detail, elapsed, budget=None):
    line = f"[{num}/9] {name}: {'PASS' if ok else 'FAIL'} ({detail}, {elapsed:.1f}s)"
    print(line)
    assert ok, line
    if budget is not None:
        assert elapsed <= budget, f"{name} exceeded {budget}s budget: {elapsed:.1f}s"


def front_states(model, ring, t_grid, n_seeds=64, dt_step=1e-3):
    seeds = lift_front(model, BoundarySpline(ring), n_seeds=n_seeds)
    X0 = np.asarray([s.x for s in seeds])
    Y0 = np.asarray([s.y for s in seeds])
    XS, YS = propagate_states(model, 0.0, X0, Y0, t_grid, dt_step=dt_step,
                              project=True)
    return seeds, XS, YS


def test_1_minkowski_disk_closed_form():
    t0 = time.perf_counter()
    m = build_metric("minkowski", {"c": 1.0})
    t_grid = np.linspace(0.0, 1.0, 11)
    seeds, XS, YS = front_states(m, circle(1.0, 64), t_grid)
    lift_res = orthogonality_residual(m, seeds)
    radius_err = max(np.abs(np.linalg.norm(XS[k], axis=1) - (1.0 + tau)).max()
                     for k, tau in enumerate(t_grid))
    drift = max(np.abs(m.L_vec(tau, XS[k], np.ones(64), YS[k])).max()
                for k, tau in enumerate(t_grid))
    el = time.perf_counter() - t0
    ok = radius_err <= 1e-6 and lift_res <= 1e-10 and drift <= 1e-8
    report(1, "minkowski disk", ok,
           f"radius err {radius_err:.2e}, lift {lift_res:.2e}, drift {drift:.2e}",
           el, budget=5.0)


def test_2_constant_wind_translation():
    t0 = time.perf_counter()
    m = build_metric("zermelo", {"c": 1.0, "W": [0.3, 0.0]})
    t_grid = np.linspace(0.0, 1.0, 11)
    _, XS, _ = front_states(m, circle(1.0, 64), t_grid)
    err = max(np.abs(np.linalg.norm(XS[k] - np.array([0.3 * tau, 0.0]),
                                    axis=1) - (1.0 + tau)).max()
              for k, tau in enumerate(t_grid))
    el = time.perf_counter() - t0
    report(2, "constant wind", err <= 1e-6, f"center/radius err {err:.2e}",
           el, budget=5.0)


def test_3_quartic_lambda_one_reduces_to_minkowski():
    t0 = time.perf_counter()
    mk = build_metric("minkowski", {"c": 1.0})
    q1 = build_metric("quartic", {"c": 1.0, "lambda": 1.0})
    seeds = lift_front(mk, BoundarySpline(circle(1.0, 64)), n_seeds=64)
    X0 = np.asarray([s.x for s in seeds])
    Y0 = np.asarray([s.y for s in seeds])
    t_grid = np.linspace(0.0, 1.0, 11)
    XA, _ = propagate_states(mk, 0.0, X0, Y0, t_grid, dt_step=1e-3)
    XB, _ = propagate_states(q1, 0.0, X0, Y0, t_grid, dt_step=1e-3)
    gap = np.abs(XA - XB).max()
    # the independent lifts agree as well
    seeds_q = lift_front(q1, BoundarySpline(circle(1.0, 64)), n_seeds=64)
    lift_gap = max(np.linalg.norm(a.vx - b.vx) for a, b in zip(seeds, seeds_q))
    el = time.perf_counter() - t0
    ok = gap <= 1e-9 and lift_gap <= 1e-9
    report(3, "quartic lambda=1", ok,
           f"trace gap {gap:.2e}, lift gap {lift_gap:.2e}", el, budget=10.0)


def _oracle_comparison(model, ring, extents, t_end, dx):
    grid = LatticeSpec.from_extents(extents, dx)
    fld = earliest_arrival(model, ring, grid, dt_layer=dx)
    seeds = lift_front(model, BoundarySpline(ring), n_seeds=64)
    n = max(16, int(round(t_end / 0.05)))
    res = propagate(model, seeds, t_end=t_end, n_slices=n,
                    slice_times=np.linspace(0.0, t_end, n + 1))
    return compare_front_to_oracle(fld, res), fld, res


def test_4_oracle_two_sided_agreement():
    scenarios = [
        ("minkowski", build_metric("minkowski", {"c": 1.0}),
         [[-2, 2], [-2, 2]]),
        ("wind", build_metric("zermelo", {"c": 1.0, "W": [0.3, 0.0]}),
         [[-2, 2.2], [-2, 2]]),
    ]
    ok = True
    details = []
    total = 0.0
    for name, model, extents in scenarios:
        t0 = time.perf_counter()
        coarse, fld, _ = _oracle_comparison(model, circle(1.0, 64), extents,
                                            0.8, 0.02)
        fine, _, _ = _oracle_comparison(model, circle(1.0, 64), extents,
                                        0.8, 0.01)
        el = time.perf_counter() - t0
        total += el
        assert fld.grid.shape[1] == 201
        ratio = coarse["max"] / fine["max"]
        ok_here = (coarse["pass"] and coarse["max"] <= 4 * (0.02 + 0.02)
                   and fine["pass"] and fine["max"] <= 4 * (0.01 + 0.01)
                   and 2.0 / 1.5 <= ratio <= 2.0 * 1.5
                   and el <= 60.0)
        ok = ok and ok_here
        details.append(f"{name} max {coarse['max']:.3f}->{fine['max']:.3f} "
                       f"ratio {ratio:.2f}")
    report(4, "oracle two-sided", ok, "; ".join(details), total)


def test_5_degenerate_direction_structure():
    t0 = time.perf_counter()
    t_grid = np.linspace(0.0, 1.0, 11)
    cases = [
        (build_metric("minkowski", {"c": 1.0}), np.array([0.0, 0.0])),
        (build_metric("zermelo", {"c": 1.0, "W": [0.3, 0.0]}),
         np.array([0.3, 0.0])),
    ]
    worst_deg, worst_neg = 0.0, -np.inf
    for model, drift in cases:
        _, XS, YS = front_states(model, circle(1.0, 64), t_grid)
        for k, tau in enumerate(t_grid):
            centers = XS[k] - tau * drift
            u = centers / np.linalg.norm(centers, axis=1, keepdims=True)
            tan = np.stack([-u[:, 1], u[:, 0]], axis=-1)
            G = model.tensor_vec(tau, XS[k], np.ones(64), YS[k])
            N = np.concatenate([np.ones((64, 1)), YS[k]], axis=1)
            T = np.concatenate([np.zeros((64, 1)), tan], axis=1)
            B = np.stack([N, T], axis=-1)          # (64, 3, 2)
            M = np.einsum("nia,nij,njb->nab", B, G, B)
            eig = np.linalg.eigvalsh(M)            # ascending per sample
            worst_deg = max(worst_deg, float(np.abs(eig[:, 1]).max()))
            worst_neg = max(worst_neg, float(eig[:, 0].max()))
    el = time.perf_counter() - t0
    ok = worst_deg <= 1e-8 and worst_neg <= -1e-6
    report(5, "degenerate direction", ok,
           f"|deg| {worst_deg:.2e}, neg {worst_neg:.2e}", el)


def test_6_relift_flow_first_order():
    t0 = time.perf_counter()
    cf = CallableScalar(
        lambda t, x: 1.0 + 0.4 * np.sqrt(t + 0.01) + 0.1 * x[..., 0],
        lambda t, x: np.stack([np.full(x.shape[:-1], 0.2 / np.sqrt(t + 0.01)),
                               np.full(x.shape[:-1], 0.1),
                               np.zeros(x.shape[:-1])], axis=-1))
    m = build_metric("zermelo", {"c": cf})
    ring = circle(1.0, 64)
    sp = BoundarySpline(ring)
    seeds = lift_front(m, sp, s_params=sp.params)
    Y0 = np.asarray([s.y for s in seeds])
    errs = []
    for h in (0.1, 0.05, 0.025):
        _, track = relift_flow(m, ring, 0.0, 0.5, h, reseed=False)
        times = np.arange(track.shape[0]) * h
        Xg, _ = propagate_states(m, 0.0, ring, Y0, times, dt_step=1e-3)
        errs.append(float(np.linalg.norm(track - Xg, axis=-1).max()))
    orders = [float(np.log2(errs[k] / errs[k + 1])) for k in range(2)]
    el = time.perf_counter() - t0
    ok = (errs[0] > errs[1] > errs[2] and min(orders) >= 1.0
          and errs[0] < 0.05)
    report(6, "re-lift flow order", ok,
           "errs " + "/".join(f"{e:.2e}" for e in errs)
           + f", orders {orders[0]:.2f}/{orders[1]:.2f}", el)


def test_7_two_circle_merge():
    t0 = time.perf_counter()
    m = build_metric("minkowski", {"c": 1.0})
    rings = [circle(0.5, 64, (-1.0, 0.0)), circle(0.5, 64, (1.0, 0.0))]
    seeds = []
    for k, ring in enumerate(rings):
        seeds += lift_front(m, BoundarySpline(ring), n_seeds=64, loop=k,
                            index_offset=64 * k)
    res = propagate(m, seeds, t_end=1.0, n_slices=20,
                    slice_times=np.linspace(0.0, 1.0, 21))
    spacing = 0.05
    cut_ok = (res.first_cut_time is not None
              and abs(res.first_cut_time - 0.5) <= spacing + 1e-12)
    simple_ok = all(front_is_simple(sl) for sl in res.slices)
    grid = LatticeSpec.from_extents([[-2.2, 2.2], [-2.2, 2.2]], 0.02)
    fld = earliest_arrival(m, rings, grid, dt_layer=0.02)
    violations = 0
    for sl in res.slices:
        if res.first_cut_time is not None and sl.tau >= res.first_cut_time:
            violations += len(achronality_check(fld, sl)["violations"])
    el = time.perf_counter() - t0
    ok = cut_ok and simple_ok and violations == 0
    report(7, "two-circle merge", ok,
           f"first_cut {res.first_cut_time}, violations {violations}",
           el, budget=20.0)


def test_8_strong_wind_reachable_set():
    t0 = time.perf_counter()
    m = build_metric("zermelo", {"c": 1.0, "W": [2.0, 0.0]})
    ring = circle(0.1, 64)
    rep, fld, _ = _oracle_comparison(m, ring, [[-1.0, 1.6], [-0.9, 0.9]],
                                     0.4, 0.02)
    g = fld.grid
    iu = (round((-0.5 - g.origin[0]) / g.dx),
          round((0.0 - g.origin[1]) / g.dx))
    unreachable = bool(np.isinf(fld.times[iu]))
    el = time.perf_counter() - t0
    ok = unreachable and rep["pass"] and rep["max"] <= 4 * (0.02 + 0.02)
    report(8, "strong wind", ok,
           f"(-0.5,0) inf {unreachable}, max {rep['max']:.3f}, "
           f"mismatch depth {rep['front_only_depth']:.3f}", el)


def test_9_byte_determinism(tmp_path):
    t0 = time.perf_counter()
    spec = {
        "name": "determinism",
        "metric": {"family": "zermelo",
                   "params": {"c": 1.0, "W": [0.3, 0.0]}},
        "initial_set": [[float(x), float(y)] for x, y in circle(1.0, 64)],
        "t_grid": [0.2, 0.4, 0.6, 0.8],
        "oracle": {"dx": 0.1, "dt_layer": 0.1,
                   "extents": [[-2.0, 2.2], [-2.0, 2.0]]},
        "outputs": ["fronts_csv", "seeds_csv", "traces_csv", "report_json",
                    "svg"],
    }
    s = parse_scenario(spec)
    code_a, _ = run_scenario(s, str(tmp_path / "a"), use_oracle=True)
    code_b, _ = run_scenario(s, str(tmp_path / "b"), use_oracle=True)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = all((tmp_path / "a" / f).read_bytes()
               == (tmp_path / "b" / f).read_bytes() for f in files)
    el = time.perf_counter() - t0
    ok = code_a == 0 and code_b == 0 and same and len(files) >= 6
    report(9, "determinism", ok,
           f"{len(files)} files byte-identical: {same}", el)
