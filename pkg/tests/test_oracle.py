import numpy as np
import pytest

from conewave import (
    BoundarySpline,
    ConfigurationError,
    LatticeSpec,
    WavefrontSlice,
    achronality_check,
    build_metric,
    compare_front_to_oracle,
    earliest_arrival,
    lift_front,
    propagate,
    relaxation_residual,
    sample_times,
    write_arrival_csv,
)


def circle(r=1.0, m=64, center=(0.0, 0.0)):
    th = np.arange(m) * 2 * np.pi / m
    return np.stack([center[0] + r * np.cos(th),
                     center[1] + r * np.sin(th)], axis=-1)


MK = build_metric("minkowski", {"c": 1.0})


def mk_field(dx=0.04):
    grid = LatticeSpec.from_extents([[-2, 2], [-2, 2]], dx)
    return earliest_arrival(MK, circle(1.0, 128), grid, dt_layer=dx)


def test_radial_arrival_matches_closed_form():
    fld = mk_field()
    nodes = fld.grid.nodes()
    R = np.linalg.norm(nodes, axis=-1)
    expected = np.maximum(R - 1.0, 0.0)
    interior = R < 1.9
    err = np.abs(fld.times[interior] - expected[interior]).max()
    assert err <= 2 * (0.04 + 0.04)
    assert np.isfinite(fld.times).all()


def test_arrival_is_an_exact_fixed_point():
    fld = mk_field()
    assert relaxation_residual(MK, fld) == 0.0


def test_refinement_self_consistency():
    coarse = mk_field(0.04)
    fine = mk_field(0.02)
    sub = fine.times[::2, ::2]
    R = np.linalg.norm(coarse.grid.nodes(), axis=-1)
    gap = np.abs((coarse.times - sub)[R < 1.9]).max()
    assert gap <= 2 * (0.04 + 0.04)


def test_sampling_interpolates_and_flags_outside():
    fld = mk_field()
    t = sample_times(fld, np.array([[1.5, 0.0], [5.0, 5.0]]))
    assert abs(t[0] - 0.5) <= 0.1
    assert np.isinf(t[1])


def test_achronality_flags_a_corrupted_seed():
    fld = mk_field(0.02)
    pos = circle(1.5, 64)
    clean = WavefrontSlice(tau=0.5, positions=pos,
                           active=np.ones(64, bool),
                           loops=np.zeros(64, int))
    rep = achronality_check(fld, clean)
    assert rep["pass"] and rep["violations"] == []

    bad = pos.copy()
    bad[7] *= (1.5 - 5 * 0.02) / 1.5  # pulled inside the swept region
    dirty = WavefrontSlice(tau=0.5, positions=bad,
                           active=np.ones(64, bool),
                           loops=np.zeros(64, int))
    repb = achronality_check(fld, dirty)
    assert not repb["pass"]
    assert repb["violations"] == [7]


def test_strong_wind_reachability():
    m = build_metric("zermelo", {"c": 1.0, "W": [2.0, 0.0]})
    grid = LatticeSpec.from_extents([[-1, 2], [-1, 1]], 0.02)
    fld = earliest_arrival(m, circle(0.1, 64), grid, dt_layer=0.02)
    iu = (round((-0.5 - grid.origin[0]) / grid.dx),
          round((0.0 - grid.origin[1]) / grid.dx))
    assert np.isinf(fld.times[iu])
    idn = (round((1.0 - grid.origin[0]) / grid.dx),
           round((0.0 - grid.origin[1]) / grid.dx))
    # closing speed |W| + c = 3 over the 0.9 gap from the disk edge
    assert abs(fld.times[idn] - 0.3) <= 2 * (0.02 + 0.02)


def test_front_comparison_passes_for_the_disk():
    fld = mk_field(0.04)
    seeds = lift_front(MK, BoundarySpline(circle(1.0, 64)), n_seeds=64)
    res = propagate(MK, seeds, t_end=0.8, n_slices=16,
                    slice_times=np.linspace(0.0, 0.8, 17))
    rep = compare_front_to_oracle(fld, res)
    assert rep["pass"], rep
    assert rep["max"] <= rep["tolerance"]
    assert rep["front_only"] == 0
    assert rep["compared"] > 1000


def test_layer_clipping_precondition():
    grid = LatticeSpec.from_extents([[-2, 2], [-2, 2]], 0.01)
    with pytest.raises(ConfigurationError):
        earliest_arrival(MK, circle(1.0, 64), grid, dt_layer=1.0,
                         neighborhood_radius=1)


def test_arrival_csv_header(tmp_path):
    fld = mk_field()
    out = tmp_path / "arrival.csv"
    write_arrival_csv(fld, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "x1,x2,time"
    assert len(lines) == 1 + fld.times.size
