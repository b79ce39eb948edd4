"""Unit tests for experiment configs, result tables, and parallel sweeps."""

import json
import math

import numpy as np
import pytest

from quenchwalk import SYMMETRIC, ValidationError
from quenchwalk.harness import (
    EXPERIMENTS,
    SCHEMAS,
    ExperimentConfig,
    ResultTable,
    run_experiment,
    run_sweep,
)

REPRESENTATIVE = [
    ExperimentConfig(experiment="snapshot", t=50),
    ExperimentConfig(experiment="snapshot", x_d=5, t_r=10, t=50),
    ExperimentConfig(experiment="ratio-series", x_d=5, t_r=10, t_max=100),
    ExperimentConfig(experiment="saturation-sweep", x_d=10, t_r_grid=(20, 40)),
    ExperimentConfig(experiment="trlim-scan", x_d_grid=(5,)),
    ExperimentConfig(experiment="collapse", x_d_grid=(10,), t_r_grid=(500,)),
    ExperimentConfig(experiment="profile", x_d=10, t_r=20, t=100),
    ExperimentConfig(experiment="correlation", x_d=5, t_r=10, t_max=60, r_range=(-2, 2)),
    ExperimentConfig(experiment="classical-compare", x_d=10, t_r_grid=(100, 1000)),
    ExperimentConfig(experiment="snapshot", a0=1.0, b0=0.0, t=20, out="x.csv", workers=3),
]


# ---------------------------------------------------------------------------
# configs


def test_config_json_round_trip():
    for config in REPRESENTATIVE:
        assert ExperimentConfig.from_json(config.to_json()) == config


def test_config_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="frobnicate")
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="snapshot", workers=0)
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="saturation-sweep", x_d=10, t_r_grid=())
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="correlation", x_d=5, r_range=(3, -3))
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="ratio-series", x_d=5, t_r=100, t_max=50)
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="snapshot", x_d=500, t=100)
    with pytest.raises(ValidationError):
        ExperimentConfig(experiment="snapshot", t=10, a0=1.0, b0=1.0)  # not normalized


def test_config_rejects_unknown_fields():
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict({"experiment": "snapshot", "t": 10, "tmax": 99})


def test_digest_tracks_physics_not_bookkeeping():
    base = ExperimentConfig(experiment="snapshot", t=50)
    same = ExperimentConfig(experiment="snapshot", t=50, out="a.csv", workers=4)
    other = ExperimentConfig(experiment="snapshot", t=51)
    assert base.digest() == same.digest()
    assert base.digest() != other.digest()


def test_schema_registry_is_stable():
    # consumers parse these files; a schema change must be deliberate
    assert set(SCHEMAS) == set(EXPERIMENTS)
    assert SCHEMAS["snapshot"] == (("t", "int"), ("x", "int"), ("f", "real"))
    assert SCHEMAS["ratio-series"] == (("t", "int"), ("ratio", "real"), ("survival", "real"))
    assert SCHEMAS["saturation-sweep"] == (("t_r", "int"), ("sat", "real"), ("converged", "int"))
    assert SCHEMAS["trlim-scan"] == (("x_d", "int"), ("t_r_lim", "int"))
    assert SCHEMAS["collapse"] == (
        ("x_d", "int"), ("t_r", "int"), ("sat", "real"), ("k", "real"), ("converged", "int"))
    assert SCHEMAS["profile"] == (("r", "int"), ("ratio", "real"))
    assert SCHEMAS["correlation"] == (("r", "int"), ("t", "int"), ("g_ratio", "real"))
    assert SCHEMAS["classical-compare"] == (("t_r", "int"), ("ratio", "real"), ("correlation", "real"))


# ---------------------------------------------------------------------------
# experiments


def test_snapshot_experiment_free_walk():
    table = run_experiment(ExperimentConfig(experiment="snapshot", t=100))
    assert [n for n, _ in table.schema] == ["t", "x", "f"]
    xs = [row[1] for row in table.rows]
    assert xs == sorted(xs)
    assert sum(row[2] for row in table.rows) == pytest.approx(1.0, abs=1e-9)
    peak_x = max(table.rows, key=lambda row: row[2])[1]
    assert abs(abs(peak_x) - 100 / math.sqrt(2)) <= 3


def test_snapshot_experiment_quenched_walk_spills_past_detector():
    table = run_experiment(ExperimentConfig(experiment="snapshot", x_d=10, t_r=20, t=100))
    beyond = sum(f for _, x, f in table.rows if x > 10)
    assert beyond > 0.0


def test_ratio_series_experiment_rows():
    table = run_experiment(ExperimentConfig(experiment="ratio-series", x_d=5, t_r=10, t_max=99))
    ts = [row[0] for row in table.rows]
    assert all(t % 2 == 1 for t in ts)  # parity grid of an odd site
    early = [ratio for t, ratio, _ in table.rows if t <= 5]
    assert early and all(v == 1.0 for v in early)
    survs = [s for _, _, s in table.rows]
    assert all(0.0 < s <= 1.0 for s in survs)
    assert survs[-1] < 1.0


def test_classical_compare_experiment():
    table = run_experiment(
        ExperimentConfig(experiment="classical-compare", x_d=10, t_r_grid=(5, 100, 1000))
    )
    by_tr = {row[0]: row for row in table.rows}
    assert by_tr[5] == (5, 1.0, 1.0)  # removed before first contact
    for t_r in (100, 1000):
        _, ratio, corr = by_tr[t_r]
        assert ratio < 1.0
        assert corr == pytest.approx(ratio**2, rel=1e-12)


def test_profile_experiment_covers_both_sides():
    table = run_experiment(ExperimentConfig(experiment="profile", x_d=10, t_r=20, t=100))
    rs = [row[0] for row in table.rows]
    assert min(rs) < -50 and max(rs) > 50


def test_correlation_experiment_respects_r_range():
    table = run_experiment(
        ExperimentConfig(experiment="correlation", x_d=5, t_r=10, t_max=60, r_range=(-2, 2))
    )
    assert sorted({row[0] for row in table.rows}) == [-2, -1, 0, 1, 2]


def test_run_experiment_session_cache():
    cache: dict = {}
    config = ExperimentConfig(experiment="snapshot", t=30)
    first = run_experiment(config, cache=cache)
    second = run_experiment(config, cache=cache)
    assert second is first
    assert "wall_time" in first.metadata


# ---------------------------------------------------------------------------
# result tables


def test_csv_round_trip_is_exact():
    rng = np.random.default_rng(0)
    rows = [(int(i), float(v)) for i, v in enumerate(rng.standard_normal(200) * 10.0**rng.integers(-12, 12, 200))]
    rows.append((999, float("nan")))
    table = ResultTable(
        schema=(("i", "int"), ("v", "real")),
        rows=rows,
        metadata={"schema": "i:int,v:real", "note": "golden"},
    )
    back = ResultTable.from_csv(table.to_csv())
    assert back.schema == table.schema
    assert back.metadata["note"] == "golden"
    assert len(back.rows) == len(rows)
    for (i0, v0), (i1, v1) in zip(rows, back.rows):
        assert i0 == i1
        assert (math.isnan(v0) and math.isnan(v1)) or v0 == v1  # 17 digits round-trip


def test_csv_omits_volatile_metadata():
    table = run_experiment(ExperimentConfig(experiment="snapshot", t=10))
    text = table.to_csv()
    assert "wall_time" in table.metadata
    assert "wall_time" not in text
    assert text.startswith("# quenchwalk-result v1\n")


def test_csv_metadata_echoes_the_config():
    config = ExperimentConfig(experiment="snapshot", t=10)
    table = run_experiment(config)
    back = ResultTable.from_csv(table.to_csv())
    assert ExperimentConfig.from_json(back.metadata["config"]) == config


def test_csv_requires_a_header():
    with pytest.raises(ValidationError):
        ResultTable.from_csv("# only a comment\n")


def test_table_file_round_trip(tmp_path):
    table = run_experiment(ExperimentConfig(experiment="snapshot", t=10))
    path = tmp_path / "snap.csv"
    table.write(path)
    again = ResultTable.read(path)
    assert again.rows == table.rows


# ---------------------------------------------------------------------------
# sweeps


def test_sweep_output_is_identical_for_any_worker_count():
    configs = [
        ExperimentConfig(experiment="snapshot", t=40),
        ExperimentConfig(experiment="classical-compare", x_d=5, t_r_grid=(10, 100)),
        ExperimentConfig(experiment="ratio-series", x_d=5, t_r=10, t_max=80),
    ]
    serial = [t.to_csv() for t in run_sweep(configs, workers=1)]
    parallel = [t.to_csv() for t in run_sweep(configs, workers=2)]
    assert serial == parallel


def test_sweep_captures_per_cell_failures():
    configs = [
        ExperimentConfig(experiment="snapshot", t=20),
        ExperimentConfig(experiment="snapshot"),  # missing t: fails at run time
        ExperimentConfig(experiment="classical-compare", x_d=5, t_r_grid=(10,)),
    ]
    tables = run_sweep(configs, workers=1)
    assert tables[0].rows and tables[2].rows
    assert tables[1].rows == []
    assert "t: required" in tables[1].metadata["error"]


def test_sweep_rejects_empty_input():
    with pytest.raises(ValidationError):
        run_sweep([])
