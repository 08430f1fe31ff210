"""End-to-end command tests, run in process through main(argv)."""

import json
import math

import numpy as np
import pytest

from idlalab import full_lattice, read_aggregate, run_idla, write_aggregate
from idlalab.cli import main
from idlalab.config import file_digest, read_manifest


def _manifest(out_dir):
    return read_manifest(out_dir / "run-manifest.json")


def _manifest_dict(out_dir):
    with open(out_dir / "run-manifest.json") as fh:
        d = json.load(fh)
    d.pop("wall_clock_seconds")
    return d


FULL8 = ["--graph-kind", "full", "--dim", "2", "--half-width", "8"]


# -------------------------------------------------------------------- failures

def test_unknown_config_key_is_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"experiment": "idla", "bogus": 1}')
    assert main(["idla", "--config", str(cfg)]) == 2


def test_config_experiment_must_match_subcommand(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"experiment": "shape"}')
    assert main(["idla", "--config", str(cfg)]) == 2


def test_malformed_json_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert main(["idla", "--config", str(cfg)]) == 2


def test_oracle_hit_needs_target(tmp_path):
    rc = main(["oracle", *FULL8, "--quantity", "hit", "--radius", "3",
               "--out-dir", str(tmp_path)])
    assert rc == 2


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_too_many_particles_is_input_error(tmp_path):
    rc = main(["idla", *FULL8, "-n", "99999", "--out-dir", str(tmp_path)])
    assert rc == 2


def test_subcritical_conditioning_failure_exits_3(tmp_path):
    rc = main(["percolate", "--graph-kind", "percolation", "--dim", "2",
               "--p", "0.3", "--half-width", "20", "--graph-seed", "1",
               "--max-retries", "2", "--out-dir", str(tmp_path)])
    assert rc == 3


# ------------------------------------------------------------------ happy path

def test_idla_writes_outputs_and_manifest(tmp_path):
    out = tmp_path / "run"
    rc = main(["idla", *FULL8, "-n", "30", "--master-seed", "5",
               "--out-dir", str(out)])
    assert rc == 0
    agg_path = out / "aggregate.txt"
    svg_path = out / "aggregate.svg"
    assert agg_path.exists() and svg_path.exists()
    assert svg_path.read_text().lstrip().startswith("<?xml")

    man = _manifest(out)
    assert man.experiment == "idla"
    assert man.master_seed == 5
    listed = {o["path"]: o for o in man.outputs}
    assert set(listed) == {"aggregate.txt", "aggregate.svg"}
    for name, entry in listed.items():
        assert entry["sha256"] == file_digest(out / name)
        assert entry["bytes"] == (out / name).stat().st_size

    graph = full_lattice(2, 8)
    assert man.graph_hash == graph.graph_hash()
    agg = read_aggregate(graph, agg_path)
    assert agg.n == 30
    assert agg.settle[0] == graph.origin_index


def test_idla_rerun_is_digest_identical(tmp_path):
    argv = ["idla", *FULL8, "-n", "25", "--master-seed", "9"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out-dir", str(a)]) == 0
    assert main(argv + ["--out-dir", str(b)]) == 0
    da, db = _manifest_dict(a), _manifest_dict(b)
    da.pop("config_digest"), db.pop("config_digest")   # paths differ by design
    assert da["outputs"] == db["outputs"]
    assert (a / "aggregate.svg").read_bytes() == (b / "aggregate.svg").read_bytes()
    assert (a / "aggregate.txt").read_bytes() == (b / "aggregate.txt").read_bytes()


def test_percolate_then_oracle_on_saved_graph(tmp_path):
    pout = tmp_path / "perc"
    rc = main(["percolate", "--graph-kind", "percolation", "--dim", "2",
               "--p", "0.8", "--half-width", "10", "--graph-seed", "4",
               "--out-dir", str(pout)])
    assert rc == 0
    graph_file = pout / "graph.txt"
    assert graph_file.exists()

    oout = tmp_path / "oracle"
    rc = main(["oracle", "--graph-file", str(graph_file), "--quantity", "exit",
               "--radius", "4", "--out-dir", str(oout)])
    assert rc == 0
    lines = (oout / "exit.csv").read_text().splitlines()
    assert lines[0] == "# idlalab value-table v1"
    assert lines[3] == "x0,x1,value"
    assert len(lines) > 4
    man = _manifest(oout)
    assert man.graph_hash == _manifest(pout).graph_hash


def test_oracle_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "experiment": "oracle",
        "graph": {"kind": "full", "dim": 2, "half_width": 8},
        "params": {"quantity": "exit", "radius": 3},
        "output_dir": str(tmp_path / "from-config"),
    }))
    assert main(["oracle", "--config", str(cfg)]) == 0
    rows_cfg = (tmp_path / "from-config" / "exit.csv").read_text().splitlines()[4:]
    assert len(rows_cfg) == 25          # ball of radius 3 in the plane

    out2 = tmp_path / "flag"
    assert main(["oracle", "--config", str(cfg), "--radius", "2",
                 "--out-dir", str(out2)]) == 0
    rows_flag = (out2 / "exit.csv").read_text().splitlines()[4:]
    assert len(rows_flag) == 9          # flag shrinks the ball


def test_shape_ndjson_lines(tmp_path):
    out = tmp_path / "shape"
    rc = main(["shape", "--dim", "2", "--p", "0.8", "--radii", "6",
               "--eps", "0.3", "--replicas", "3", "--master-seed", "3",
               "--no-render", "--out-dir", str(out)])
    assert rc == 0
    lines = (out / "shape.ndjson").read_text().splitlines()
    assert len(lines) == 3
    seeds = set()
    for line in lines:
        d = json.loads(line)
        assert d["schema"] == "idlalab.shape-run/v1"
        assert d["radius"] == 6
        assert 0.0 <= d["coverage"] <= 1.0
        assert d["covered_count"] <= d["target_count"]
        seeds.add(d["graph_seed"])
    assert len(seeds) == 3


def test_lemmas_pass_and_write_reports(tmp_path, capsys):
    out = tmp_path / "lemmas"
    rc = main(["lemmas", "--graph-kind", "full", "--dim", "2",
               "--half-width", "20", "--scale", "3", "--out-dir", str(out)])
    assert rc == 0
    shown = capsys.readouterr().out
    assert shown.count("PASS") == 10 and "FAIL" not in shown
    lines = (out / "checks.ndjson").read_text().splitlines()
    assert len(lines) == 10


def test_lemmas_rejects_oversized_scale(tmp_path):
    rc = main(["lemmas", *FULL8, "--scale", "4", "--out-dir", str(tmp_path)])
    assert rc == 2                      # the 4r-ball does not fit the box


def test_density_csv(tmp_path):
    out = tmp_path / "density"
    rc = main(["density", *FULL8, "--radii", "2,4", "--kind", "ball",
               "--no-render", "--out-dir", str(out)])
    assert rc == 0
    lines = (out / "density.csv").read_text().splitlines()
    assert lines[0] == "# idlalab density v1"
    assert lines[2] == "radius,count,density"
    rows = [line.split(",") for line in lines[3:]]
    # full-lattice ball counts, normalized by the continuum disc area
    assert [int(c) for _, c, _ in rows] == [9, 45]
    for (r, c, d) in rows:
        assert abs(float(d) - int(c) / (math.pi * float(r) ** 2)) <= 1e-12


def test_render_saved_aggregate(tmp_path):
    g = full_lattice(2, 6)
    agg = run_idla(g, 12, master_seed=2)
    agg_path = tmp_path / "agg.txt"
    write_aggregate(agg, agg_path)
    out = tmp_path / "render"
    rc = main(["render", "--graph-kind", "full", "--dim", "2",
               "--half-width", "6", "--aggregate", str(agg_path),
               "--rings", "2,3.5", "--out-dir", str(out)])
    assert rc == 0
    svg = (out / "aggregate.svg").read_text()
    assert "<svg" in svg
    assert {o["path"] for o in _manifest(out).outputs} == {"aggregate.svg"}


def test_default_output_dir_env(monkeypatch, tmp_path):
    from idlalab.config import default_output_dir

    monkeypatch.setenv("IDLALAB_OUT", str(tmp_path / "envout"))
    assert default_output_dir() == str(tmp_path / "envout")
    monkeypatch.delenv("IDLALAB_OUT")
    assert default_output_dir() == "idlalab-out"
