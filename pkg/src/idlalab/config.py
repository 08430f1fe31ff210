"""Run configuration files and output manifests.

A run is described by a JSON object with a fixed set of sections; unknown
keys are rejected rather than ignored so a typo cannot silently change an
experiment.  Every command that writes files also writes a manifest with
the sha256 of each output, which is what makes reruns checkable: two runs
of the same config must produce identical digests (wall clock aside).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

from .errors import InputError
from .lattice import (
    ClusterGraph,
    PercolationConfig,
    build_counterexample,
    extract_cluster,
    full_lattice,
)

EXPERIMENTS = ("percolate", "idla", "shape", "lemmas", "oracle", "density", "render")

_TOP_KEYS = {"experiment", "master_seed", "graph", "params", "output_dir", "thresholds"}
_GRAPH_KEYS = {
    "full": {"kind", "dim", "half_width"},
    "percolation": {"kind", "dim", "p", "half_width", "seed", "policy", "max_retries"},
    "counterexample": {"kind", "R0", "scale_count"},
}
_THRESHOLD_KEYS = {"mc_sigmas", "bernoulli_sigmas"}


def default_output_dir() -> str:
    return os.environ.get("IDLALAB_OUT", "idlalab-out")


def validate_config(obj) -> dict:
    """Normalize a config object, rejecting unknown keys everywhere."""
    if not isinstance(obj, dict):
        raise InputError("config must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    if "experiment" not in obj:
        raise InputError("config needs an 'experiment' field")
    exp = obj["experiment"]
    if exp not in EXPERIMENTS:
        raise InputError(f"unknown experiment {exp!r}; pick one of {EXPERIMENTS}")
    out = {
        "experiment": exp,
        "master_seed": obj.get("master_seed", 0),
        "graph": obj.get("graph"),
        "params": obj.get("params", {}),
        "output_dir": obj.get("output_dir", default_output_dir()),
        "thresholds": obj.get("thresholds", {}),
    }
    if not isinstance(out["master_seed"], int):
        raise InputError("master_seed must be an integer")
    if not isinstance(out["params"], dict):
        raise InputError("params must be an object")
    if not isinstance(out["output_dir"], str):
        raise InputError("output_dir must be a string")
    th = out["thresholds"]
    if not isinstance(th, dict):
        raise InputError("thresholds must be an object")
    bad = set(th) - _THRESHOLD_KEYS
    if bad:
        raise InputError(f"unknown threshold keys: {sorted(bad)}")
    g = out["graph"]
    if g is not None:
        if not isinstance(g, dict) or "kind" not in g:
            raise InputError("graph section needs a 'kind'")
        kind = g["kind"]
        if kind not in _GRAPH_KEYS:
            raise InputError(f"unknown graph kind {kind!r}")
        bad = set(g) - _GRAPH_KEYS[kind]
        if bad:
            raise InputError(f"unknown graph keys for kind {kind!r}: {sorted(bad)}")
    return out


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from None
    return validate_config(obj)


def config_digest(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def build_graph(graph_cfg: dict) -> ClusterGraph:
    """Materialize the graph section of a config."""
    if graph_cfg is None:
        raise InputError("this experiment needs a graph section")
    kind = graph_cfg["kind"]
    if kind == "full":
        return full_lattice(int(graph_cfg["dim"]), int(graph_cfg["half_width"]))
    if kind == "percolation":
        cfg = PercolationConfig(
            int(graph_cfg["dim"]),
            float(graph_cfg["p"]),
            int(graph_cfg["half_width"]),
            int(graph_cfg.get("seed", 0)),
        )
        return extract_cluster(
            cfg,
            policy=graph_cfg.get("policy", "resample"),
            max_retries=int(graph_cfg.get("max_retries", 64)),
        )
    return build_counterexample(
        int(graph_cfg["R0"]), int(graph_cfg.get("scale_count", 1))
    )


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    experiment: str
    master_seed: int
    config_digest: str
    graph_hash: str = ""
    outputs: list = field(default_factory=list)
    wall_clock_seconds: float = 0.0

    def add_output(self, path, base_dir) -> None:
        rel = os.path.relpath(path, base_dir)
        self.outputs.append(
            {
                "path": rel,
                "sha256": file_digest(path),
                "bytes": os.path.getsize(path),
            }
        )

    def write(self, path) -> None:
        payload = {
            "schema": "idlalab.run-manifest/v1",
            "experiment": self.experiment,
            "master_seed": self.master_seed,
            "config_digest": self.config_digest,
            "graph_hash": self.graph_hash,
            "outputs": sorted(self.outputs, key=lambda o: o["path"]),
            "wall_clock_seconds": self.wall_clock_seconds,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_manifest(path) -> RunManifest:
    with open(path) as fh:
        d = json.load(fh)
    if d.get("schema") != "idlalab.run-manifest/v1":
        raise InputError(f"unknown manifest schema {d.get('schema')!r}")
    return RunManifest(
        d["experiment"],
        d["master_seed"],
        d["config_digest"],
        d.get("graph_hash", ""),
        d.get("outputs", []),
        d.get("wall_clock_seconds", 0.0),
    )
