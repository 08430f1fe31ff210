"""Command line entry points.

Subcommands: percolate, idla, shape, lemmas, oracle, density, render.
Each writes its outputs plus a run-manifest.json with sha256 digests into
the output directory.  Exit codes: 0 success, 1 a check failed, 2 invalid
input or config, 3 resource, solver, or construction trouble.

A --config file (JSON, validated strictly) supplies defaults; explicit
flags override it.  `idlalab idla` with no arguments runs a demonstration
aggregation of 1000 particles on a percolation cluster at p = 0.7.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .checks import default_suite, write_reports
from .config import (
    RunManifest,
    build_graph,
    config_digest,
    default_output_dir,
    load_config,
)
from .errors import IdlalabError, InputError
from .idla import inner_radius, read_aggregate, run_idla, shape_experiment, write_aggregate
from .lattice import ball_vertices, density_profile, load_graph, save_graph
from .solver import exact_exit_time, exact_green, exact_hit_prob, write_value_csv


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("graph")
    g.add_argument("--graph-kind", choices=("full", "percolation", "counterexample"))
    g.add_argument("--dim", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--half-width", type=int)
    g.add_argument("--graph-seed", type=int)
    g.add_argument("--policy", choices=("strict", "resample"))
    g.add_argument("--max-retries", type=int)
    g.add_argument("--R0", type=int)
    g.add_argument("--scale-count", type=int)
    g.add_argument("--graph-file", help="load a saved graph instead of sampling")


_GRAPH_DEFAULTS = {
    "kind": "percolation", "dim": 2, "p": 0.7, "half_width": 40,
    "seed": 1, "policy": "resample", "max_retries": 64,
    "R0": 16, "scale_count": 1,
}

_FLAG_TO_KEY = {
    "graph_kind": "kind", "dim": "dim", "p": "p", "half_width": "half_width",
    "graph_seed": "seed", "policy": "policy", "max_retries": "max_retries",
    "R0": "R0", "scale_count": "scale_count",
}


def _graph_section(args, cfg) -> dict:
    base = dict(_GRAPH_DEFAULTS)
    if cfg and cfg.get("graph"):
        base.update(cfg["graph"])
    for flag, key in _FLAG_TO_KEY.items():
        v = getattr(args, flag, None)
        if v is not None:
            base[key] = v
    kind = base["kind"]
    if kind == "full":
        return {"kind": kind, "dim": base["dim"], "half_width": base["half_width"]}
    if kind == "percolation":
        return {
            "kind": kind, "dim": base["dim"], "p": base["p"],
            "half_width": base["half_width"], "seed": base["seed"],
            "policy": base["policy"], "max_retries": base["max_retries"],
        }
    return {"kind": kind, "R0": base["R0"], "scale_count": base["scale_count"]}


def _load_cfg(args, expected: str):
    if not getattr(args, "config", None):
        return None
    cfg = load_config(args.config)
    if cfg["experiment"] != expected:
        raise InputError(
            f"config is for experiment {cfg['experiment']!r}, not {expected!r}"
        )
    return cfg


def _materialize(args, cfg):
    if getattr(args, "graph_file", None):
        return load_graph(args.graph_file), {"kind": "file", "path": args.graph_file}
    section = _graph_section(args, cfg)
    return build_graph(section), section


def _setup(args, cfg):
    out_dir = args.out_dir or (cfg["output_dir"] if cfg else default_output_dir())
    os.makedirs(out_dir, exist_ok=True)
    seed = args.master_seed if args.master_seed is not None else (
        cfg["master_seed"] if cfg else 0
    )
    return out_dir, int(seed)


def _param(args, cfg, flag, key, default):
    v = getattr(args, flag, None)
    if v is not None:
        return v
    if cfg and key in cfg["params"]:
        return cfg["params"][key]
    return default


def _finish(experiment, seed, graph, graph_section, params, out_dir, outputs, t0):
    effective = {
        "experiment": experiment,
        "master_seed": seed,
        "graph": graph_section,
        "params": params,
        "output_dir": out_dir,
    }
    man = RunManifest(
        experiment, seed, config_digest(effective),
        graph.graph_hash() if graph is not None else "",
    )
    for p in outputs:
        man.add_output(p, out_dir)
        print(f"wrote {p}")
    man.wall_clock_seconds = time.time() - t0
    man.write(os.path.join(out_dir, "run-manifest.json"))


def _parse_coord(text):
    return tuple(int(t) for t in text.split(","))


def _parse_floats(text):
    return [float(t) for t in text.split(",")]


def cmd_percolate(args) -> int:
    t0 = time.time()
    cfg = _load_cfg(args, "percolate")
    out_dir, seed = _setup(args, cfg)
    graph, section = _materialize(args, cfg)
    path = os.path.join(out_dir, "graph.txt")
    save_graph(graph, path)
    print(
        f"{graph.n_vertices} vertices, dim {graph.dim}, "
        f"half width {graph.half_width}, origin degree {int(graph.degree[graph.origin_index])}"
    )
    _finish("percolate", seed, graph, section, {}, out_dir, [path], t0)
    return 0


def cmd_idla(args) -> int:
    t0 = time.time()
    cfg = _load_cfg(args, "idla")
    out_dir, seed = _setup(args, cfg)
    graph, section = _materialize(args, cfg)
    n = int(_param(args, cfg, "particles", "particles", 1000))
    agg = run_idla(graph, n, seed)
    path = os.path.join(out_dir, "aggregate.txt")
    write_aggregate(agg, path)
    outputs = [path]
    rho = inner_radius(graph, agg.settle)
    print(f"settled {agg.n} particles; inner radius {rho:.2f}")
    if not args.no_render:
        from .render import render_aggregate

        rings = _parse_floats(args.rings) if args.rings else ()
        fig = os.path.join(out_dir, "aggregate.svg")
        render_aggregate(agg, fig, rings=rings)
        outputs.append(fig)
    _finish("idla", seed, graph, section, {"particles": n}, out_dir, outputs, t0)
    return 0


def cmd_shape(args) -> int:
    t0 = time.time()
    cfg = _load_cfg(args, "shape")
    out_dir, seed = _setup(args, cfg)
    dim = int(_param(args, cfg, "dim", "dim", 2))
    p = float(_param(args, cfg, "p", "p", 0.8))
    radii = _param(args, cfg, "radii", "radii", None)
    radii = [int(r) for r in (_parse_floats(radii) if isinstance(radii, str) else (radii or [16, 32, 48]))]
    eps = float(_param(args, cfg, "eps", "eps", 0.25))
    replicas = int(_param(args, cfg, "replicas", "replicas", 20))
    result = shape_experiment(dim, p, radii, eps, replicas, seed)
    path = os.path.join(out_dir, "shape.ndjson")
    with open(path, "w") as fh:
        for run in result.runs:
            fh.write(json.dumps({
                "schema": "idlalab.shape-run/v1",
                "radius": run.radius, "replica": run.replica,
                "graph_seed": run.graph_seed, "n_particles": run.n_particles,
                "target_count": run.target_count,
                "covered_count": run.covered_count,
                "coverage": run.coverage,
            }, sort_keys=True) + "\n")
    outputs = [path]
    for R, frac in sorted(result.high_coverage_fraction().items()):
        mean_cov = float(np.mean([r.coverage for r in result.by_radius()[R]]))
        print(f"R={R}: mean coverage {mean_cov:.4f}, fraction >= 0.99: {frac:.2f}")
    if not args.no_render:
        from .render import render_coverage

        fig = os.path.join(out_dir, "coverage.svg")
        render_coverage(result, fig)
        outputs.append(fig)
    _finish(
        "shape", seed, None, {"kind": "percolation", "dim": dim, "p": p},
        {"radii": radii, "eps": eps, "replicas": replicas},
        out_dir, outputs, t0,
    )
    return 0


def cmd_lemmas(args) -> int:
    t0 = time.time()
    cfg = _load_cfg(args, "lemmas")
    out_dir, seed = _setup(args, cfg)
    graph, section = _materialize(args, cfg)
    scale = int(_param(args, cfg, "scale", "scale", 8))
    reports = default_suite(graph, seed, scale)
    path = os.path.join(out_dir, "checks.ndjson")
    write_reports(reports, path)
    for r in reports:
        word = "PASS" if r.passed else "FAIL"
        print(f"{word} {r.name}: margin {r.margin:.6g}")
    _finish("lemmas", seed, graph, section, {"scale": scale}, out_dir, [path], t0)
    return 0 if all(r.passed for r in reports) else 1


def cmd_oracle(args) -> int:
    t0 = time.time()
    cfg = _load_cfg(args, "oracle")
    out_dir, seed = _setup(args, cfg)
    graph, section = _materialize(args, cfg)
    quantity = _param(args, cfg, "quantity", "quantity", "green")
    R = float(_param(args, cfg, "radius", "radius", 8))
    domain = ball_vertices(graph, graph.coords[graph.origin_index], R)
    desc = f"ball(origin,{R:g})"
    path = os.path.join(out_dir, f"{quantity}.csv")
    if quantity == "green":
        src = _parse_coord(args.source) if args.source else graph.origin_index
        table = exact_green(graph, domain, src)
        write_value_csv(graph, table.domain, table.values, path,
                        "green", "exact", desc, source=table.source)
    elif quantity == "exit":
        dom, u = exact_exit_time(graph, domain)
        write_value_csv(graph, dom, u, path, "exit_time", "exact", desc)
    elif quantity == "hit":
        if not args.target:
            raise InputError("--target is required for the hit quantity")
        dom, h = exact_hit_prob(graph, domain, _parse_coord(args.target))
        write_value_csv(graph, dom, h, path, "hit_prob", "exact", desc,
                        source=graph.resolve(_parse_coord(args.target)))
    else:
        raise InputError(f"unknown quantity {quantity!r}")
    _finish("oracle", seed, graph, section,
            {"quantity": quantity, "radius": R}, out_dir, [path], t0)
    return 0


def cmd_density(args) -> int:
    t0 = time.time()
    cfg = _load_cfg(args, "density")
    out_dir, seed = _setup(args, cfg)
    graph, section = _materialize(args, cfg)
    radii = _param(args, cfg, "radii", "radii", "4,8,12,16")
    radii = _parse_floats(radii) if isinstance(radii, str) else radii
    kind = _param(args, cfg, "kind", "kind", "box")
    profile = density_profile(graph, graph.coords[graph.origin_index], radii, kind)
    path = os.path.join(out_dir, "density.csv")
    with open(path, "w") as fh:
        fh.write("# idlalab density v1\n")
        fh.write(f"# graph_hash={graph.graph_hash()} kind={kind}\n")
        fh.write("radius,count,density\n")
        for r, c, d in zip(profile.radii, profile.counts, profile.densities):
            fh.write(f"{r:g},{int(c)},{repr(float(d))}\n")
    outputs = [path]
    if not args.no_render:
        from .render import render_density

        fig = os.path.join(out_dir, "density.svg")
        render_density(profile, fig)
        outputs.append(fig)
    _finish("density", seed, graph, section,
            {"radii": list(radii), "kind": kind}, out_dir, outputs, t0)
    return 0


def cmd_render(args) -> int:
    t0 = time.time()
    cfg = _load_cfg(args, "render")
    out_dir, seed = _setup(args, cfg)
    graph, section = _materialize(args, cfg)
    agg = read_aggregate(graph, args.aggregate)
    from .render import render_aggregate

    rings = _parse_floats(args.rings) if args.rings else ()
    path = os.path.join(out_dir, "aggregate.svg")
    render_aggregate(agg, path, rings=rings)
    _finish("render", seed, graph, section,
            {"aggregate": args.aggregate}, out_dir, [path], t0)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idlalab",
        description="aggregation and random-walk experiments on percolation clusters",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--master-seed", type=int)
        p.add_argument("--out-dir")

    p = sub.add_parser("percolate", help="sample a cluster and save it")
    common(p)
    _add_graph_args(p)
    p.set_defaults(func=cmd_percolate)

    p = sub.add_parser("idla", help="grow an aggregate (demo with no arguments)")
    common(p)
    _add_graph_args(p)
    p.add_argument("-n", "--particles", type=int)
    p.add_argument("--rings", help="comma separated circle radii to draw")
    p.add_argument("--no-render", action="store_true")
    p.set_defaults(func=cmd_idla)

    p = sub.add_parser("shape", help="coverage experiment over fresh clusters")
    common(p)
    p.add_argument("--dim", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--radii", help="comma separated ball radii")
    p.add_argument("--eps", type=float)
    p.add_argument("--replicas", type=int)
    p.add_argument("--no-render", action="store_true")
    p.set_defaults(func=cmd_shape)

    p = sub.add_parser("lemmas", help="run the regularity check suite")
    common(p)
    _add_graph_args(p)
    p.add_argument("--scale", type=int, help="base radius r; balls up to 4r are used")
    p.set_defaults(func=cmd_lemmas)

    p = sub.add_parser("oracle", help="exact tables: green, exit, hit")
    common(p)
    _add_graph_args(p)
    p.add_argument("--quantity", choices=("green", "exit", "hit"))
    p.add_argument("--radius", type=float)
    p.add_argument("--source", help="coordinate like 0,0")
    p.add_argument("--target", help="coordinate like 1,0 (hit only)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("density", help="vertex density profile around the origin")
    common(p)
    _add_graph_args(p)
    p.add_argument("--radii", help="comma separated radii")
    p.add_argument("--kind", choices=("box", "ball"))
    p.add_argument("--no-render", action="store_true")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("render", help="render a saved aggregate to SVG")
    common(p)
    _add_graph_args(p)
    p.add_argument("--aggregate", required=True, help="aggregate file to draw")
    p.add_argument("--rings", help="comma separated circle radii to draw")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IdlalabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
