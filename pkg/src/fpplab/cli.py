"""Command-line entry point: ``fpplab generate | kappa | curve | experiment | replay``.

Settings resolve as command-line flag, then config file key, then built-in
default. Every command that writes files also writes a manifest holding the
resolved settings, and ``fpplab replay MANIFEST`` reruns it.

Exit status: 0 success, 1 usage error, 2 data error, 3 resource error,
4 experiment verdict "fail".
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FPPError, ParameterError
from .genmodels import OffspringLaw, sample_er, sample_gw, sample_gw_conditioned, sample_ust_colored, write_metadata
from .graphcore import RootedGraph, cycle_graph, kappa, path_graph, read_edgelist, star_graph, write_edgelist
from .harness import EXPERIMENTS, Ensemble, GraphSpec, plateau_detect, run_ensemble, threshold
from .randsrc import LawKind, RngStream, WeightLaw

log = logging.getLogger("fpplab")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RESOURCE, EXIT_FAIL = 0, 1, 2, 3, 4
OUTPUT_ENV = "FPPLAB_OUTPUT_DIR"

DEFAULTS = {
    "generate": {
        "model": None,
        "offspring": "poisson1",
        "depth": 100,
        "n": 1000,
        "lambda": 0.0,
        "size_cap": 10**7,
        "stream": 0,
        "out": None,
    },
    "kappa": {"graph": None, "root": None, "per_vertex": False},
    "curve": {
        "graph": None,
        "model": None,
        "offspring": "poisson1",
        "depth": 100,
        "n": 472,
        "lambda": 0.0,
        "extra_edge": False,
        "law": "pow",
        "alpha": 0.8,
        "t0": 1.0,
        "runs": 1000,
        "batches": 20,
        "mode": "fixed",
        "process": "spread",
        "out": None,
    },
    "experiment": {"id": None, "out": None, "set": []},
}
GLOBAL_DEFAULTS = {"seed": 0, "workers": 1, "output_dir": "."}


class UsageError(FPPError):
    exit_code = EXIT_USAGE


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fpplab", description="Heavy-tailed SI / first-passage spreading laboratory.")
    p.add_argument("--version", action="version", version=f"fpplab {__version__}")
    p.add_argument("--config", help="INI file; [fpplab] holds seed/workers/output_dir, [<command>] the command keys")
    p.add_argument("--output-dir", dest="output_dir", help=f"output directory (default ${OUTPUT_ENV} or .)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="worker processes for ensembles")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="sample a graph and write edge list plus metadata")
    g.add_argument("--model", choices=["gw", "gw-conditioned", "ust", "er", "path", "cycle", "star"])
    g.add_argument("--offspring")
    g.add_argument("--depth", type=int, help="N for gw-conditioned (condition Z_N > 0)")
    g.add_argument("--n", type=int)
    g.add_argument("--lambda", dest="lambda", type=float)
    g.add_argument("--size-cap", dest="size_cap", type=int)
    g.add_argument("--stream", type=int, help="stream index (default 0)")
    g.add_argument("--out", help="output prefix (default <model>)")

    k = sub.add_parser("kappa", help="bottleneck index of a graph file")
    k.add_argument("graph")
    k.add_argument("--root", type=int)
    k.add_argument("--per-vertex", dest="per_vertex", action="store_true", default=None)

    c = sub.add_parser("curve", help="spreading-curve ensemble to CSV with a plateau report")
    c.add_argument("--graph", help="edge-list file (fixed graph)")
    c.add_argument("--model", choices=["gw", "gw-conditioned", "ust", "er", "path", "cycle", "star"])
    c.add_argument("--offspring")
    c.add_argument("--depth", type=int)
    c.add_argument("--n", type=int)
    c.add_argument("--lambda", dest="lambda", type=float)
    c.add_argument("--extra-edge", dest="extra_edge", action="store_true", default=None)
    c.add_argument("--law", choices=[k.value for k in LawKind])
    c.add_argument("--alpha", type=float)
    c.add_argument("--t0", type=float)
    c.add_argument("--runs", type=int)
    c.add_argument("--batches", type=int)
    c.add_argument("--mode", choices=["fixed", "fresh"])
    c.add_argument("--process", choices=["spread", "delayed"])
    c.add_argument("--out", help="CSV path (default curve.csv)")

    e = sub.add_parser("experiment", help="run a theorem-level experiment and write its report")
    e.add_argument("id")
    e.add_argument("--out", help="report path (default <id>.json)")
    e.add_argument("--set", action="append", metavar="KEY=VALUE", help="config field override")
    for flag in ("alpha", "n", "runs", "kmax", "N"):
        e.add_argument(f"--{flag}", dest=f"x_{flag}")

    r = sub.add_parser("replay", help="rerun a command from its manifest")
    r.add_argument("manifest")
    return p


# ---------------------------------------------------------------------------
# resolution


def _coerce(value: str, like):
    if isinstance(like, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, list):
        return [v for v in value.split() if v]
    return value


def resolve(args: argparse.Namespace) -> dict:
    cp = configparser.ConfigParser()
    if args.config:
        if not cp.read(args.config):
            raise UsageError(f"cannot read config file {args.config}")
    res = {}
    for key, dflt in GLOBAL_DEFAULTS.items():
        val = getattr(args, key, None)
        if val is None and cp.has_option("fpplab", key):
            val = _coerce(cp.get("fpplab", key), dflt)
        if val is None and key == "output_dir":
            val = os.environ.get(OUTPUT_ENV)
        res[key] = dflt if val is None else val
    cmd = args.command
    section = {}
    for key, dflt in DEFAULTS[cmd].items():
        val = getattr(args, key, None)
        if val is None and cp.has_option(cmd, key):
            val = _coerce(cp.get(cmd, key), dflt if dflt is not None else "")
        section[key] = dflt if val is None else val
    if cmd == "experiment":
        extra = list(section.get("set") or [])
        for flag in ("alpha", "n", "runs", "kmax", "N"):
            v = getattr(args, f"x_{flag}", None)
            if v is not None:
                extra.append(f"{flag}={v}")
        section["set"] = extra
    res["command"] = cmd
    res[cmd] = section
    return res


# ---------------------------------------------------------------------------
# commands


def _out_dir(res) -> Path:
    d = Path(res["output_dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_manifest(res: dict, path: Path, outputs: list, extra: dict | None = None) -> None:
    doc = {"fpplab_version": __version__, "resolved": res, "outputs": [str(o) for o in outputs]}
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _model_graph(model: str, cfg: dict, stream: RngStream):
    """Returns (graph, metadata) for a generator model."""
    meta = {}
    if model in ("gw", "gw-conditioned"):
        law = OffspringLaw.parse(cfg["offspring"])
        if model == "gw":
            tree = sample_gw(law, stream, int(cfg["size_cap"]))
        else:
            tree = sample_gw_conditioned(law, int(cfg["depth"]), stream, size_cap=int(cfg["size_cap"]))
            meta["attempts"] = tree.attempts
            meta["rejections"] = tree.attempts - 1
        meta.update(size=tree.size, height=tree.height, truncated=tree.truncated)
        return tree.to_graph(), meta
    if model == "ust":
        r = sample_ust_colored(int(cfg["n"]), stream)
        meta.update(red=r.red_count, blue=r.blue_count, first_path_length=r.first_path_length, degenerate=r.degenerate)
        return r.graph, meta
    if model == "er":
        er = sample_er(int(cfg["n"]), float(cfg["lambda"]), stream)
        meta.update(
            p=er.p,
            cluster_size=er.size,
            surplus=er.surplus_of_largest,
            second_cluster_size=int(er.cluster_sizes[1]) if len(er.cluster_sizes) > 1 else 0,
        )
        return er.largest_cluster, meta
    n = int(cfg["n"])
    return {"path": path_graph, "cycle": cycle_graph, "star": star_graph}[model](n), meta


def cmd_generate(res: dict) -> int:
    cfg = res["generate"]
    if not cfg["model"]:
        raise UsageError("generate needs --model")
    stream = RngStream(res["seed"], int(cfg["stream"]))
    g, meta = _model_graph(cfg["model"], cfg, stream)
    out = _out_dir(res)
    prefix = cfg["out"] or cfg["model"]
    edges = out / f"{prefix}.edges"
    write_edgelist(g, edges)
    used = {
        "gw": ("offspring", "size_cap"),
        "gw-conditioned": ("offspring", "depth", "size_cap"),
        "ust": ("n",),
        "er": ("n", "lambda"),
    }.get(cfg["model"], ("n",))
    params = {k: cfg[k] for k in used}
    metaf = out / f"{prefix}.meta.json"
    write_metadata(metaf, cfg["model"], params, res["seed"], int(cfg["stream"]), n=g.n, m=g.m, **meta)
    _write_manifest(res, out / f"{prefix}.manifest.json", [edges, metaf], {"metadata": meta})
    print(f"wrote {edges} (n={g.n}, m={g.m})")
    return EXIT_OK


def cmd_kappa(res: dict) -> int:
    cfg = res["kappa"]
    g = read_edgelist(cfg["graph"])
    if cfg["root"] is not None:
        g = g.with_root(int(cfg["root"]))
    prof = kappa(g, per_vertex=bool(cfg["per_vertex"]))
    print(f"n={g.n} m={g.m} root={g.root}")
    print(f"kappa={prof.kappa_at_root}")
    if not prof.bridges:
        print("no bridges (2-edge-connected): kappa = n")
    else:
        print("bridge_edge root_side far_side")
        for e, a, b in prof.bridges:
            print(f"{e} {a} {b}")
    if cfg["per_vertex"]:
        kv = prof.kappa_per_vertex
        v = int(np.argmax(kv))
        print(f"argmax_vertex={v} max_kappa={int(kv[v])}")
        print("per_vertex=" + " ".join(map(str, kv.tolist())))
    return EXIT_OK


def cmd_curve(res: dict) -> int:
    cfg = res["curve"]
    law = WeightLaw(LawKind(cfg["law"]), float(cfg["alpha"]), float(cfg["t0"]))
    graph = None
    model = None
    if cfg["graph"]:
        graph = read_edgelist(cfg["graph"])
    elif cfg["model"]:
        params = {"n": cfg["n"], "N": cfg["depth"], "offspring": cfg["offspring"], "lambda": cfg["lambda"]}
        if cfg["extra_edge"]:
            params["extra_edge"] = True
        model = GraphSpec(cfg["model"], params)
    else:
        raise UsageError("curve needs --graph or --model")
    ens = Ensemble(
        law,
        int(cfg["runs"]),
        int(res["seed"]),
        graph=graph,
        model=model,
        mode=cfg["mode"],
        batches=int(cfg["batches"]),
        process=cfg["process"],
        workers=int(res["workers"]),
    )
    g = ens.fixed_graph() if ens.mode == "fixed" else None
    if g is not None:
        ens.graph = g
    cs = run_ensemble(ens)
    out = _out_dir(res)
    csv_path = out / (cfg["out"] or "curve.csv")
    cs.to_csv(csv_path)
    cv, sh = threshold("plateau.cv"), threshold("plateau.max_share")
    plateau = plateau_detect(cs, cv["value"], sh["value"])
    report = {
        "plateau_k": plateau if plateau is not None else "none",
        "thresholds": {"plateau.cv": cv, "plateau.max_share": sh},
    }
    if g is not None:
        report["kappa"] = kappa(g).kappa_at_root
        report["n"] = g.n
    rep_path = csv_path.with_suffix(".plateau.json")
    rep_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _write_manifest(res, csv_path.with_suffix(".manifest.json"), [csv_path, rep_path])
    print(f"wrote {csv_path}; first unstable k: {report['plateau_k']}")
    return EXIT_OK


def _experiment_config(name: str, sets: list, seed: int, workers: int):
    cls, _ = EXPERIMENTS[name]
    cfg = cls()
    names = {f.name: f for f in fields(cls)}
    aliases = {"n": ["n", "n_grid", "N"], "N": ["N", "N_grid"], "kmax": ["kmax"], "runs": ["runs"], "alpha": ["alpha", "alphas"]}
    for item in sets:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        target = next((a for a in aliases.get(key, [key]) if a in names), None)
        if target is None:
            raise UsageError(f"experiment {name} has no setting {key!r}")
        cur = getattr(cfg, target)
        if isinstance(cur, tuple):
            parts = [p for p in val.replace(",", " ").split() if p]
            kind = type(cur[0]) if cur else float
            setattr(cfg, target, tuple(kind(float(p)) if kind is int else kind(p) for p in parts))
        elif isinstance(cur, bool):
            setattr(cfg, target, _coerce(val, cur))
        elif isinstance(cur, int):
            setattr(cfg, target, int(float(val)))
        elif isinstance(cur, float):
            setattr(cfg, target, float(val))
        else:
            setattr(cfg, target, val)
    if "seed" in names:
        cfg.seed = int(seed)
    if "workers" in names:
        cfg.workers = int(workers)
    return cfg


def cmd_experiment(res: dict) -> int:
    cfg = res["experiment"]
    name = cfg["id"]
    if name not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {name!r}; choose from {', '.join(sorted(EXPERIMENTS))}")
    ecfg = _experiment_config(name, cfg["set"], res["seed"], res["workers"])
    _, fn = EXPERIMENTS[name]
    report = fn(ecfg)
    out = _out_dir(res)
    path = out / (cfg["out"] or f"{name}.json")
    report.write(path)
    _write_manifest(res, path.with_suffix(".manifest.json"), [path])
    print(f"{name}: {report.verdict} ({path})")
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"generate": cmd_generate, "kappa": cmd_kappa, "curve": cmd_curve, "experiment": cmd_experiment}


def cmd_replay(path: str, output_dir: str | None = None) -> int:
    try:
        doc = json.loads(Path(path).read_text())
        res = doc["resolved"]
        cmd = res["command"]
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read manifest {path}: {exc}") from None
    if doc.get("fpplab_version") != __version__:
        log.warning("manifest written by fpplab %s, running %s", doc.get("fpplab_version"), __version__)
    if output_dir is not None:
        res = dict(res, output_dir=output_dir)
    return COMMANDS[cmd](res)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "replay":
            out = args.output_dir or os.environ.get(OUTPUT_ENV)
            return cmd_replay(args.manifest, out)
        res = resolve(args)
        log.info("resolved settings: %s", json.dumps(res, sort_keys=True))
        return COMMANDS[args.command](res)
    except FPPError as exc:
        print(f"fpplab: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (KeyError, ValueError) as exc:
        print(f"fpplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
