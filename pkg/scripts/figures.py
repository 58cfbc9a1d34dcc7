"""CSV data for the spreading-curve figures (plotting is left to any external tool).

Usage: python3 scripts/figures.py [OUT_DIR] [--seed S] [--runs M]

fig1a.csv  three runs on a Poisson(1) GW tree with about 472 vertices, and the
           same runs after adding one root edge (the tree weights are reused,
           only the extra edge gets a new draw)
fig1b.csv  three runs on the cycle with 472 vertices
fig4a.csv  20 runs from random roots with fixed weights on the largest ER
           cluster at lambda = 0, n = 6000
fig4b.csv  the same at lambda = 5, n = 1000
figures.json  sizes, kappa, surplus and the plateau detector output for an
           M-run ensemble on each fixed graph
"""

import argparse
import json
from pathlib import Path

import numpy as np

from fpplab.genmodels import OffspringLaw, add_root_edge, sample_er, sample_gw
from fpplab.graphcore import cycle_graph, kappa
from fpplab.harness import Ensemble, plateau_detect, run_ensemble
from fpplab.randsrc import RngStream, WeightLaw
from fpplab.spread import new_weights, run_spread

LAW = WeightLaw.power(0.8)


def write_curves(path: Path, columns: dict) -> None:
    names = list(columns)
    n = max(len(c) for c in columns.values())
    rows = ["k," + ",".join(names)]
    for k in range(n):
        vals = [repr(float(columns[c][k])) if k < len(columns[c]) else "" for c in names]
        rows.append(f"{k + 1}," + ",".join(vals))
    path.write_text("\n".join(rows) + "\n")


def tree_near(size: int, tol: int, stream: RngStream):
    law = OffspringLaw("poisson1")
    for i in range(10**6):
        t = sample_gw(law, stream.child(i), size_cap=size + tol + 1)
        if abs(t.size - size) <= tol:
            return t
    raise RuntimeError("no tree of the requested size")


def summary(g, runs: int, seed: int) -> dict:
    cs = run_ensemble(Ensemble(LAW, runs, seed, graph=g))
    k = plateau_detect(cs)
    return {"n": g.n, "m": g.m, "kappa": kappa(g).kappa_at_root, "plateau_k": k if k is not None else "none"}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out", nargs="?", default="figures")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--runs", type=int, default=2000, help="ensemble size for the plateau summaries")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    info = {}

    tree = tree_near(472, 10, RngStream(args.seed, 0))
    g = tree.to_graph()
    ge = add_root_edge(tree, RngStream(args.seed, 1))
    cols = {}
    for r in range(3):
        w = new_weights(g)
        cols[f"tree_run{r + 1}"] = run_spread(g, LAW, RngStream(args.seed, 10 + r), weights=w).times
        we = np.concatenate([w, [np.nan]])
        cols[f"tree_edge_run{r + 1}"] = run_spread(ge, LAW, RngStream(args.seed, 20 + r), weights=we).times
    write_curves(out / "fig1a.csv", cols)
    info["fig1a_tree"] = summary(g, args.runs, args.seed)
    info["fig1a_tree_edge"] = summary(ge, args.runs, args.seed)

    c = cycle_graph(472)
    write_curves(out / "fig1b.csv", {f"run{r + 1}": run_spread(c, LAW, RngStream(args.seed, 30 + r)).times for r in range(3)})
    info["fig1b_cycle"] = summary(c, args.runs, args.seed)

    for tag, lam, n in (("fig4a", 0.0, 6000), ("fig4b", 5.0, 1000)):
        er = sample_er(n, lam, RngStream(args.seed, 40 if lam == 0 else 41))
        h = er.largest_cluster
        w = new_weights(h)
        roots = RngStream(args.seed, 42).gen.integers(h.n, size=20)
        cols = {f"run{i + 1}_root{int(r)}": run_spread(h.with_root(int(r)), LAW, RngStream(args.seed, 50 + i), weights=w).times for i, r in enumerate(roots)}
        write_curves(out / f"{tag}.csv", cols)
        info[tag] = {"lambda": lam, "n": n, "cluster_size": h.n, "surplus": h.m - h.n + 1}

    (out / "figures.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    print(json.dumps(info, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
