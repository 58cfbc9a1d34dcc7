"""Pilot runs behind the calibrated thresholds in src/fpplab/defaults.json.

Usage: python3 scripts/pilot_calibration.py [--quick] [SECTION ...]

Sections: plateau, q-window, residual, wilson, gw-tightness. Each prints the
statistics that a threshold was read from; --quick shrinks every run count
by 10 for a smoke run. Seeds here are disjoint from the acceptance seeds.
"""

import argparse
import math
import time

import numpy as np

from fpplab.genmodels import (
    OffspringLaw,
    delta_pmf,
    first_lerw_length,
    first_path_pmf,
    lerw_branch_size,
    rayleigh_ks,
    sample_conditioned_root_kappa,
)
from fpplab.graphcore import kappa, path_graph
from fpplab.harness import Ensemble, random_small_tree, residual_mean_check, run_ensemble
from fpplab.randsrc import RngStream, WeightLaw
from fpplab.spread import q_mean_curve

SEED = 900


def _q(x, qs=(0.0, 0.01, 0.5, 0.99, 1.0)):
    return np.quantile(x, qs).round(3).tolist()


def plateau(scale):
    """Batch-mean CV and batch-averaged max share: unstable step (path k=1) vs steps below kappa."""
    law = WeightLaw.power(0.8)
    M = max(10**4 // scale, 1000)
    path = []
    for s in range(20):
        cs = run_ensemble(Ensemble(law, M, SEED + s, graph=path_graph(20)))
        path.append((cs.inc_batch_cv[0], cs.inc_batch_max_share[0]))
    path = np.array(path)
    below = []
    for tr in range(50 // min(scale, 5)):
        g = random_small_tree(20, 200, RngStream(SEED, tr))
        k = kappa(g).kappa_at_root
        if k > 1:
            cs = run_ensemble(Ensemble(law, M, SEED + 100 + tr, graph=g))
            below.append(np.column_stack([cs.inc_batch_cv[: k - 1], cs.inc_batch_max_share[: k - 1]]))
    below = np.vstack(below)
    print(f"path k=1 over 20 seeds: cv {_q(path[:, 0])} share {_q(path[:, 1])}")
    print(f"tree steps below kappa ({len(below)}): cv {_q(below[:, 0])} share {_q(below[:, 1])}")
    for cv_t, sh_t in [(1.0, 0.27), (0.8, 0.25), (1.2, 0.3)]:
        hit = np.mean((path[:, 0] > cv_t) & (path[:, 1] > sh_t))
        false = np.mean((below[:, 0] > cv_t) & (below[:, 1] > sh_t))
        print(f"  cv>{cv_t} share>{sh_t}: path detected {hit:.2f}, false alarms below kappa {false:.4f}")


def q_window(scale):
    """Local slope of E[Q_k] on several k windows (conditional estimator)."""
    runs = 20000 // scale
    for a in (0.6, 0.8):
        t = time.time()
        c = q_mean_curve(WeightLaw.power(a), 4096, runs, RngStream(SEED, 1))
        for lo, hi in ((8, 128), (16, 128), (64, 4096), (256, 4096)):
            ks = 2 ** np.arange(int(math.log2(lo)), int(math.log2(hi)) + 1)
            cond = np.polyfit(np.log(ks), np.log(c.conditional[ks - 1]), 1)[0]
            raw = np.polyfit(np.log(ks), np.log(c.raw[ks - 1]), 1)[0]
            print(f"alpha={a} k in [{lo},{hi}]: slope {cond:.3f} (raw {raw:.3f}), 1/alpha = {1 / a:.3f}")
        print(f"  {time.time() - t:.0f} s")


def residual(scale):
    """Finite-variance Monte Carlo of E[min(X, Y - t) | Y > t] against quadrature."""
    for a in (0.55, 0.6, 0.8, 0.95):
        zs = [
            residual_mean_check(WeightLaw.power(a), t, 10**6 // scale, RngStream(SEED + s, 2).child(i))["z"]
            for s in range(3)
            for i, t in enumerate((10.0, 100.0))
        ]
        print(f"alpha={a}: |z| over seeds and t in (10, 100): {np.round(zs, 2).tolist()}")


def _tv(samples, pmf):
    counts = np.bincount(samples, minlength=len(pmf) + 1)[1:]
    return 0.5 * float(np.abs(counts / len(samples) - pmf).sum())


def wilson(scale):
    """TV and KS distances of the LERW laws at acceptance sample sizes."""
    runs = 10**5 // scale
    first = np.array([first_lerw_length(500, RngStream(SEED + 3, i)) for i in range(runs)])
    branch = np.array([lerw_branch_size(500, 20, RngStream(SEED + 4, i)) for i in range(runs)])
    print(f"TV first path n=500: {_tv(first, first_path_pmf(500)):.4f}")
    print(f"TV branch |C|=20, n=500: {_tv(branch, delta_pmf(500, 20)):.4f}")
    n = 10**4
    pmf = first_path_pmf(n)
    k = np.arange(1, n)
    cdf = np.cumsum(pmf)
    exact_ks = float(np.max(np.abs(cdf - (1 - np.exp(-(k**2) / (2 * n))))))
    lengths = np.array([first_lerw_length(n, RngStream(SEED + 5, i)) for i in range(20000 // scale)])
    print(f"Rayleigh KS n=1e4: exact law {exact_ks:.4f}, sample {rayleigh_ks(lengths, n):.4f}")


def gw_tightness(scale):
    """Percentiles of kappa at the root of conditioned Poisson(1) trees across N."""
    law = OffspringLaw("poisson1")
    for N in (50, 100, 200):
        k = np.array([sample_conditioned_root_kappa(law, N, RngStream(SEED + N, i)).kappa for i in range(10000 // scale)])
        print(f"N={N}: kappa percentiles 50/90/95/99 {np.percentile(k, [50, 90, 95, 99]).tolist()}")


SECTIONS = {"plateau": plateau, "q-window": q_window, "residual": residual, "wilson": wilson, "gw-tightness": gw_tightness}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("sections", nargs="*", help=f"any of {', '.join(SECTIONS)} (default all)")
    p.add_argument("--quick", action="store_true")
    args = p.parse_args()
    unknown = set(args.sections) - set(SECTIONS)
    if unknown:
        p.error(f"unknown sections: {', '.join(sorted(unknown))}")
    scale = 10 if args.quick else 1
    for name in args.sections or SECTIONS:
        print(f"== {name}", flush=True)
        SECTIONS[name](scale)


if __name__ == "__main__":
    main()
