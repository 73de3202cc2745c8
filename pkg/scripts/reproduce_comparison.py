"""Run the bundled four-state body-sensor scenario and print the comparison
table plus per-state sample allocations.

    python scripts/reproduce_comparison.py --out results/wban
    python scripts/reproduce_comparison.py --policies gfis2,dp,random,full-budget --seeds 3
"""

import argparse
import logging
import time

import numpy as np

from controlled_sensing.harness import bundled_scenario_path, load_config, run_comparison


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(bundled_scenario_path()))
    ap.add_argument("--policies", default="gfis2,dp,random,full-budget")
    ap.add_argument("--seeds", type=int, help="number of replicates (default: from config)")
    ap.add_argument("--out", help="directory for CSV output")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = load_config(args.config)
    seeds = list(range(args.seeds)) if args.seeds else None
    t0 = time.perf_counter()
    res = run_comparison(cfg, args.policies.split(","), args.out, seeds=seeds, workers=args.threads)
    print(f"\n{cfg.name}: {len(res.episodes[next(iter(res.episodes))])} episodes x {cfg.horizon + 1} steps "
          f"({time.perf_counter() - t0:.0f}s total)\n")

    print(f"{'policy':<13}{'MSE':>9}{'SE':>9}{'accuracy':>10}{'SE':>8}")
    for r in res.reports.values():
        print(f"{r.policy:<13}{r.mse:>9.4f}{r.mse_se:>9.4f}{r.detection_accuracy:>10.3f}{r.accuracy_se:>8.3f}")

    names = [s.name for s in cfg.sensors]
    labels = cfg.states.labels or tuple(str(i) for i in range(cfg.n_states))
    for r in res.reports.values():
        print(f"\nmean samples per step, {r.policy}")
        print(f"{'':<8}" + "".join(f"{n:>8}" for n in names))
        for lab, row in zip(labels, r.avg_allocation):
            print(f"{lab:<8}" + "".join(f"{v:>8.3f}" for v in np.nan_to_num(row)))


if __name__ == "__main__":
    main()
