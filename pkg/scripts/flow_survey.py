"""Run the flow oracle on every built-in example and print what it finds.

    python scripts/flow_survey.py [--seeds 200] [--samples 64]
"""

import argparse
import time

from mbs.flowlab import manifolds, oracle


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--samples", type=int, default=64)
    args = ap.parse_args()

    for name in ("s3", "s2xs1", "s2xt2"):
        ex = manifolds.get_example(name)
        t0 = time.perf_counter()
        dets = oracle.find_critical_orbits(ex, seeds=args.seeds)
        dt = time.perf_counter() - t0
        print(f"== {name}: {len(dets)} critical orbits in {dt:.2f} s (step {ex.default_step})")
        for d in dets:
            print(f"   {d.matched_label or '?':6s} f = {d.f_value:+.10f}  index {d.index}  "
                  f"|grad| {d.gradient_norm:.1e}  hits {d.cluster_size}")
        for orb in ex.analytic_orbits:
            if orb.index == 0:
                continue
            tally = oracle.connection_scan(ex, orb.label, samples=args.samples)
            hits = ", ".join(f"{k}: {v}" for k, v in tally.items() if v)
            print(f"   flow lines leaving {orb.label} (index {orb.index}) end at {hits}")


if __name__ == "__main__":
    main()
