"""Run the bearing-only landmark experiment in both control modes and show
why deliberate excitation matters.

A robot measures only the unit bearing to a fixed landmark.  The nominal
feedback drives the robot straight to the origin; the observability-seeking
mode spends a small, budgeted corrective input to keep the measurement window
informative.  This script runs both modes on the same noise realization and
prints the estimation error every 25 steps.
"""

import numpy as np

from obsmpc import MODE_ACTIVE, MODE_NOMINAL, reference_config, parse_config, run, summarize


def main():
    cfg = parse_config(reference_config())
    print(f"landmark p = {cfg.raw['scenario']['p_true']}, "
          f"initial estimate {cfg.raw['scenario']['p_hat_init']}, "
          f"noise radius {cfg.raw['noise']['nu']}\n")

    traces = {}
    for mode in (MODE_ACTIVE, MODE_NOMINAL):
        setup = cfg.with_updates(run={"mode": mode}).to_setup()
        traces[mode] = (setup, run(setup, steps=300, mode=mode, config_hash=cfg.hash()))

    print(f"{'step':>5} {'active err':>12} {'nominal err':>12} "
          f"{'active lam_min':>15} {'nominal lam_min':>16}")
    for t in range(0, 300, 25):
        a = traces[MODE_ACTIVE][1]
        n = traces[MODE_NOMINAL][1]
        print(f"{t:>5} {a.column('err')[t]:>12.4f} {n.column('err')[t]:>12.4f} "
              f"{a.column('lammin')[t]:>15.3e} {n.column('lammin')[t]:>16.3e}")

    print()
    for mode in (MODE_ACTIVE, MODE_NOMINAL):
        setup, tr = traces[mode]
        s = summarize(tr, setup)
        print(f"{mode:>22}: final error {s['final_error']:.4f}, "
              f"window degenerate (lam_min < 1e-3) on "
              f"{100 * s['lammin_below_1e3_rate']:.0f}% of steps, "
              f"estimate frozen on {s['frozen_steps']} degenerate windows")

    a = traces[MODE_ACTIVE][1]
    u_obs = np.hypot(a.column("uobs1"), a.column("uobs2"))
    print(f"\nexcitation spent by the active mode: mean ||u_obs|| = "
          f"{np.mean(u_obs):.4f} (budget cap {np.max(a.column('budget')):.4f})")


if __name__ == "__main__":
    main()
