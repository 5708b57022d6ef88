"""Why one fast-coarse loop plus one slow-fine loop beats two identical ones.

Tracking a previewed trail while absorbing unsignaled bumps is really two
control problems. Bumps arrive with no warning, so the loop that handles
them must be fast - its floor is (T_s + T_i + 1/(2^{R_low} - 1)) times the
bump amplitude. The trail is visible far ahead, so its loop can signal for
a very long time, erase its delay term against the warning, and buy a huge
rate - leaving only 1/(2^{R_high} - 1).

Give both loops the same delay budget and the same per-tick rate ("uniform")
and compare against splitting the budgets asymmetrically ("diverse"): a
short reflex loop and a long planning loop. The diverse split is never
worse, and its advantage is largest when latency is cheap to spend.

Run:  python3 demos/04_layered_diversity.py
"""

import numpy as np

from looplimits import (
    LayeredParams,
    LoopParams,
    compare_dess,
    dess_tradeoff_curve,
    layered_bound,
)


def main() -> None:
    lam, warning, epsilon = 0.1, 100.0, 1.0

    print("diverse vs uniform signaling-time allocation (lambda = 0.1,")
    print("trail warning = 100 ticks, bump amplitude ratio = 1):")
    print()
    for ti in (0.0, 10.0):
        cmp = compare_dess(lam, ti, warning, epsilon)
        d, u = cmp.diverse, cmp.uniform
        print(f"shared internal delay T_i = {ti:.0f}:")
        print(
            f"  diverse: reflex signals {d.t_low:6.2f} ticks ({d.rate_low:.3f} b/t), "
            f"planning {d.t_high:6.2f} ticks ({d.rate_high:.3f} b/t) -> {d.total:.4f}"
        )
        print(
            f"  uniform: both loops     {u.t_low:6.2f} ticks ({u.rate_low:.3f} b/t)"
            f"{'':22} -> {u.total:.4f}"
        )
        print(f"  improvement: {100 * cmp.improvement:.1f}%")
        print()

    print("sweeping the shared internal delay: diverse dominates everywhere")
    tis = np.arange(0.0, 20.0 + 1e-9, 4.0)
    print(f"{'T_i':>6} {'diverse':>9} {'uniform':>9} {'gain':>7}")
    for ti, cmp in zip(tis, dess_tradeoff_curve(lam, warning, tis, epsilon)):
        print(
            f"{ti:>6.1f} {cmp.diverse.total:>9.4f} {cmp.uniform.total:>9.4f}"
            f" {100 * cmp.improvement:>6.1f}%"
        )

    print()
    print("a fixed reference architecture, bound evaluated in closed form:")
    lp = LayeredParams(
        epsilon=1.0,
        reflex=LoopParams(signal_delay=1, internal_delay=10, rate=1),
        planning=LoopParams(signal_delay=1, internal_delay=10, warning=100, rate=5),
    )
    lb = layered_bound(lp)
    print(
        f"  reflex part {lb.reflex_part:.4f} + planning part {lb.planning_part:.4f}"
        f" = {lb.total:.6f}"
    )
    print("  (the simulated worst case of this architecture reaches ~12 of it;")
    print("   see the acceptance suite's layered-architecture criterion)")


if __name__ == "__main__":
    main()
