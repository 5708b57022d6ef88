"""Where the error floor of a control loop comes from.

A loop that senses a disturbance, signals it through a channel, and acts on
it pays for two resources: the time the signal spends in flight (delay) and
the resolution the channel can afford (rate). Each unit of total delay T
lets a unit-bounded disturbance accumulate; a rate of R bits per tick leaves
a quantization residue of 1/(2^R - 1). The worst-case tracking error of the
best possible controller is exactly the sum of the two terms:

    sup |x|  =  max(0, T)  +  1/(2^R - 1)

Advanced warning (preview) subtracts from T, and once T goes negative the
delay term vanishes entirely: seeing the future earlier than you need it
buys nothing more. This script prints the floor across a grid and shows the
stochastic (mean-square) floor next to it, which swaps the rate term for
1/(2^{2R} - 1).

Run:  python3 demos/01_speed_accuracy_floor.py
"""

from looplimits import LoopParams, stochastic_bound, worst_case_bound


def main() -> None:
    delays = [-4, -2, 0, 2, 4, 8]
    rates = [0.5, 1, 2, 4, 8]

    corner = "T \\ R"
    print("worst-case floor  max(0,T) + 1/(2^R - 1)")
    print(f"{corner:>6} " + " ".join(f"{r:>9}" for r in rates))
    for t in delays:
        row = [worst_case_bound(LoopParams.from_total(t, r)).total for r in rates]
        print(f"{t:>6} " + " ".join(f"{v:9.4f}" for v in row))

    print()
    print("the same grid, split into its delay and rate parts at R = 1:")
    for t in delays:
        dec = worst_case_bound(LoopParams.from_total(t, 1.0))
        print(
            f"  T = {t:+3d}:  delay part {dec.delay_error:6.3f}"
            f"  +  rate part {dec.rate_error:6.3f}  =  {dec.total:6.3f}"
        )

    print()
    print("mean-square floor (per unit disturbance variance), same delays:")
    print(f"{corner:>6} " + " ".join(f"{r:>9}" for r in rates))
    for t in delays:
        row = [stochastic_bound(LoopParams.from_total(t, r)).total for r in rates]
        print(f"{t:>6} " + " ".join(f"{v:9.4f}" for v in row))

    print()
    print("Notes:")
    print(" * negative T (preview beyond latency) never helps beyond zeroing the")
    print("   delay term - compare the T = -4 and T = -2 rows.")
    print(" * the stochastic rate term decays twice as fast in R: resolution is")
    print("   worth more against noise than against an adversary.")


if __name__ == "__main__":
    main()
