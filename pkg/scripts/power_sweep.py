"""Weighted effective capacity against source power (relay 3 dB lower).

Runs the optimal and fixed-power variants of both relay protocols, the
weight-based partition and direct transmission at theta = 1, and prints
the adaptation gains at each power.
"""

from _common import base_config, parser, save, table
from twr_qos.experiments import SweepSpec, run_sweep

SCHEMES = (
    "direct", "three_phase", "three_phase_fixed", "two_phase", "two_phase_fixed", "two_phase_weight",
)


def main() -> None:
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--grid", type=float, nargs="+", default=[0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30])
    args = p.parse_args()
    result = run_sweep(base_config(args, protocols=SCHEMES), SweepSpec("power_db", args.grid))
    print(table(result, SCHEMES))
    obj = {(r.value, r.scheme): r.objective for r in result.rows}
    print("\n  dB   2P opt/fixed   3P opt/fixed   CSI/weight")
    for v in result.grid:
        g2 = obj[v, "two_phase"] / obj[v, "two_phase_fixed"] - 1
        g3 = obj[v, "three_phase"] / obj[v, "three_phase_fixed"] - 1
        gw = obj[v, "two_phase"] / obj[v, "two_phase_weight"] - 1
        print(f"{v:5g}   {g2:+12.2%}   {g3:+12.2%}   {gw:+10.2%}")
    print("wrote", save(result, args.out, "power_sweep"))


if __name__ == "__main__":
    main()
