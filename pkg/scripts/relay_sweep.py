"""Weighted effective capacity against relay position, symmetric and
asymmetric QoS exponents."""

from _common import base_config, parser, save, table
from twr_qos.experiments import SweepSpec, run_sweep

SCHEMES = ("three_phase", "two_phase")
CASES = {"sym": (1.0, 1.0), "asym": (100.0, 1.0)}


def main() -> None:
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--grid", type=float, nargs="+", default=[0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75])
    args = p.parse_args()
    for name, (ta, tb) in CASES.items():
        cfg = base_config(args, protocols=SCHEMES, theta_a=ta, theta_b=tb)
        result = run_sweep(cfg, SweepSpec("relay_distance", args.grid))
        print(f"theta_A = {ta:g}, theta_B = {tb:g}")
        print(table(result, SCHEMES))
        print("argmax:", ", ".join(f"{s} d = {result.argmax(s):g}" for s in SCHEMES), "\n")
        print("wrote", save(result, args.out, f"relay_sweep_{name}"))


if __name__ == "__main__":
    main()
