"""Weighted effective capacity against a common QoS exponent."""

from _common import base_config, parser, save, table
from twr_qos.experiments import SweepSpec, run_sweep

SCHEMES = ("direct", "three_phase", "two_phase")


def main() -> None:
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--grid", type=float, nargs="+", default=[0.01, 0.1, 1, 10, 100])
    args = p.parse_args()
    result = run_sweep(base_config(args, protocols=SCHEMES), SweepSpec("theta", args.grid))
    print(table(result, SCHEMES))
    for scheme, a, b in result.monotonicity_violations(tol=1e-9):
        print(f"warning: {scheme} increases between theta = {a:g} and {b:g}")
    print("wrote", save(result, args.out, "theta_sweep"))


if __name__ == "__main__":
    main()
