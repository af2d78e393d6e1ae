"""Effective-capacity region boundaries traced by sweeping the weight of A.

For every weight the optimal policy's (EC_A, EC_B) pair is a boundary
point.  Runs at theta_A = theta_B = 1 and again with theta_A = 10.
"""

from _common import base_config, parser, save
from twr_qos.experiments import SweepSpec, run_sweep

SCHEMES = ("direct", "three_phase", "two_phase")


def main() -> None:
    p = parser(__doc__.splitlines()[0])
    p.add_argument("--grid", type=float, nargs="+", default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    args = p.parse_args()
    for theta_a in (1.0, 10.0):
        cfg = base_config(args, protocols=SCHEMES, theta_a=theta_a)
        result = run_sweep(cfg, SweepSpec("weight_a", args.grid))
        print(f"theta_A = {theta_a:g}")
        print(f"{'w_A':>5} " + " ".join(f"{s:>24}" for s in SCHEMES))
        for v in result.grid:
            cells = []
            for s in SCHEMES:
                r = next(r for r in result.rows if r.value == v and r.scheme == s)
                cells.append(f"({r.ec_a:9.4f}, {r.ec_b:9.4f})")
            print(f"{v:5g} " + " ".join(f"{c:>24}" for c in cells))
        print("wrote", save(result, args.out, f"region_theta_a_{theta_a:g}"))


if __name__ == "__main__":
    main()
