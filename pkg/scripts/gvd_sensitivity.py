"""Case-1 error at u = 0.013 as a function of the GVD phase accumulated at the band edge."""
import argparse
from dataclasses import replace

from qwc.analysis import CaseConfig, setup_case, simulate_error


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--u", type=float, default=0.013)
    ap.add_argument("--phases", type=float, nargs="+", default=[0.0, 0.025, 0.05, 0.065, 0.1, 0.2])
    args = ap.parse_args()
    base = simulate_error(setup_case(CaseConfig()), args.u)
    print("phase_rad,beta,error,relative_change")
    for ph in args.phases:
        s = setup_case(replace(CaseConfig(), gvd_phase=ph))
        e = simulate_error(s, args.u) if ph > 0 else base
        print(f"{ph:g},{s.beta:.4e},{e:.6e},{e / base - 1:+.4f}")


if __name__ == "__main__":
    main()
