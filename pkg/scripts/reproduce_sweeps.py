"""Error-vs-GVM sweeps for both GVM ratios, written as CSV under an output directory.

a.csv / c.csv: 1-F against u at compression 100 (ratio -2/3 and -1)
b.csv / d.csv: fitted and perturbative u_err against compression

    python scripts/reproduce_sweeps.py --out runs/sweeps --jobs 4
"""
import argparse
import json
import time
from dataclasses import replace
from pathlib import Path

from qwc.analysis import (
    CaseConfig,
    fit_u_err,
    sweep_error_vs_u,
    sweep_u_err_vs_compression,
    write_compression_csv,
    write_rows_csv,
)

RATIOS = {"a": -2.0 / 3.0, "c": -1.0}
COMPRESSIONS = (25, 50, 100, 200)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/sweeps")
    ap.add_argument("--jobs", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for u_panel, ratio in RATIOS.items():
        c_panel = chr(ord(u_panel) + 1)
        cfg = replace(CaseConfig(), ratio=ratio, jobs=args.jobs)
        t0 = time.perf_counter()
        rows = sweep_error_vs_u(cfg)
        write_rows_csv(rows, out / f"{u_panel}.csv")
        pts = sweep_u_err_vs_compression(cfg, COMPRESSIONS)
        write_compression_csv(pts, out / f"{c_panel}.csv")
        summary[f"ratio {ratio:.4g}"] = {
            "u_err_fit_r100": fit_u_err(rows).u_err_fit,
            "points": [
                {"compression": p.compression, "u_err_fit": p.u_err_fit, "u_err_pert": p.u_err_pert} for p in pts
            ],
            "seconds": round(time.perf_counter() - t0, 1),
        }
        print(f"ratio {ratio:+.4f}")
        for p in pts:
            print(f"  r={p.compression:5.0f}  fit {p.u_err_fit:.4f}  theory {p.u_err_pert:.4f}")
    (out / "summary.json").write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
