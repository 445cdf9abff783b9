"""Tabulate alpha and beta_{m,n} over dimension pairs, including the
exploratory range beyond N = 8, and write CSV/JSON."""

import argparse
from pathlib import Path

from yamabe_lab.export import write_beta_table
from yamabe_lab.ground_state import ShootOptions
from yamabe_lab.moments import beta_table, pairs_up_to


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-N", type=int, default=10)
    ap.add_argument("--grid", type=int, default=4096)
    ap.add_argument("--out", type=Path, default=Path("out/beta_sweep.csv"))
    args = ap.parse_args()

    rows = beta_table(pairs_up_to(args.max_N), ShootOptions(grid=args.grid))
    write_beta_table(rows, args.out, vars(args))
    for N in range(4, args.max_N + 1):
        sel = [r for r in rows if r.N == N and not r.reason]
        worst = max(r.beta_mn for r in sel)
        print(f"N = {N:2d}: {len(sel)} pairs, largest beta_mn = {worst:+.6f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
