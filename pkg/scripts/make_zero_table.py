"""Regenerate the bundled critical-line zero table with mpmath.

    python3 scripts/make_zero_table.py 1000 > src/oscilla/data/zeros_to_1000.txt
"""
import sys

import mpmath

mpmath.mp.dps = 25


def main(height: float) -> None:
    print("# nontrivial zeta zeros on the critical line, ordinates only")
    print("# computed with mpmath.zetazero, 12 decimals")
    print(f"#complete_to {height:g}")
    n = 1
    while True:
        gamma = mpmath.zetazero(n).imag
        if gamma > height:
            break
        print(f"{float(gamma):.12f}")
        n += 1


if __name__ == "__main__":
    main(float(sys.argv[1]) if len(sys.argv) > 1 else 1000.0)
