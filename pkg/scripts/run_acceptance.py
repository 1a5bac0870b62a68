"""Run the acceptance criteria and print one line per criterion.

``--only 1 7`` restricts the run to the listed criterion numbers.
"""
import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

import test_acceptance  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--only", type=int, nargs="+", choices=range(1, len(test_acceptance.CHECKS) + 1))
    args = ap.parse_args()
    picked = args.only or range(1, len(test_acceptance.CHECKS) + 1)
    ok = [test_acceptance.CHECKS[n - 1]() for n in picked]
    print(f"{sum(ok)}/{len(ok)} criteria pass")
    return 0 if all(ok) else 1


if __name__ == "__main__":
    sys.exit(main())
