"""Integrate the CS_5 form over Y^{p,q} and print the value with its rational fits."""
import argparse
import math

from wcsloop import ypq as Y


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=7)
    ap.add_argument("--q", type=int, default=3)
    ap.add_argument("--rel-tol", type=float, default=1e-10)
    args = ap.parse_args()
    params = Y.solve_params(args.p, args.q)
    rep = Y.integrate(params, Y.QuadratureSpec(rel_tol=args.rel_tol))
    print(f"a={params.a!r} ell={params.ell!r} y1={params.y1!r} y2={params.y2!r}")
    for h in rep.extra["history"]:
        print(f"orders={h['orders']} value={h['value']:.17g}")
    print(f"value/pi^3 ~ {rep.extra['value_over_pi3_rational']}")
    print(f"value/pi^4 ~ {rep.extra['value_over_pi4_rational']}")
    inner = rep.value / ((2 * math.pi) ** 3 * params.ell)
    print(f"double integral with C=3/5: {inner:.17g} ~ {Y.rational_guess(inner, 10000)}")


if __name__ == "__main__":
    main()
