"""Follow the Y^{p,q} integral and a pointwise sample as a -> 1."""
import argparse

from wcsloop import ypq as Y


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3, 1e-4])
    ap.add_argument("--rel-tol", type=float, default=1e-6)
    args = ap.parse_args()
    base = Y.solve_params(7, 3)
    print("eps  y2  y3  integral  integral/eps^2  f(1.2, mid)/eps^2  converged")
    for eps in args.eps:
        P = Y.with_a(base, 1 - eps)
        rep = Y.integrate(P, Y.QuadratureSpec(rel_tol=args.rel_tol, max_refinements=6))
        f = float(Y.integrand_f(P, 1.2, 0.5 * (P.y1 + P.y2)))
        print(f"{eps:g}  {P.y2:.10g}  {P.y3:.10g}  {rep.value:.10g}  {rep.value / eps ** 2:.6g}  "
              f"{f / eps ** 2:.6g}  {rep.extra['converged']}")


if __name__ == "__main__":
    main()
