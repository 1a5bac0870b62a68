"""Tabulate the S^2 x S^2 integrand against the stated product formula.

Prints the ratio of the computed value to the formula with both signs of the
1/a + 1/b term, which isolates the sign discrepancy.
"""
from wcsloop import sasaki as S


def main():
    print("a  b  p  computed  stated  with_minus_sign")
    for a, b in ((1.0, 1.0), (1.0, 2.0), (2.0, 3.0), (0.5, 4.0)):
        kd = S.kahler_point_data("s2xs2", a=a, b=b)
        for p in (1, 2, 3):
            got = S.lifted_integrand(kd.Rfull, S.J_ADAPTED, p)
            p2 = p * p
            minus = 0.6 * p2 * (-32 * p2 * (1 / a + 1 / b) + 192 * p2 * p2)
            print(f"{a:g}  {b:g}  {p}  {got:.12g}  {S.s2xs2_closed_form(p, a, b):.12g}  {minus:.12g}")


if __name__ == "__main__":
    main()
