"""Compare the lifted CP^2 integrand with its closed form over a range of p."""
from wcsloop import sasaki as S


def main():
    kd = S.kahler_point_data("cp2")
    print("p  lifted  closed_form  b-terms")
    for p in range(-3, 7):
        got = S.lifted_integrand(kd.Rfull, S.J_ADAPTED, p)
        bt = ", ".join(f"{b:.6g}" for b in S.bterms(kd.Rfull, kd.p1, p))
        print(f"{p:2d}  {got:.12g}  {S.cp2_closed_form(p):.12g}  [{bt}]")


if __name__ == "__main__":
    main()
