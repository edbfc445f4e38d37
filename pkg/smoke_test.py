from fractions import Fraction

from smtrace_core.classnum import hurwitz_H
from smtrace_core.eisenstein import tilde_H_series
from smtrace_core.schema import CongruenceReport
from smtrace_core.zagier_basis import expand_gD

if __name__ == "__main__":
    g1 = expand_gD(1, 8)
    tH = tilde_H_series(11, 8)
    print(CongruenceReport.from_bool("anchor", {"H(3)": hurwitz_H(3)}, hurwitz_H(3) == Fraction(1, 3)).model_dump())
    print(CongruenceReport.from_bool("anchor", {"H(12)": hurwitz_H(12)}, hurwitz_H(12) == Fraction(4, 3)).model_dump())
    print(CongruenceReport.from_bool("anchor", {"B(1,3)": g1[3]}, g1[3] == 248).model_dump())
    print(CongruenceReport.from_bool("anchor", {"tH(3)": tH.coefficient(3)}, tH.coefficient(3) == Fraction(2, 3)).model_dump())
