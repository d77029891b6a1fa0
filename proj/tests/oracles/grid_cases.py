#!/usr/bin/env python3
"""Discount ladder reference values."""
from fractions import Fraction


def ladder(d, T, b):
    lo, hi = Fraction(2 * d), Fraction(d * T)
    etas = []
    v = lo
    while v < hi:
        etas.append(v)
        v *= b
    etas.append(hi)
    gammas = [Fraction(0)] + [e / (1 + e) for e in etas]
    return etas, gammas


def main():
    for (d, T, b) in ((2, 100, 2), (1, 1, 2), (1, 512, 2)):
        etas, gammas = ladder(d, T, Fraction(b))
        print(f"d{d}_T{T}_b{b}_etas =", [str(e) for e in etas])
        print(f"d{d}_T{T}_b{b}_gammas =", [str(g) for g in gammas])


if __name__ == "__main__":
    main()
