"""Where the alternating binomial identity fails, and why."""

from math import factorial

from beltrami_lab.identities import binomial_failures, binomial_identity


def general_binom(n: int, r: int) -> int:
    """Binomial coefficient as a polynomial in the upper index."""
    if r < 0:
        return 0
    p = 1
    for i in range(r):
        p *= n - i
    return p // factorial(r)


def main():
    fails = binomial_failures(12)
    print(f"{len(fails)} failing triples under the zero convention, e.g. {fails[:3]}")
    rescued = [t for t in fails
               if general_binom(t[0] + t[1] - 2 - t[2], t[1] - 1) == binomial_identity(*t)[1]]
    print(f"{len(rescued)} of them hold with the polynomial binomial")


if __name__ == "__main__":
    main()
