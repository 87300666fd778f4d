"""Solve a Beltrami equation and print the solver diagnostics."""

import numpy as np

from beltrami_lab.beltrami import BeltramiProblem, bump_coefficient, solve
from beltrami_lab.geometry import resolve_domain
from beltrami_lab.grid import make_grid


def main():
    dom = resolve_domain("smoothed_square")
    spec = make_grid(0, 2.5, 256)
    for amp in (0.3, 0.6, 0.9):
        prob = BeltramiProblem.from_function(bump_coefficient(amp, 0.9), dom, spec)
        sol = solve(prob)
        d = sol.diagnostics
        ratio = np.median(sol.trace.ratios())
        print(f"k={prob.k:.2f} K={prob.K:.2f} iterations={d['iterations']:3d} "
              f"median ratio={ratio:.3f} relative residual={d['beltrami_relative']:.2e}")


if __name__ == "__main__":
    main()
