"""Beurling transform of the disk indicator by FFT and by direct quadrature."""

import numpy as np

from beltrami_lab.geometry import resolve_domain
from beltrami_lab.grid import make_grid
from beltrami_lab.singular_ops import beurling, tgamma_apply


def main():
    spec = make_grid(0, 4.0, 512)
    chi = resolve_domain("disk").indicator(spec, "sharp")
    z = spec.points
    r = np.abs(z)
    exact = np.where(r > 1, -1 / np.where(r > 0, z, 1) ** 2, 0)
    region = (r <= 0.7) | ((r >= 1.3) & (r <= 2))
    for name, b in (("fft", beurling(chi)), ("quadrature", tgamma_apply((-2, 0), chi) * (-1 / np.pi))):
        err = np.linalg.norm(b.values[region] - exact[region]) / np.linalg.norm(exact[region])
        print(f"{name:10s} relative L2 error {err:.3e}")


if __name__ == "__main__":
    main()
