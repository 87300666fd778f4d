"""Lipschitz domains, Whitney coverings, admissible chains and maximal functions."""

from .domain import (
    ContourQuadrature,
    LipschitzDomain,
    NormalField,
    build_domain,
    disk,
    perturbed_disk,
    polygon_domain,
    resolve_domain,
    smoothed_square_domain,
    square,
    unit_square,
)

__all__ = [
    "ContourQuadrature",
    "LipschitzDomain",
    "NormalField",
    "build_domain",
    "disk",
    "perturbed_disk",
    "polygon_domain",
    "resolve_domain",
    "smoothed_square_domain",
    "square",
    "unit_square",
]
