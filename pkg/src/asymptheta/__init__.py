"""Exact asymptotic expansions of weighted lattice-point distributions.

A piecewise quasi-polynomial m(k, lambda) on Z + Z^d defines, for each k >= 1,
the distribution Theta(m; k) = sum_lambda m(k, lambda) delta_{lambda / k}.  This
package evaluates these families, expands them in powers of k with periodic
coefficients, checks kernel and unicity properties, and pushes them forward
along lattice quotient maps, with exact rational and cyclotomic arithmetic.
"""

from .scalars import Cyclotomic, Periodic, Poly
from .bernoulli import zeta_bernoulli
from .polyhedra import Polyhedron
from .quasipoly import QuasiPolynomial, qp_character_decompose
from .piecewise import PiecewiseQP, ShiftedCone, equal_on_window, pqp_polarize, tangent_cone_map
from .distributions import AsymptoticSeries, RDist, ThetaSample, Window, theta_pair_poly, theta_sample
from .expansion import expand, leading_term
from .pushforward import (QuotientMap, properness_check, push_eval, push_reconstruct, push_series_pair,
                          push_theta)

__version__ = "0.1.0"

__all__ = [
    "Cyclotomic", "Periodic", "Poly", "zeta_bernoulli", "Polyhedron", "QuasiPolynomial", "qp_character_decompose",
    "PiecewiseQP", "ShiftedCone", "equal_on_window", "pqp_polarize", "tangent_cone_map", "AsymptoticSeries",
    "RDist", "ThetaSample", "Window", "theta_pair_poly", "theta_sample", "expand", "leading_term", "QuotientMap",
    "properness_check", "push_eval", "push_reconstruct", "push_series_pair", "push_theta",
]
