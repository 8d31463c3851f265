"""Closed-form moments of a path's back-calculated root estimate.

For a path whose edge probabilities are independent Beta variables,
``theta = D / prod(p_e)`` and its moments follow from the inverse moments
of the Beta distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.special import gammaln

from .errors import EstimationError
from .sampling import Regime, plan_tree
from .tree import PopTree, RootPath


@dataclass(frozen=True)
class AnalyticMoments:
    mean: float | None
    variance: float | None


def beta_inverse_moment(a: float, b: float, order: int) -> float | None:
    """E[p^-order] for p ~ Beta(a, b); None when it does not exist (a <= order)."""
    if a <= order:
        return None
    return math.exp(
        gammaln(a + b) + gammaln(a - order) - gammaln(a) - gammaln(a + b - order)
    )


def analytic_path_moments(
    path: RootPath, betas: Sequence[tuple[float, float]]
) -> AnalyticMoments:
    """Mean and variance of ``D_L / prod(p_e)`` along ``path``.

    The variance is ``E[theta^2] - E[theta]^2``.
    """
    if len(betas) != len(path.edges):
        raise ValueError("one (alpha, beta) pair per path edge is required")
    if path.count is None:
        raise ValueError(f"leaf {path.leaf} has no count")
    first = [beta_inverse_moment(a, b, 1) for a, b in betas]
    second = [beta_inverse_moment(a, b, 2) for a, b in betas]
    mean = None
    if all(m is not None for m in first):
        mean = path.count * math.prod(first)
    variance = None
    if mean is not None and all(m is not None for m in second):
        variance = path.count**2 * math.prod(second) - mean**2
    return AnalyticMoments(mean, variance)


def dirichlet_path_betas(tree: PopTree, path: RootPath) -> list[tuple[float, float]]:
    """Marginal Beta(alpha_i, alpha_T - alpha_i) of each edge on ``path``.

    Every group on the path must be a single-survey Dirichlet without
    population-level siblings.
    """
    plans = plan_tree(tree)
    betas = []
    for parent, child in path.edges:
        plan = plans.get(parent)
        if plan is None or plan.regime is not Regime.DIRICHLET or plan.fixed:
            raise EstimationError(
                f"group below {parent} is not a pure single-survey Dirichlet"
            )
        a_total = sum(plan.concentrations) + max(plan.remainder, 0)
        a = plan.concentrations[plan.sampled.index(child)]
        betas.append((a, a_total - a))
    return betas
