"""Joint sampling of branch probabilities for sibling groups.

Each sibling group is classified into one of four regimes:

* ``FixedRatios`` -- population-level evidence, the ratio is used as-is;
* ``SingleSurveyDirichlet`` -- one survey informs the group, sampled as a
  Dirichlet over the informed members plus a remainder component;
* ``MultiSurveyRejection`` -- independent surveys and at least one
  uninformed sibling: flat-prior Beta posteriors, redrawn all-or-none until
  they fit on the simplex;
* ``MultiSurveyImportance`` -- independent surveys informing every sibling:
  all but the last sibling are drawn as above, the last closes the simplex
  and its survey likelihood becomes an importance weight.

Importance weights are carried on the log scale.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import xlog1py, xlogy

from .errors import SamplingError
from .tree import Edge, PopTree

DEFAULT_MAX_ATTEMPTS = 10**6
_MAX_BATCH = 1 << 16


class Regime(str, enum.Enum):
    FIXED = "FixedRatios"
    DIRICHLET = "SingleSurveyDirichlet"
    REJECTION = "MultiSurveyRejection"
    IMPORTANCE = "MultiSurveyImportance"


class EvidenceKind(str, enum.Enum):
    SURVEY = "survey"
    POPULATION = "population"
    UNINFORMED = "uninformed"


@dataclass(frozen=True)
class Evidence:
    kind: EvidenceKind
    estimate: int | None = None
    total: int | None = None

    @classmethod
    def from_record(cls, rec) -> Evidence:
        if not rec.informed:
            return cls(EvidenceKind.UNINFORMED)
        kind = EvidenceKind.POPULATION if rec.population else EvidenceKind.SURVEY
        return cls(kind, rec.estimate, rec.total)


@dataclass(frozen=True)
class SiblingGroup:
    parent: str
    members: tuple[tuple[str, Evidence], ...]

    @classmethod
    def from_tree(cls, tree: PopTree, parent: str) -> SiblingGroup:
        return cls(
            parent,
            tuple(
                (c, Evidence.from_record(tree.records[c]))
                for c in tree.children[parent]
            ),
        )

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.members)


@dataclass(frozen=True)
class SamplingPlan:
    """Resolved sampling recipe for one sibling group.

    ``sampled`` lists the members that are drawn.  For the Dirichlet regime
    ``concentrations`` aligns with ``sampled`` and ``remainder`` (when > 0)
    is an extra, discarded component.  For the rejection regime ``betas``
    aligns with ``sampled``; for the importance regime it aligns with
    ``sampled[:-1]`` and the last member is the pivot whose survey is
    ``pivot_survey``.  ``fixed`` holds exact ratios of population-level
    members; sampled members share the mass left over by them.
    """

    parent: str
    regime: Regime
    sampled: tuple[str, ...] = ()
    concentrations: tuple[float, ...] = ()
    remainder: float = 0
    betas: tuple[tuple[float, float], ...] = ()
    pivot_survey: tuple[int, int] | None = None
    fixed: Mapping[str, float] = field(default_factory=dict)

    @property
    def pivot(self) -> str | None:
        if self.regime is Regime.IMPORTANCE:
            return self.sampled[-1]
        return None

    @property
    def budget(self) -> float:
        return 1.0 - math.fsum(self.fixed.values())

    @property
    def is_empty(self) -> bool:
        return not self.sampled and not self.fixed


@dataclass(frozen=True)
class GroupDraw:
    probabilities: dict[str, float]
    log_weight: float = 0.0

    @property
    def importance_weight(self) -> float:
        return math.exp(self.log_weight)


def classify_sibling_group(group: SiblingGroup) -> SamplingPlan:
    fixed = {}
    informed = []
    n_uninformed = 0
    for child, ev in group.members:
        if ev.kind is EvidenceKind.POPULATION:
            fixed[child] = ev.estimate / ev.total
        elif ev.kind is EvidenceKind.SURVEY:
            informed.append((child, ev))
        else:
            n_uninformed += 1
    if math.fsum(fixed.values()) > 1.0 + 1e-12:
        raise SamplingError(
            f"population ratios below {group.parent} sum to more than 1"
        )
    if not informed:
        return SamplingPlan(group.parent, Regime.FIXED, fixed=fixed)

    labels = tuple(c for c, _ in informed)
    totals = {ev.total for _, ev in informed}
    n_hits = sum(ev.estimate for _, ev in informed)
    if len(totals) == 1 and n_hits <= next(iter(totals)):
        (total,) = totals
        return SamplingPlan(
            group.parent,
            Regime.DIRICHLET,
            sampled=labels,
            concentrations=tuple(float(ev.estimate) for _, ev in informed),
            remainder=float(total - n_hits),
            fixed=fixed,
        )
    betas = tuple(
        (ev.estimate + 1.0, ev.total - ev.estimate + 1.0) for _, ev in informed
    )
    if n_uninformed:
        return SamplingPlan(
            group.parent, Regime.REJECTION, sampled=labels, betas=betas, fixed=fixed
        )
    pivot_ev = informed[-1][1]
    return SamplingPlan(
        group.parent,
        Regime.IMPORTANCE,
        sampled=labels,
        betas=betas[:-1],
        pivot_survey=(pivot_ev.estimate, pivot_ev.total),
        fixed=fixed,
    )


def _require(plan, regime):
    if plan.regime is not regime:
        raise ValueError(f"expected a {regime.value} plan, got {plan.regime.value}")


def sample_dirichlet_group(plan: SamplingPlan, rng: np.random.Generator) -> GroupDraw:
    _require(plan, Regime.DIRICHLET)
    alphas = list(plan.concentrations)
    if plan.remainder > 0:
        alphas.append(plan.remainder)
    if not alphas or min(alphas) <= 0:
        raise SamplingError(
            f"Dirichlet below {plan.parent} has a nonpositive concentration "
            f"{tuple(alphas)}"
        )
    x = rng.dirichlet(alphas)
    probs = dict(plan.fixed)
    budget = plan.budget
    for child, p in zip(plan.sampled, x):
        probs[child] = budget * float(p)
    return GroupDraw(probs)


def _draw_constrained(plan, a, b, rng, max_attempts, strict):
    """First tuple of independent Beta(a, b) draws whose sum fits the budget.

    Candidates are generated in growing batches; only the first accepted
    tuple in stream order is used, so results depend on the seed alone.
    """
    budget = plan.budget
    attempts = 0
    batch = 4
    while attempts < max_attempts:
        n = min(batch, max_attempts - attempts)
        draws = rng.beta(a, b, size=(n, len(a)))
        sums = draws.sum(axis=1)
        ok = sums < budget if strict else sums <= budget
        if ok.any():
            return draws[int(np.argmax(ok))]
        attempts += n
        batch = min(batch * 4, _MAX_BATCH)
    raise SamplingError(
        f"no feasible draw for the sibling group below {plan.parent} after "
        f"{attempts} attempts (empirical acceptance rate 0/{attempts}); "
        "the survey evidence is close to contradictory",
        acceptance_rate=0.0,
    )


def sample_rejection_group(
    plan: SamplingPlan,
    rng: np.random.Generator,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> GroupDraw:
    _require(plan, Regime.REJECTION)
    a = np.array([ab[0] for ab in plan.betas])
    b = np.array([ab[1] for ab in plan.betas])
    draw = _draw_constrained(plan, a, b, rng, max_attempts, strict=True)
    probs = dict(plan.fixed)
    probs.update(zip(plan.sampled, map(float, draw)))
    return GroupDraw(probs)


def sample_importance_group(
    plan: SamplingPlan,
    rng: np.random.Generator,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> GroupDraw:
    _require(plan, Regime.IMPORTANCE)
    probs = dict(plan.fixed)
    budget = plan.budget
    if plan.betas:
        a = np.array([ab[0] for ab in plan.betas])
        b = np.array([ab[1] for ab in plan.betas])
        draw = _draw_constrained(plan, a, b, rng, max_attempts, strict=False)
        probs.update(zip(plan.sampled[:-1], map(float, draw)))
        p_pivot = max(budget - math.fsum(draw), 0.0)
    else:
        p_pivot = budget
    probs[plan.pivot] = p_pivot
    e, n = plan.pivot_survey
    log_w = float(xlogy(e, p_pivot) + xlog1py(n - e, -p_pivot))
    return GroupDraw(probs, log_w)


def sample_group(
    plan: SamplingPlan,
    rng: np.random.Generator,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> GroupDraw:
    if plan.regime is Regime.FIXED:
        return GroupDraw(dict(plan.fixed))
    if plan.regime is Regime.DIRICHLET:
        return sample_dirichlet_group(plan, rng)
    if plan.regime is Regime.REJECTION:
        return sample_rejection_group(plan, rng, max_attempts)
    return sample_importance_group(plan, rng, max_attempts)


def plan_tree(tree: PopTree) -> dict[str, SamplingPlan]:
    """Sampling plans for every sibling group on an informative path."""
    needed = set()
    for leaf in tree.informative_leaves:
        node = leaf
        while node != tree.root:
            node = tree.records[node].parent
            needed.add(node)
    return {
        p: classify_sibling_group(SiblingGroup.from_tree(tree, p))
        for p in tree.parents
        if p in needed
    }


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for realization ``index`` of a run seeded ``seed``."""
    return np.random.default_rng([seed, index])


def sample_realization(
    tree: PopTree,
    plans: Mapping[str, SamplingPlan],
    rng: np.random.Generator,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> tuple[dict[Edge, float], float]:
    """Draw one joint set of branch probabilities.

    Returns the edge -> probability map and the realization's log importance
    weight (the sum of the group log weights).
    """
    probs: dict[Edge, float] = {}
    log_weight = 0.0
    for parent in tree.parents:
        plan = plans.get(parent)
        if plan is None:
            continue
        draw = sample_group(plan, rng, max_attempts)
        for child in tree.children[parent]:
            if child in draw.probabilities:
                probs[(parent, child)] = draw.probabilities[child]
        log_weight += draw.log_weight
    return probs, log_weight
