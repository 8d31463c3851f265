"""Random tree generators shared by the property and acceptance tests."""

import itertools

import numpy as np

from wmmtree.tree import EdgeRecord, build_tree


def random_topology(rng, levels, kids=(2, 5), expand_p=0.35):
    """Parent -> children map with exactly ``levels`` levels.

    The first node of every level always branches so the depth is reached;
    other nodes branch with probability ``expand_p``.
    """
    counter = itertools.count(1)
    children = {}
    frontier = ["Z"]
    for _ in range(levels - 1):
        nxt = []
        for i, node in enumerate(frontier):
            if i == 0 or rng.random() < expand_p:
                k = int(rng.integers(kids[0], kids[1] + 1))
                children[node] = [f"N{next(counter)}" for _ in range(k)]
                nxt += children[node]
        frontier = nxt
    return children


def topology_tree(children):
    return build_tree(
        EdgeRecord(p, c) for p, kids in children.items() for c in kids
    )


def random_estimation_tree(rng, levels, z_true=1000.0, allow_importance=False,
                           modes=None):
    """A tree with survey evidence and leaf counts consistent with ``z_true``.

    Groups are either single-survey (one total shared by the informed
    members) or multi-survey with the last member left uninformed, so that
    no importance weighting is involved unless ``allow_importance``.
    ``modes`` restricts the group kinds drawn from.
    """
    if modes is None:
        modes = ["single", "multi", "all"] if allow_importance else ["single", "multi"]
    children = random_topology(rng, levels, kids=(2, 4), expand_p=0.4)
    records = {}
    truth = {}
    for parent, kids in children.items():
        probs = rng.dirichlet(np.full(len(kids), 6.0))
        truth.update(zip(kids, probs))
        mode = rng.choice(modes)
        if mode == "single":
            n = int(rng.integers(60, 300))
            hits = rng.multinomial(n, probs)
            hits = np.maximum(hits, 1)
            n = max(n, int(hits.sum()))
            informed = len(kids) - int(rng.integers(0, 2))
            for i, c in enumerate(kids):
                if i < informed:
                    records[c] = dict(estimate=int(hits[i]), total=n)
                else:
                    records[c] = {}
        else:
            last = len(kids) - (0 if mode == "all" else 1)
            for i, c in enumerate(kids):
                if i < last:
                    n = int(rng.integers(30, 300))
                    a = int(np.clip(rng.binomial(n, probs[i]), 1, n - 1))
                    records[c] = dict(estimate=a, total=n)
                else:
                    records[c] = {}

    parent_of = {c: p for p, kids in children.items() for c in kids}

    def informed_path(node):
        while node != "Z":
            if "estimate" not in records[node]:
                return False
            node = parent_of[node]
        return True

    def true_size(node):
        size = z_true
        while node != "Z":
            size *= truth[node]
            node = parent_of[node]
        return size

    leaves = [c for c in parent_of if c not in children]
    candidates = [leaf for leaf in leaves if informed_path(leaf)]
    if not candidates:
        return random_estimation_tree(rng, levels, z_true, allow_importance, modes)
    chosen = [leaf for leaf in candidates if rng.random() < 0.7] or candidates[:1]
    for leaf in chosen:
        records[leaf]["count"] = max(1, int(round(true_size(leaf))))
    return build_tree(
        EdgeRecord(parent_of[c], c, **records[c])
        for p, kids in children.items()
        for c in kids
    )
