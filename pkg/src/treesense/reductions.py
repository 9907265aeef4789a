"""Subset-sum benchmark family: stump-ensemble generator and a DP ground truth.

Each instance (U, k) turns into n+1 Boolean features on the real line
(false = 0, true = 1, guard ``X < 1``): one stump per integer outputs the
integer when its feature is true, and a pivot stump outputs ``-k - 0.5`` /
``-k + 0.5`` as its feature is false/true.  The ensemble is sensitive to the
pivot feature at zero raw gap exactly when some subset of U sums to k; all
reachable raw scores sit at half-integers, so the non-strict zero-gap test
is exact.
"""

from dataclasses import dataclass

from .encoding import SensitivityQuery
from .model import Ensemble, Leaf, Node, Tree

__all__ = ["SubsetSumInstance", "gen_subsetsum_ensemble", "subsetsum_dp"]


@dataclass(frozen=True)
class SubsetSumInstance:
    values: tuple
    target: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if len(self.values) < 1:
            raise ValueError("instance needs at least one integer")
        if any(v <= 0 for v in self.values):
            raise ValueError("set elements must be positive integers")
        object.__setattr__(self, "target", int(self.target))


def gen_subsetsum_ensemble(inst: SubsetSumInstance):
    """Build the stump ensemble and its pivot-feature query for an instance."""
    n = len(inst.values)
    trees = []
    for i, u in enumerate(inst.values):
        trees.append(Tree(Node(i, 1.0, Leaf(0.0), Leaf(float(u))), class_id=1))
    pivot = n
    trees.append(
        Tree(
            Node(pivot, 1.0, Leaf(-inst.target - 0.5), Leaf(-inst.target + 0.5)),
            class_id=1,
        )
    )
    names = ["f%d" % i for i in range(n)] + ["f_prime"]
    ensemble = Ensemble(trees, num_classes=2, num_features=n + 1, feature_names=names)
    query = SensitivityQuery(features=frozenset([pivot]), raw_gap=0.0)
    return ensemble, query


def subsetsum_dp(inst: SubsetSumInstance, sum_budget: int = 10_000_000) -> bool:
    """Reachable-sums dynamic program; True when some subset sums to the target."""
    total = sum(inst.values)
    if total > sum_budget:
        raise ValueError("value sum %d exceeds budget %d" % (total, sum_budget))
    if inst.target < 0 or inst.target > total:
        return False
    reachable = 1  # bit i set <=> sum i reachable
    for u in inst.values:
        reachable |= reachable << u
    return bool((reachable >> inst.target) & 1)
