"""Shared builders for the test suite: hand models and seeded random ensembles."""

import random

import pytest

from treesense import Dataset, build_guard_index, load_model


def leaf(v):
    return {"leaf": v}


def split(feature, threshold, yes, no):
    return {"feature": feature, "threshold": threshold, "yes": yes, "no": no}


def stump_model(feature=0, threshold=0.5, yes=1.0, no=-1.0, num_features=1):
    return load_model({
        "num_features": num_features,
        "num_classes": 2,
        "base_score": 0.0,
        "trees": [{"class_id": 1, "root": split(feature, threshold, leaf(yes), leaf(no))}],
    })


def two_tree_fixture(vals, c1=5.0, c2=2.0, c3=7.0, c4=3.0):
    """The two-tree structural fixture: guards f7<c1, f4<c2, f9<c3, f9<c4 (c4 < c3).

    ``vals[0..3]`` are tree-1 leaves (no/no, no/yes, yes/no, yes/yes order of
    the original figure), ``vals[4..7]`` tree-2 leaves.
    """
    t1 = {"class_id": 1, "root": split(7, c1,
                                       split(9, c3, leaf(vals[3]), leaf(vals[2])),
                                       split(4, c2, leaf(vals[1]), leaf(vals[0])))}
    t2 = {"class_id": 1, "root": split(7, c1,
                                       split(9, c3, leaf(vals[7]), leaf(vals[6])),
                                       split(9, c4, leaf(vals[5]), leaf(vals[4])))}
    return load_model({"num_features": 10, "num_classes": 2, "base_score": 0.0,
                       "trees": [t1, t2]})


def random_ensemble(rng, max_trees=5, max_depth=3, num_features=6, max_cuts=4,
                    num_classes=2, with_base=False):
    """A random well-formed model over small per-feature threshold grids."""
    grids = {
        f: sorted(round(rng.uniform(-4.0, 4.0), 2) for _ in range(rng.randint(1, max_cuts)))
        for f in range(num_features)
    }

    def gen(depth):
        if depth == 0 or rng.random() < 0.25:
            return leaf(round(rng.uniform(-2.0, 2.0), 3))
        f = rng.randrange(num_features)
        return split(f, rng.choice(grids[f]), gen(depth - 1), gen(depth - 1))

    n_trees = rng.randint(1, max_trees)
    trees = []
    for t in range(n_trees):
        cid = 1 if num_classes == 2 else t % num_classes
        root = gen(max_depth)
        trees.append({"class_id": cid, "root": root})
    base = round(rng.uniform(-0.5, 0.5), 3) if with_base and rng.random() < 0.3 else 0.0
    return load_model({"num_features": num_features, "num_classes": num_classes,
                       "base_score": base, "trees": trees})


def random_dataset(rng, gi, num_features, n_rows, spread=1.5):
    """Rows scattered around the guard cuts so intervals get uneven mass."""
    rows = []
    for _ in range(n_rows):
        row = []
        for f in range(num_features):
            if gi.is_guarded(f):
                cuts = gi.cuts(f)
                center = rng.choice(cuts)
                row.append(center + rng.uniform(-spread, spread))
            else:
                row.append(rng.uniform(-2, 2))
        rows.append(row)
    return Dataset(rows)


def leaf_pattern(e, x):
    """Tuple of reached leaf ids, one per tree, by plain traversal."""
    out = []
    for tree in e.trees:
        node = tree.root
        while not hasattr(node, "value"):
            node = node.yes if x[node.feature] < node.threshold else node.no
        out.append(node.leaf_id)
    return tuple(out)


@pytest.fixture
def rng():
    return random.Random(20240817)


@pytest.fixture
def fixture_model():
    return two_tree_fixture([-1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])


@pytest.fixture
def fixture_gi(fixture_model):
    return build_guard_index(fixture_model)
