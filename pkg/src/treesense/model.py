"""Tree-ensemble representation, model-file ingestion, evaluation, and guard indexing.

The canonical model is a set of binary decision trees with strict ``X_f < tau``
guards (true branch = ``yes``) and scalar leaves.  Binary classifiers sum all
leaf outputs into a single signed score; multiclass classifiers partition the
trees by ``class_id`` and aggregate per class.  All downstream reasoning
(encoding, solving, mining) happens on the interval grid induced by the guard
thresholds, which :class:`GuardIndex` makes explicit.
"""

import json
import math
from bisect import bisect_left, bisect_right

import numpy as np

__all__ = [
    "ModelFormatError",
    "Node",
    "Leaf",
    "Tree",
    "Ensemble",
    "GuardIndex",
    "load_model",
    "dump_model",
    "raw_score",
    "predict_prob",
    "build_guard_index",
    "unaffected_leaves",
    "representative_input",
    "interval_representative",
    "sigmoid",
]

NEG_INF = float("-inf")
POS_INF = float("inf")


class ModelFormatError(ValueError):
    """Raised when a model document violates the canonical schema."""


class Node:
    """Internal split node. The guard is ``X_feature < threshold``; true goes to ``yes``."""

    __slots__ = ("feature", "threshold", "yes", "no")

    def __init__(self, feature, threshold, yes, no):
        self.feature = feature
        self.threshold = threshold
        self.yes = yes
        self.no = no


class Leaf:
    """Leaf node carrying a scalar value and its ensemble-wide id."""

    __slots__ = ("value", "leaf_id")

    def __init__(self, value, leaf_id=-1):
        self.value = value
        self.leaf_id = leaf_id


class Tree:
    __slots__ = ("root", "class_id", "leaves")

    def __init__(self, root, class_id):
        self.root = root
        self.class_id = class_id
        self.leaves = []  # filled by Ensemble, DFS yes-first order

    def depth(self):
        def d(node):
            if isinstance(node, Leaf):
                return 0
            return 1 + max(d(node.yes), d(node.no))

        return d(self.root)

    def __call__(self, x):
        node = self.root
        while isinstance(node, Node):
            node = node.yes if x[node.feature] < node.threshold else node.no
        return node.value


class Ensemble:
    """A validated tree ensemble.

    Immutable after construction; safe to share across concurrent solves.
    ``base_score`` is an additive constant on every raw score (per class in
    the multiclass case).  Leaf ids are assigned globally in tree order,
    DFS yes-first within each tree.
    """

    def __init__(self, trees, num_classes, num_features, base_score=0.0, feature_names=None):
        self.trees = list(trees)
        self.num_classes = int(num_classes)
        self.num_features = int(num_features)
        self.base_score = float(base_score)
        self.feature_names = list(feature_names) if feature_names is not None else None
        self._assign_leaf_ids()
        self._validate()

    def _assign_leaf_ids(self):
        self.leaves = []
        for tree in self.trees:
            tree.leaves = []

            def visit(node, tree=tree):
                if isinstance(node, Leaf):
                    node.leaf_id = len(self.leaves)
                    self.leaves.append(node)
                    tree.leaves.append(node)
                else:
                    visit(node.yes)
                    visit(node.no)

            visit(tree.root)

    def _validate(self):
        if self.num_classes < 2:
            raise ModelFormatError("num_classes must be >= 2")
        if self.num_features < 1:
            raise ModelFormatError("num_features must be >= 1")
        if not math.isfinite(self.base_score):
            raise ModelFormatError("base_score must be finite")
        if self.feature_names is not None and len(self.feature_names) != self.num_features:
            raise ModelFormatError(
                "feature_names has %d entries, expected %d"
                % (len(self.feature_names), self.num_features)
            )
        for t, tree in enumerate(self.trees):
            if self.num_classes == 2:
                if tree.class_id != 1:
                    raise ModelFormatError(
                        "binary models use class_id=1 for every tree; tree %d has %r"
                        % (t, tree.class_id)
                    )
            elif not 0 <= tree.class_id < self.num_classes:
                raise ModelFormatError(
                    "tree %d: class_id %r out of range [0, %d)"
                    % (t, tree.class_id, self.num_classes)
                )

            def check(node):
                if isinstance(node, Leaf):
                    if not math.isfinite(node.value):
                        raise ModelFormatError("tree %d: non-finite leaf value" % t)
                    return
                if not 0 <= node.feature < self.num_features:
                    raise ModelFormatError(
                        "tree %d: guard feature %r out of range [0, %d)"
                        % (t, node.feature, self.num_features)
                    )
                if not math.isfinite(node.threshold):
                    raise ModelFormatError("tree %d: non-finite guard threshold" % t)
                check(node.yes)
                check(node.no)

            check(tree.root)

    @property
    def is_binary(self):
        return self.num_classes == 2

    def feature_index(self, token):
        """Resolve a feature name or a decimal index string to a feature id."""
        if self.feature_names is not None and token in self.feature_names:
            return self.feature_names.index(token)
        try:
            idx = int(token)
        except (TypeError, ValueError):
            raise KeyError("unknown feature %r" % (token,)) from None
        if not 0 <= idx < self.num_features:
            raise KeyError("feature index %d out of range [0, %d)" % (idx, self.num_features))
        return idx

    def class_trees(self, c):
        if self.is_binary:
            return self.trees
        return [t for t in self.trees if t.class_id == c]


def _check_input(e, x):
    if len(x) != e.num_features:
        raise ValueError("input has %d entries, expected %d" % (len(x), e.num_features))
    for v in x:
        if not math.isfinite(v):
            raise ValueError("input entries must be finite, got %r" % (v,))


def raw_score(e: Ensemble, x, c: int) -> float:
    """Raw (pre-link) score of class ``c`` at input ``x``.

    Binary: class 1 is base_score plus the signed sum of all tree outputs,
    class 0 is its negation.  Multiclass: base_score plus the sum over the
    trees of class ``c``.
    """
    if not 0 <= c < e.num_classes:
        raise ValueError("class %r out of range [0, %d)" % (c, e.num_classes))
    _check_input(e, x)
    if e.is_binary:
        s = e.base_score
        for tree in e.trees:
            s += tree(x)
        return s if c == 1 else -s
    s = e.base_score
    for tree in e.trees:
        if tree.class_id == c:
            s += tree(x)
    return s


def sigmoid(v):
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    z = math.exp(v)
    return z / (1.0 + z)


def predict_prob(e: Ensemble, x):
    """Predicted class-probability vector: sigmoid for binary, softmax for multiclass."""
    if e.is_binary:
        p1 = sigmoid(raw_score(e, x, 1))
        return [1.0 - p1, p1]
    raws = [raw_score(e, x, c) for c in range(e.num_classes)]
    m = max(raws)
    exps = [math.exp(r - m) for r in raws]
    total = sum(exps)
    return [v / total for v in exps]


class GuardIndex:
    """Per-feature sorted unique guard thresholds with -inf/+inf sentinels.

    For a guarded feature the threshold list is ``[-inf, t1, ..., tR, +inf]``
    with strictly increasing real cuts.  Interval ``i`` (0-based, i in
    [0, R]) is ``[levels[i], levels[i+1])``.  Real-threshold index ``k``
    runs 1..R; the guard ``X_f < levels[k]`` is true on an interval ``i``
    exactly when ``i < k``.  Features that appear in no guard are absent
    from the index (unconstrained).
    """

    def __init__(self, levels, guard_counts, num_features):
        self.levels = levels  # feature -> [-inf, cuts..., +inf]
        self.guard_counts = guard_counts  # feature -> raw guard-node count
        self.num_features = num_features

    def is_guarded(self, f):
        return f in self.levels

    @property
    def guarded_features(self):
        return sorted(self.levels)

    def cuts(self, f):
        return self.levels[f][1:-1]

    def num_intervals(self, f):
        return len(self.levels[f]) - 1

    def interval_of(self, f, value):
        """0-based interval index containing ``value``."""
        return bisect_right(self.levels[f], value) - 1

    def interval_bounds(self, f, i):
        lv = self.levels[f]
        if not 0 <= i < len(lv) - 1:
            raise IndexError("interval %d out of range for feature %d" % (i, f))
        return lv[i], lv[i + 1]

    def threshold_index(self, f, tau):
        """Index of ``tau`` in the threshold list (sentinels included). Errors if absent."""
        lv = self.levels.get(f)
        if lv is None:
            raise KeyError("feature %d has no guards" % f)
        j = bisect_left(lv, tau)
        if j >= len(lv) or lv[j] != tau:
            raise KeyError("threshold %r not in the guard index of feature %d" % (tau, f))
        return j


def build_guard_index(e: Ensemble) -> GuardIndex:
    """Collect, deduplicate, and sort guard thresholds per feature, adding sentinels."""
    raw = {}
    counts = {}

    def visit(node):
        if isinstance(node, Leaf):
            return
        raw.setdefault(node.feature, set()).add(float(node.threshold))
        counts[node.feature] = counts.get(node.feature, 0) + 1
        visit(node.yes)
        visit(node.no)

    for tree in e.trees:
        visit(tree.root)
    levels = {f: [NEG_INF] + sorted(vals) + [POS_INF] for f, vals in raw.items()}
    return GuardIndex(levels, counts, e.num_features)


def unaffected_leaves(e: Ensemble, features) -> set:
    """Ids of leaves whose root-to-leaf ancestry mentions no feature in ``features``."""
    fs = set(features)
    for f in fs:
        if not 0 <= f < e.num_features:
            raise ValueError("feature %r out of range [0, %d)" % (f, e.num_features))
    out = set()

    def visit(node, touched):
        if isinstance(node, Leaf):
            if not touched:
                out.add(node.leaf_id)
            return
        t = touched or node.feature in fs
        visit(node.yes, t)
        visit(node.no, t)

    for tree in e.trees:
        visit(tree.root, False)
    return out


def interval_representative(lo, hi):
    """A concrete value inside ``[lo, hi)``: midpoint, or the hint-free end rules."""
    if lo == NEG_INF and hi == POS_INF:
        return 0.0
    if lo == NEG_INF:
        return hi - 1.0
    if hi == POS_INF:
        return lo
    return (lo + hi) / 2.0


def representative_input(gi: GuardIndex, assignment, data_hint=None):
    """Turn a complete interval assignment into a concrete input vector.

    Bounded intervals map to their midpoint.  Half-open end intervals map to
    ``hi - 1`` / ``lo``, or to the dataset min/max clamped into the interval
    when ``data_hint`` (a rows-by-features array) is given.  Unconstrained
    features map to 0, or the dataset median with a hint.  The returned
    point always lies inside the assigned region.
    """
    hint = None
    if data_hint is not None:
        hint = np.asarray(data_hint, dtype=float)
        if hint.ndim != 2 or hint.shape[1] != gi.num_features:
            raise ValueError("data_hint must be a rows x num_features array")
    x = [0.0] * gi.num_features
    for f in range(gi.num_features):
        if not gi.is_guarded(f):
            if hint is not None:
                x[f] = float(np.median(hint[:, f]))
            continue
        if f not in assignment:
            raise ValueError("assignment is missing guarded feature %d" % f)
        lo, hi = gi.interval_bounds(f, assignment[f])
        x[f] = interval_representative(lo, hi)
        if hint is not None:
            if lo == NEG_INF and hi == POS_INF:
                x[f] = float(np.median(hint[:, f]))
            elif lo == NEG_INF:
                mn = float(hint[:, f].min())
                if mn < hi:
                    x[f] = mn
            elif hi == POS_INF:
                x[f] = max(lo, float(hint[:, f].max()))
    return x


# --- canonical model JSON ---------------------------------------------------


def _parse_node(obj, where):
    if not isinstance(obj, dict):
        raise ModelFormatError("%s: node must be an object" % where)
    if "leaf" in obj:
        try:
            return Leaf(float(obj["leaf"]))
        except (TypeError, ValueError):
            raise ModelFormatError("%s: leaf value must be a real" % where) from None
    for key in ("feature", "threshold", "yes", "no"):
        if key not in obj:
            raise ModelFormatError("%s: internal node missing %r" % (where, key))
    try:
        feature = int(obj["feature"])
        threshold = float(obj["threshold"])
    except (TypeError, ValueError):
        raise ModelFormatError("%s: malformed feature/threshold" % where) from None
    yes = _parse_node(obj["yes"], where + ".yes")
    no = _parse_node(obj["no"], where + ".no")
    return Node(feature, threshold, yes, no)


def load_model(document) -> Ensemble:
    """Parse and validate a canonical model JSON document.

    Accepts bytes, text, a file-like object, or an already-decoded dict.
    """
    if hasattr(document, "read"):
        document = document.read()
    if isinstance(document, (bytes, bytearray)):
        document = document.decode("utf-8")
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ModelFormatError("malformed JSON: %s" % exc) from None
    if not isinstance(document, dict):
        raise ModelFormatError("model document must be a JSON object")
    for key in ("num_features", "num_classes", "trees"):
        if key not in document:
            raise ModelFormatError("model document missing %r" % key)
    trees = []
    if not isinstance(document["trees"], list):
        raise ModelFormatError("trees must be a list")
    for t, tobj in enumerate(document["trees"]):
        if not isinstance(tobj, dict) or "root" not in tobj or "class_id" not in tobj:
            raise ModelFormatError("tree %d must have class_id and root" % t)
        root = _parse_node(tobj["root"], "tree %d" % t)
        trees.append(Tree(root, int(tobj["class_id"])))
    try:
        return Ensemble(
            trees,
            num_classes=int(document["num_classes"]),
            num_features=int(document["num_features"]),
            base_score=float(document.get("base_score", 0.0)),
            feature_names=document.get("feature_names"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(str(exc)) from None


def _node_to_obj(node):
    if isinstance(node, Leaf):
        return {"leaf": node.value}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "yes": _node_to_obj(node.yes),
        "no": _node_to_obj(node.no),
    }


def dump_model(e: Ensemble) -> dict:
    """Inverse of :func:`load_model`; reals keep full round-trip precision."""
    doc = {
        "num_features": e.num_features,
        "num_classes": e.num_classes,
        "base_score": e.base_score,
        "trees": [{"class_id": t.class_id, "root": _node_to_obj(t.root)} for t in e.trees],
    }
    if e.feature_names is not None:
        doc["feature_names"] = e.feature_names
    return doc
