"""Mixed-integer linear encoding of sensitivity queries and LP-file export.

Two copies of the model run side by side: binary predicate variables
``p{copy}_f{feature}_k{threshold}`` and continuous-in-[0,1] leaf variables
``l{copy}_n{leaf}``.  Constraint families:

* ``domain``    - sentinel predicates pinned (X < -inf is 0, X < +inf is 1)
* ``predord``   - threshold monotonicity chains per feature and copy
* ``leafsum``   - exactly one leaf per tree and copy
* ``rootlink``  - equalities tying the root predicate to its leaf sets
* ``nodelink``  - the same as inequalities for non-root internal nodes
* ``samenonf``  - copies agree on every predicate off the sensitive set
* ``gap``       - the score-gap condition (signed threshold for binary,
                  pairwise raw-margin rows for multiclass)
* ``unaff``     - equal leaf variables for leaves untouched by the set
* ``aff``       - the aggregated gap restricted to affected leaves
* ``clause``    - one row per mined cavity and copy forbidding the box

``unaff`` appears from level ``unaff`` up, ``aff`` from level ``aff``; the
objective (score difference, or the log-marginal utility in prob modes) is
set only at level ``full``.
"""

import math
from dataclasses import dataclass, field

from .dataaware import MarginalTable, objective_coeffs
from .model import Ensemble, GuardIndex, Leaf, unaffected_leaves

__all__ = [
    "EncodingError",
    "TriviallyUnsensitiveError",
    "SensitivityQuery",
    "LinRow",
    "VarDef",
    "EncodingArtifact",
    "delta_from_gap",
    "eta_from_gap",
    "encode",
    "export_lp",
    "LEVELS",
    "STRICT_EPS",
]

LEVELS = ("base", "unaff", "aff", "full")
STRICT_EPS = 1e-6  # slack that realizes strict ">" rows in LP output
MODES = ("none", "prob", "clause", "probclause")


class EncodingError(ValueError):
    pass


class TriviallyUnsensitiveError(EncodingError):
    """The query is decidable without solving (empty sensitive set, positive gap)."""


def delta_from_gap(g: float) -> float:
    """Raw-score threshold for a probability gap: inverse sigmoid of 0.5+g."""
    if g < 0:
        raise ValueError("probability gap must be >= 0")
    if g >= 0.5:
        raise ValueError("probability gap must be < 0.5")
    return math.log((0.5 + g) / (0.5 - g))


def eta_from_gap(g: float) -> float:
    """Raw-margin threshold for a multiclass ratio gap: ln g, defined for g >= 1."""
    if g <= 0:
        raise ValueError("ratio gap must be positive")
    if g < 1:
        raise ValueError("ratio gap below 1 is weaker than the argmax condition")
    return math.log(g)


@dataclass(frozen=True)
class SensitivityQuery:
    """A sensitivity question: feature set, gap, optional class pair and data mode.

    Binary queries take exactly one of ``prob_gap`` (in [0, 0.5)) or
    ``raw_gap`` (>= 0, interpreted directly in raw-score space); multiclass
    queries take ``ratio_gap`` (>= 1) plus a ``classes`` pair.  Modes ``prob``
    and ``probclause`` need ``marginals``; ``clause`` and ``probclause`` need
    ``clauses``.
    """

    features: frozenset
    prob_gap: float | None = None
    raw_gap: float | None = None
    ratio_gap: float | None = None
    classes: tuple | None = None
    mode: str = "none"
    clauses: tuple | None = None
    marginals: MarginalTable | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", frozenset(self.features))
        if self.mode not in MODES:
            raise ValueError("unknown mode %r" % (self.mode,))
        n_gaps = sum(g is not None for g in (self.prob_gap, self.raw_gap, self.ratio_gap))
        if n_gaps != 1:
            raise ValueError("exactly one of prob_gap, raw_gap, ratio_gap must be set")
        if self.prob_gap is not None:
            delta_from_gap(self.prob_gap)
        if self.raw_gap is not None and self.raw_gap < 0:
            raise ValueError("raw gap must be >= 0")
        if self.ratio_gap is not None:
            eta_from_gap(self.ratio_gap)
        if self.classes is not None:
            c1, c2 = self.classes
            if c1 == c2:
                raise ValueError("the two classes must differ")
        if self.mode in ("prob", "probclause") and self.marginals is None:
            raise ValueError("mode %r requires marginals" % self.mode)
        if self.mode in ("clause", "probclause") and self.clauses is None:
            raise ValueError("mode %r requires clauses" % self.mode)
        if self.clauses is not None:
            object.__setattr__(self, "clauses", tuple(self.clauses))

    @property
    def uses_clauses(self):
        return self.mode in ("clause", "probclause")

    @property
    def uses_marginals(self):
        return self.mode in ("prob", "probclause")

    def validate_for(self, e: Ensemble):
        for f in self.features:
            if not 0 <= f < e.num_features:
                raise ValueError("sensitive feature %r out of range [0, %d)" % (f, e.num_features))
        if e.is_binary:
            if self.ratio_gap is not None:
                raise ValueError("binary models take prob_gap or raw_gap, not ratio_gap")
            if self.classes is not None:
                raise ValueError("class pairs apply to multiclass models only")
        else:
            if self.ratio_gap is None:
                raise ValueError("multiclass models take a ratio_gap")
            if self.classes is None:
                raise ValueError("multiclass queries need a (c1, c2) class pair")
            for c in self.classes:
                if not 0 <= c < e.num_classes:
                    raise ValueError("class %r out of range [0, %d)" % (c, e.num_classes))

    def delta(self) -> float:
        """Binary raw-score threshold."""
        if self.raw_gap is not None:
            return float(self.raw_gap)
        if self.prob_gap is not None:
            return delta_from_gap(self.prob_gap)
        raise ValueError("query has no binary gap")

    def eta(self) -> float:
        if self.ratio_gap is None:
            raise ValueError("query has no ratio gap")
        return eta_from_gap(self.ratio_gap)


@dataclass(frozen=True)
class VarDef:
    name: str
    kind: str  # "binary" | "unit" (continuous in [0, 1])


@dataclass(frozen=True)
class LinRow:
    name: str
    family: str
    terms: tuple  # ((var, coeff), ...) in emission order
    sense: str  # "=", "<=", ">="
    rhs: float


@dataclass
class EncodingArtifact:
    variables: tuple = ()
    rows: tuple = ()
    objective: tuple = ()  # ((var, coeff), ...), empty below level "full"
    objective_constant: float = 0.0
    meta: dict = field(default_factory=dict)

    def family_counts(self) -> dict:
        counts = {}
        for row in self.rows:
            counts[row.family] = counts.get(row.family, 0) + 1
        return counts

    def rows_of(self, family):
        return [r for r in self.rows if r.family == family]


def _pvar(copy, f, k):
    return "p%d_f%d_k%d" % (copy, f, k)


def _lvar(copy, leaf_id):
    return "l%d_n%d" % (copy, leaf_id)


def _leaf_ids(node, acc):
    if isinstance(node, Leaf):
        acc.append(node.leaf_id)
    else:
        _leaf_ids(node.yes, acc)
        _leaf_ids(node.no, acc)
    return acc


def encode(e: Ensemble, gi: GuardIndex, q: SensitivityQuery, level: str = "full") -> EncodingArtifact:
    """Build the full constraint system for a query at the given level."""
    level = level.lstrip("+")
    if level not in LEVELS:
        raise EncodingError("unknown level %r" % (level,))
    tier = LEVELS.index(level)
    q.validate_for(e)
    if not e.trees:
        raise EncodingError("model has no trees")

    binary = e.is_binary
    threshold = q.delta() if binary else q.eta()
    if not q.features and threshold > 0:
        raise TriviallyUnsensitiveError(
            "empty sensitive set with a positive gap admits no counterexample pair"
        )

    unaff = unaffected_leaves(e, q.features)
    feats = gi.guarded_features

    variables = []
    for f in feats:
        top = gi.num_intervals(f)  # sentinel +inf has threshold index top
        for k in range(top + 1):
            for copy in (1, 2):
                variables.append(VarDef(_pvar(copy, f, k), "binary"))
    for copy in (1, 2):
        for leaf in e.leaves:
            variables.append(VarDef(_lvar(copy, leaf.leaf_id), "unit"))

    rows = []

    # domain: pin the sentinel guards
    for f in feats:
        top = gi.num_intervals(f)
        for copy in (1, 2):
            rows.append(LinRow("domain_f%d_lo_c%d" % (f, copy), "domain",
                               ((_pvar(copy, f, 0), 1.0),), "=", 0.0))
        for copy in (1, 2):
            rows.append(LinRow("domain_f%d_hi_c%d" % (f, copy), "domain",
                               ((_pvar(copy, f, top), 1.0),), "=", 1.0))

    # predord: real-threshold monotonicity chains
    for f in feats:
        r = gi.num_intervals(f) - 1
        for k in range(1, r):
            for copy in (1, 2):
                rows.append(LinRow(
                    "predord_f%d_k%d_c%d" % (f, k, copy), "predord",
                    ((_pvar(copy, f, k), 1.0), (_pvar(copy, f, k + 1), -1.0)),
                    "<=", 0.0))

    # leafsum
    for t, tree in enumerate(e.trees):
        ids = [leaf.leaf_id for leaf in tree.leaves]
        for copy in (1, 2):
            rows.append(LinRow("leafsum_t%d_c%d" % (t, copy), "leafsum",
                               tuple((_lvar(copy, n), 1.0) for n in ids), "=", 1.0))

    # rootlink / nodelink
    for t, tree in enumerate(e.trees):
        internal = []

        def collect(node):
            if isinstance(node, Leaf):
                return
            internal.append(node)
            collect(node.yes)
            collect(node.no)

        collect(tree.root)
        for idx, node in enumerate(internal):
            k = gi.threshold_index(node.feature, node.threshold)
            tset = _leaf_ids(node.yes, [])
            fset = _leaf_ids(node.no, [])
            is_root = node is tree.root
            for copy in (1, 2):
                p = _pvar(copy, node.feature, k)
                yes_terms = tuple((_lvar(copy, n), 1.0) for n in tset) + ((p, -1.0),)
                no_terms = tuple((_lvar(copy, n), 1.0) for n in fset) + ((p, 1.0),)
                if is_root:
                    rows.append(LinRow("rootlink_t%d_c%d_yes" % (t, copy), "rootlink",
                                       yes_terms, "=", 0.0))
                    rows.append(LinRow("rootlink_t%d_c%d_no" % (t, copy), "rootlink",
                                       no_terms, "=", 1.0))
                else:
                    rows.append(LinRow("nodelink_t%d_n%d_c%d_yes" % (t, idx, copy), "nodelink",
                                       yes_terms, "<=", 0.0))
                    rows.append(LinRow("nodelink_t%d_n%d_c%d_no" % (t, idx, copy), "nodelink",
                                       no_terms, "<=", 1.0))

    # samenonf: copies agree on every real-threshold predicate off F
    for f in feats:
        if f in q.features:
            continue
        r = gi.num_intervals(f) - 1
        for k in range(1, r + 1):
            rows.append(LinRow("samenonf_f%d_k%d" % (f, k), "samenonf",
                               ((_pvar(1, f, k), 1.0), (_pvar(2, f, k), -1.0)), "=", 0.0))

    # gap
    if binary:
        delta = threshold
        t1 = tuple((_lvar(1, leaf.leaf_id), leaf.value) for leaf in e.leaves)
        t2 = tuple((_lvar(2, leaf.leaf_id), leaf.value) for leaf in e.leaves)
        rows.append(LinRow("gap_c1", "gap", t1, ">=", delta - e.base_score))
        rows.append(LinRow("gap_c2", "gap", t2, "<=", -delta - e.base_score))
    else:
        eta = threshold
        c1, c2 = q.classes
        by_class = {}
        for tree in e.trees:
            by_class.setdefault(tree.class_id, []).extend(l.leaf_id for l in tree.leaves)
        for copy, target in ((1, c1), (2, c2)):
            for c in range(e.num_classes):
                if c == target:
                    continue
                terms = tuple((_lvar(copy, n), leaf_val) for n, leaf_val in
                              ((n, e.leaves[n].value) for n in by_class.get(target, ())))
                terms += tuple((_lvar(copy, n), -e.leaves[n].value) for n in by_class.get(c, ()))
                rows.append(LinRow("gap_c%d_cl%d" % (copy, c), "gap",
                                   terms, ">=", eta + STRICT_EPS))

    # unaff
    if tier >= 1:
        for n in sorted(unaff):
            rows.append(LinRow("unaff_n%d" % n, "unaff",
                               ((_lvar(1, n), 1.0), (_lvar(2, n), -1.0)), "=", 0.0))

    # aff
    if tier >= 2:
        if binary:
            terms = []
            for leaf in e.leaves:
                if leaf.leaf_id in unaff:
                    continue
                terms.append((_lvar(1, leaf.leaf_id), leaf.value))
                terms.append((_lvar(2, leaf.leaf_id), -leaf.value))
            if terms:
                rows.append(LinRow("aff", "aff", tuple(terms), ">=", 2.0 * threshold))
        else:
            c1, c2 = q.classes
            terms = []
            for tree in e.trees:
                if tree.class_id == c1:
                    sgn = 1.0
                elif tree.class_id == c2:
                    sgn = -1.0
                else:
                    continue
                for leaf in tree.leaves:
                    if leaf.leaf_id in unaff:
                        continue
                    terms.append((_lvar(1, leaf.leaf_id), sgn * leaf.value))
                    terms.append((_lvar(2, leaf.leaf_id), -sgn * leaf.value))
            if terms:
                rows.append(LinRow("aff", "aff", tuple(terms), ">=",
                                   2.0 * threshold + STRICT_EPS))

    # clause blocks: for each copy, at least one literal of each cavity broken
    if q.uses_clauses:
        for ci, clause in enumerate(q.clauses):
            resolved = []
            for f, lo, hi in clause.literals:
                s = gi.threshold_index(f, lo)
                t = gi.threshold_index(f, hi)
                resolved.append((f, s, t))
            w = len(resolved)
            for copy in (1, 2):
                terms = []
                for f, s, t in resolved:
                    terms.append((_pvar(copy, f, s), 1.0))
                    terms.append((_pvar(copy, f, t), -1.0))
                rows.append(LinRow("clause%d_c%d" % (ci, copy), "clause",
                                   tuple(terms), ">=", 1.0 - w))

    # objective
    objective = ()
    objective_constant = 0.0
    if tier >= 3:
        if q.uses_marginals:
            if not q.marginals.is_strictly_positive():
                raise EncodingError("log-marginal objective needs strictly positive marginals")
            oc = objective_coeffs(q.marginals, gi)
            objective = tuple(
                (_pvar(copy, f, k), oc.coeffs[(f, k)])
                for (f, k) in sorted(oc.coeffs)
                for copy in (1, 2)
                if oc.coeffs[(f, k)] != 0.0
            )
            objective_constant = oc.constant
        elif binary:
            objective = tuple((_lvar(1, l.leaf_id), l.value) for l in e.leaves) + tuple(
                (_lvar(2, l.leaf_id), -l.value) for l in e.leaves)
        else:
            c1, c2 = q.classes
            terms = []
            for tree in e.trees:
                if tree.class_id == c1:
                    sgn = 1.0
                elif tree.class_id == c2:
                    sgn = -1.0
                else:
                    continue
                for leaf in tree.leaves:
                    terms.append((_lvar(1, leaf.leaf_id), sgn * leaf.value))
                    terms.append((_lvar(2, leaf.leaf_id), -sgn * leaf.value))
            objective = tuple(terms)

    meta = {
        "level": level,
        "mode": q.mode,
        "num_trees": len(e.trees),
        "num_classes": e.num_classes,
        "binary": binary,
        "threshold": threshold,
    }
    return EncodingArtifact(tuple(variables), tuple(rows), objective, objective_constant, meta)


def _fmt(value):
    return repr(float(value))


def _write_terms(out, terms):
    first = True
    for var, coeff in terms:
        if coeff == 0.0:
            continue
        if first:
            if coeff < 0:
                out.append("- %s %s" % (_fmt(-coeff), var))
            else:
                out.append("%s %s" % (_fmt(coeff), var))
            first = False
        else:
            sign = "-" if coeff < 0 else "+"
            out.append("%s %s %s" % (sign, _fmt(abs(coeff)), var))
    return not first


def export_lp(artifact: EncodingArtifact, sink) -> None:
    """Write the artifact as deterministic CPLEX-LP text to a byte sink."""
    if not artifact.meta.get("num_trees"):
        raise EncodingError("artifact encodes no trees")
    lines = []
    lines.append("\\ sensitivity encoding (level=%s mode=%s trees=%d)" % (
        artifact.meta.get("level", "?"), artifact.meta.get("mode", "?"),
        artifact.meta["num_trees"]))
    if artifact.objective_constant:
        lines.append("\\ objective_constant= %s" % _fmt(artifact.objective_constant))
    lines.append("Maximize")
    parts = []
    _write_terms(parts, artifact.objective)
    lines.append(" obj: " + " ".join(parts))
    lines.append("Subject To")
    sense_txt = {"=": "=", "<=": "<=", ">=": ">="}
    for row in artifact.rows:
        parts = []
        any_terms = _write_terms(parts, row.terms)
        if not any_terms:
            parts.append("0 %s" % artifact.variables[0].name)
        lines.append(" %s: %s %s %s" % (row.name, " ".join(parts),
                                        sense_txt[row.sense], _fmt(row.rhs)))
    lines.append("Bounds")
    for var in artifact.variables:
        if var.kind == "unit":
            lines.append(" 0 <= %s <= 1" % var.name)
    lines.append("Binary")
    for var in artifact.variables:
        if var.kind == "binary":
            lines.append(" %s" % var.name)
    lines.append("End")
    data = ("\n".join(lines) + "\n").encode("utf-8")
    sink.write(data)
