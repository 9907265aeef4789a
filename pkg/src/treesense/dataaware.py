"""Dataset marginals, log-utility objective pieces, and clause (cavity) mining.

A dataset induces, per guarded feature, an empirical distribution over the
guard intervals (the marginal table).  The product of marginals scores how
data-plausible an input pair is; its log turns into linear objective
coefficients over the predicate variables.  Independently, axis-aligned boxes
whose interior contains no dataset row ("cavities") are mined into clauses
whose negation excludes those boxes from the search.
"""

import csv
import io
import json
import math
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .model import NEG_INF, POS_INF, GuardIndex

__all__ = [
    "Dataset",
    "MarginalTable",
    "Clause",
    "estimate_marginals",
    "utility_log",
    "objective_coeffs",
    "ObjectiveCoeffs",
    "mine_clauses",
    "clause_satisfied",
    "clauses_to_json",
    "clauses_from_json",
]


class Dataset:
    """Numeric row-major dataset. No NaN/inf entries, at least one row."""

    def __init__(self, rows, column_names=None):
        self.rows = np.asarray(rows, dtype=float)
        if self.rows.ndim != 2:
            raise ValueError("dataset must be two-dimensional")
        if self.rows.shape[0] < 1:
            raise ValueError("dataset must have at least one row")
        if not np.isfinite(self.rows).all():
            raise ValueError("dataset contains NaN or infinite entries")
        self.column_names = list(column_names) if column_names is not None else None
        if self.column_names is not None and len(self.column_names) != self.rows.shape[1]:
            raise ValueError("column_names length does not match column count")

    @property
    def num_rows(self):
        return self.rows.shape[0]

    @property
    def num_columns(self):
        return self.rows.shape[1]

    @classmethod
    def from_csv(cls, source):
        """Read a headered CSV with numeric cells only."""
        if hasattr(source, "read"):
            text = source.read()
            if isinstance(text, bytes):
                text = text.decode("utf-8")
        else:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("CSV is empty") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError("CSV line %d has %d cells, expected %d" % (lineno, len(row), len(header)))
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise ValueError("CSV line %d has a non-numeric cell" % lineno) from None
        return cls(rows, column_names=header)

    def minmax_scaler(self):
        """Per-feature (min, max) pairs, the scaler used by the distance metric."""
        return list(zip(self.rows.min(axis=0).tolist(), self.rows.max(axis=0).tolist()))


class MarginalTable:
    """Per guarded feature: interval probabilities and their natural logs.

    ``probs[f][i]`` is the marginal mass of interval ``i`` of feature ``f``
    (0-based, as in :class:`~treesense.model.GuardIndex`).  Zero-mass
    intervals carry ``log = -inf``; with the default add-one smoothing all
    masses are strictly positive.
    """

    def __init__(self, levels, probs):
        self.levels = levels  # feature -> [-inf, cuts..., +inf]
        self.probs = probs  # feature -> list of interval masses
        self.logs = {
            f: [math.log(p) if p > 0.0 else NEG_INF for p in ps] for f, ps in probs.items()
        }

    @property
    def features(self):
        return sorted(self.probs)

    def interval_of(self, f, value):
        from bisect import bisect_right

        return bisect_right(self.levels[f], value) - 1

    def log_marginal_of(self, f, value):
        return self.logs[f][self.interval_of(f, value)]

    def is_strictly_positive(self):
        return all(p > 0.0 for ps in self.probs.values() for p in ps)

    def to_json(self):
        return {
            str(f): {"cuts": self.levels[f][1:-1], "probs": list(self.probs[f])}
            for f in sorted(self.probs)
        }

    @classmethod
    def from_json(cls, obj):
        levels, probs = {}, {}
        for key, spec in obj.items():
            f = int(key)
            levels[f] = [NEG_INF] + [float(c) for c in spec["cuts"]] + [POS_INF]
            probs[f] = [float(p) for p in spec["probs"]]
            if len(probs[f]) != len(levels[f]) - 1:
                raise ValueError("feature %d: %d probs for %d intervals" % (f, len(probs[f]), len(levels[f]) - 1))
        return cls(levels, probs)


def estimate_marginals(gi: GuardIndex, d: Dataset, alpha: float = 1.0) -> MarginalTable:
    """Empirical per-interval marginals with additive (add-``alpha``) smoothing.

    ``m[f][i] = (count of rows with x_f in interval i) + alpha``, normalized
    per feature.  The sentinel levels make the intervals cover the whole real
    line, so every row lands in exactly one interval.
    """
    if d.num_columns != gi.num_features:
        raise ValueError("dataset has %d columns, model expects %d" % (d.num_columns, gi.num_features))
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    n = d.num_rows
    probs = {}
    for f in gi.guarded_features:
        k = gi.num_intervals(f)
        cuts = np.asarray(gi.cuts(f), dtype=float)
        idx = np.searchsorted(cuts, d.rows[:, f], side="right")
        counts = np.bincount(idx, minlength=k).astype(float)
        total = n + alpha * k
        probs[f] = ((counts + alpha) / total).tolist()
    return MarginalTable({f: list(gi.levels[f]) for f in probs}, probs)


def utility_log(m: MarginalTable, x1, x2) -> float:
    """Log of the product-of-marginals utility of an input pair.

    ``sum_f [log m_f(x1_f) + log m_f(x2_f)]``; exp of the result is the
    utility itself.
    """
    total = 0.0
    for f in m.features:
        total += m.log_marginal_of(f, x1[f]) + m.log_marginal_of(f, x2[f])
    return total


@dataclass(frozen=True)
class ObjectiveCoeffs:
    """Predicate-variable coefficients of the log-marginal objective.

    ``coeffs[(f, k)]`` (k = 1..R real-threshold index) is the weight of each
    copy's predicate variable; any consistent assignment scores
    ``utility_log + constant``, the constant coming from the pinned top
    sentinel predicate.
    """

    coeffs: dict
    constant: float


def objective_coeffs(m: MarginalTable, gi: GuardIndex) -> ObjectiveCoeffs:
    coeffs = {}
    constant = 0.0
    for f in gi.guarded_features:
        if f not in m.probs:
            raise KeyError("marginals missing guarded feature %d" % f)
        logs = m.logs[f]
        r = gi.num_intervals(f) - 1  # number of real thresholds
        if len(logs) != r + 1:
            raise ValueError("feature %d: marginal table does not match guard index" % f)
        for k in range(1, r + 1):
            coeffs[(f, k)] = logs[k - 1] - logs[k]
        constant -= 2.0 * logs[r]
    return ObjectiveCoeffs(coeffs, constant)


@dataclass(frozen=True)
class Clause:
    """A mined cavity: conjunction of per-feature interval bounds, no row inside.

    ``literals`` is a tuple of ``(feature, lo, hi)`` with ``lo < hi`` taken
    from the guard thresholds (sentinels allowed).  A point *violates* the
    clause when it lies inside the box, i.e. every literal's interval
    membership holds.
    """

    literals: tuple

    def __post_init__(self):
        feats = [f for f, _, _ in self.literals]
        if not feats:
            raise ValueError("clause must have at least one literal")
        if feats != sorted(set(feats)):
            raise ValueError("clause features must be strictly increasing")
        for f, lo, hi in self.literals:
            if not lo < hi:
                raise ValueError("clause literal on feature %d has lo >= hi" % f)

    @property
    def width(self):
        return len(self.literals)

    def contains(self, x):
        return all(lo <= x[f] < hi for f, lo, hi in self.literals)


def clause_satisfied(c: Clause, x) -> bool:
    """False only when ``x`` lies inside the cavity box."""
    return not c.contains(x)


def _box_mask(rows, literals):
    mask = np.ones(rows.shape[0], dtype=bool)
    for f, lo, hi in literals:
        col = rows[:, f]
        mask &= (col >= lo) & (col < hi)
    return mask


def _box_empty(rows, literals):
    return not _box_mask(rows, literals).any()


def _subsumed(literals, by):
    """True when the box of ``literals`` is contained in the box of ``by``."""
    bounds = {f: (lo, hi) for f, lo, hi in literals}
    for f, blo, bhi in by:
        if f not in bounds:
            return False
        lo, hi = bounds[f]
        if lo < blo or hi > bhi:
            return False
    return True


def mine_clauses(
    gi: GuardIndex,
    d: Dataset,
    max_width: int = 3,
    max_clauses: int = 1500,
    feature_budget: int | None = 64,
) -> list:
    """Complete enumerative cavity search with subsumption pruning.

    For each width w = 1..``max_width`` every box candidate over guard
    thresholds is tried in a fixed order (widest span first, then
    lexicographic), emitted when it contains no dataset row and is not
    subsumed by an emitted clause, and greedily literal-pruned before
    emission.  When ``feature_budget`` is set, only the most guard-frequent
    features participate.  The emitted list is deterministic.
    """
    if max_width < 1:
        raise ValueError("max_width must be >= 1")
    if d.num_columns != gi.num_features:
        raise ValueError("dataset has %d columns, model expects %d" % (d.num_columns, gi.num_features))
    rows = d.rows

    feats = [f for f in gi.guarded_features if gi.num_intervals(f) >= 2]
    if feature_budget is not None and len(feats) > feature_budget:
        feats.sort(key=lambda f: (-gi.guard_counts.get(f, 0), f))
        feats = sorted(feats[:feature_budget])

    # Per-feature candidate literals: (span_score, f, lo, hi), excluding the
    # whole-line literal which constrains nothing.
    per_feature = {}
    for f in feats:
        lv = gi.levels[f]
        top = len(lv) - 1
        lits = []
        for s in range(top):
            for t in range(s + 1, top + 1):
                if s == 0 and t == top:
                    continue
                lits.append((s - t, f, lv[s], lv[t]))
        per_feature[f] = lits

    def prune(literals):
        # Single pass in feature order; a drop commits only if the larger box
        # is still empty of rows.
        lits = list(literals)
        i = 0
        while i < len(lits) and len(lits) > 1:
            trial = lits[:i] + lits[i + 1 :]
            if _box_empty(rows, trial):
                lits = trial
            else:
                i += 1
        return tuple(lits)

    emitted = []
    for w in range(1, max_width + 1):
        if len(emitted) >= max_clauses:
            break
        candidates = []
        for combo in combinations(feats, w):
            pools = [per_feature[f] for f in combo]
            for chosen in product(*pools):
                span = sum(c[0] for c in chosen)
                lits = tuple((f, lo, hi) for _, f, lo, hi in chosen)
                candidates.append((span, lits))
        candidates.sort()
        for _, lits in candidates:
            if len(emitted) >= max_clauses:
                break
            if any(_subsumed(lits, e.literals) for e in emitted):
                continue
            if not _box_empty(rows, lits):
                continue
            pruned = prune(lits)
            if any(_subsumed(pruned, e.literals) for e in emitted):
                continue
            emitted = [e for e in emitted if not _subsumed(e.literals, pruned)]
            emitted.append(Clause(pruned))
    return emitted


def clauses_to_json(clauses) -> list:
    """Clause-file payload; thresholds serialized as real values."""
    return [
        {"literals": [{"feature": f, "lb": lo, "ub": hi} for f, lo, hi in c.literals]}
        for c in clauses
    ]


def clauses_from_json(obj, gi: GuardIndex | None = None) -> list:
    """Load clauses, optionally re-resolving every bound against a guard index.

    With ``gi`` given, a bound that is not one of the feature's thresholds is
    an error.
    """
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    clauses = []
    for i, spec in enumerate(obj):
        lits = []
        for lit in spec["literals"]:
            f = int(lit["feature"])
            lo = float(lit["lb"])
            hi = float(lit["ub"])
            if gi is not None:
                gi.threshold_index(f, lo)
                gi.threshold_index(f, hi)
            lits.append((f, lo, hi))
        lits.sort()
        clauses.append(Clause(tuple(lits)))
    return clauses
