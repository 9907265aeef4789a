"""Exact sensitivity decision procedure, brute-force oracle, certificate checker.

The solver branches over (feature, interval) choices on the guard grid: one
shared choice per feature outside the sensitive set, an independent choice
per copy for sensitive features.  Leaf variables are derived by tree
descent, never branched.  Admissible bounds prune subtrees that cannot reach
the gap; clause propagation prunes partial assignments already trapped
inside a mined cavity.  In the probability-weighted modes the search is
exhaustive with an admissible log-marginal bound, so the returned incumbent
is utility-maximal.

Optimization tiers mirror the encoder's ablation levels:

* ``base``  - per-copy gap bounds only, natural branch order
* ``unaff`` - identical pruning to ``base``: the unaffected-leaf equalities
  are structural in this interval search (copies share every non-sensitive
  choice), so the tier is kept for interface parity
* ``aff``   - adds the affected-difference bound (per tree, the copy-1 minus
  copy-2 value difference skips unaffected leaves, which always cancel)
* ``full``  - adds objective-guided feature and interval ordering
"""

import time
from dataclasses import dataclass, field
from itertools import product

from .dataaware import clause_satisfied, objective_coeffs, utility_log
from .encoding import LEVELS, SensitivityQuery
from .model import (
    Ensemble,
    GuardIndex,
    Leaf,
    interval_representative,
    predict_prob,
    raw_score,
    representative_input,
    sigmoid,
    unaffected_leaves,
)

__all__ = [
    "SENSITIVE",
    "NOT_SENSITIVE",
    "TIMEOUT",
    "Budget",
    "SolveStats",
    "CounterexamplePair",
    "Outcome",
    "CheckResult",
    "solve",
    "brute_force_oracle",
    "check_pair",
    "depth1_poly_check",
    "OracleCapError",
]

SENSITIVE = "sensitive"
NOT_SENSITIVE = "not_sensitive"
TIMEOUT = "timeout"

_DIFF_SLACK = 1e-9  # guards the aggregated difference bounds against float noise
_UTIL_SLACK = 1e-12


class OracleCapError(RuntimeError):
    """The brute-force state space exceeds the configured cap."""


@dataclass
class Budget:
    time_limit: float | None = None  # seconds; makes Timeout outcomes clock-dependent
    node_limit: int | None = None


@dataclass
class SolveStats:
    nodes: int = 0
    pruned_bound: int = 0
    pruned_clause: int = 0
    wall_time: float = 0.0


@dataclass
class CounterexamplePair:
    x1: list
    x2: list
    region1: dict  # feature -> (lo, hi) interval bounds, guarded features only
    region2: dict
    raw1: list  # per-class raw scores at x1
    raw2: list
    prob1: list
    prob2: list
    utility_log: float | None = None
    objective: float = 0.0


@dataclass
class Outcome:
    verdict: str
    pair: CounterexamplePair | None = None
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def is_sensitive(self):
        return self.verdict == SENSITIVE


@dataclass
class CheckResult:
    ok: bool
    reason: str | None = None

    def __bool__(self):
        return self.ok


class _Stop(Exception):
    pass


class _Found(Exception):
    pass


def _compile_tree(tree, gi, affected_ids):
    """Nested-tuple form: (None, value, affected) leaves, (f, k, yes, no) nodes."""

    def build(node):
        if isinstance(node, Leaf):
            return (None, node.value, node.leaf_id in affected_ids)
        k = gi.threshold_index(node.feature, node.threshold)
        return (node.feature, k, build(node.yes), build(node.no))

    feats = set()

    def collect(node):
        if not isinstance(node, Leaf):
            feats.add(node.feature)
            collect(node.yes)
            collect(node.no)

    collect(tree.root)
    return build(tree.root), feats


def _tree_stats(node, assign):
    """(max_all, min_all, max_affected, min_affected, reaches_unaffected)."""
    f = node[0]
    if f is None:
        v = node[1]
        if node[2]:
            return (v, v, v, v, False)
        return (v, v, None, None, True)
    a = assign[f]
    if a >= 0:
        return _tree_stats(node[2] if a < node[1] else node[3], assign)
    s1 = _tree_stats(node[2], assign)
    s2 = _tree_stats(node[3], assign)
    ma, mb = s1[2], s2[2]
    max_aff = mb if ma is None else (ma if mb is None or ma >= mb else mb)
    na, nb = s1[3], s2[3]
    min_aff = nb if na is None else (na if nb is None or na <= nb else nb)
    return (
        s1[0] if s1[0] >= s2[0] else s2[0],
        s1[1] if s1[1] <= s2[1] else s2[1],
        max_aff,
        min_aff,
        s1[4] or s2[4],
    )


def _diff_bound(st_hi, st_lo):
    """Upper bound on the reached-value difference between the two copies.

    Unaffected leaves are reached jointly or not at all, so a completion in
    which either copy lands on one contributes 0; only affected-affected
    pairs can create a difference.
    """
    best = None
    if st_hi[2] is not None and st_lo[3] is not None:
        best = st_hi[2] - st_lo[3]
    if st_hi[4] and (best is None or best < 0.0):
        best = 0.0
    return best


def _resolve_clauses(gi, clauses):
    resolved = []
    for clause in clauses or ():
        lits = []
        for f, lo, hi in clause.literals:
            lits.append((f, gi.threshold_index(f, lo), gi.threshold_index(f, hi)))
        resolved.append(tuple(lits))
    return resolved


class _Problem:
    """Compiled search view of (ensemble, guard index, query)."""

    def __init__(self, e, gi, q, level, use_bounds):
        q.validate_for(e)
        self.e = e
        self.gi = gi
        self.q = q
        self.tier = LEVELS.index(level)
        self.use_bounds = use_bounds
        self.binary = e.is_binary
        self.classes = (1, 1) if self.binary else q.classes
        self.threshold = q.delta() if self.binary else q.eta()
        self.num_classes = e.num_classes

        unaff = unaffected_leaves(e, q.features)
        affected = {leaf.leaf_id for leaf in e.leaves if leaf.leaf_id not in unaff}
        self.trees = []
        self.tree_class = []
        self.tree_feats = []
        for tree in e.trees:
            root, feats = _compile_tree(tree, gi, affected)
            self.trees.append(root)
            self.tree_class.append(1 if self.binary else tree.class_id)
            self.tree_feats.append(feats)
        self.feat_trees = {}
        for t, feats in enumerate(self.tree_feats):
            for f in feats:
                self.feat_trees.setdefault(f, []).append(t)

        self.clauses = _resolve_clauses(gi, q.clauses if q.uses_clauses else ())

        self.prob_mode = q.uses_marginals
        if self.prob_mode:
            for f in gi.guarded_features:
                if f not in q.marginals.probs:
                    raise ValueError("marginals missing guarded feature %d" % f)
            if not q.marginals.is_strictly_positive():
                raise ValueError("probability modes need strictly positive marginals")
            self.logm = {f: q.marginals.logs[f] for f in gi.guarded_features}
        else:
            self.logm = None

        self._build_decisions()

    def _affected_leaf_count(self, f):
        """Number of affected leaves whose ancestry mentions f (sensitive
        features and their path-mates rank first)."""
        count = 0

        def visit(node, under):
            nonlocal count
            if node[0] is None:
                if under and node[2]:
                    count += 1
                return
            u = under or node[0] == f
            visit(node[2], u)
            visit(node[3], u)

        for root in self.trees:
            visit(root, False)
        return count

    def _compat_potentials(self, f):
        """Per interval of f, the per-class reachable max/min with only f assigned."""
        gi = self.gi
        k = gi.num_intervals(f)
        assign = [-1] * gi.num_features
        pot_max = [[0.0] * self.num_classes for _ in range(k)]
        pot_min = [[0.0] * self.num_classes for _ in range(k)]
        for i in range(k):
            assign[f] = i
            for t in self.feat_trees.get(f, ()):
                st = _tree_stats(self.trees[t], assign)
                c = self.tree_class[t]
                pot_max[i][c] += st[0]
                pot_min[i][c] += st[1]
        return pot_max, pot_min

    def _build_decisions(self):
        gi = self.gi
        feats = gi.guarded_features
        if self.tier >= 3:
            # shared features ranked by affected-leaf count; the sensitive
            # copies branch last, where the bounds are tightest (measured
            # ~40% fewer nodes than branching them first)
            shared = sorted((f for f in feats if f not in self.q.features),
                            key=lambda f: (-self._affected_leaf_count(f), f))
            sens = sorted(f for f in feats if f in self.q.features)
            feats = shared + sens
        decisions = []
        for f in feats:
            if f in self.q.features:
                decisions.append((f, 1))
                decisions.append((f, 2))
            else:
                decisions.append((f, 0))
        self.decisions = decisions

        self.orders = []
        c1, c2 = self.classes
        for f, which in decisions:
            order = list(range(gi.num_intervals(f)))
            if self.tier >= 3:
                if self.prob_mode:
                    logs = self.logm[f]
                    order.sort(key=lambda i: (-logs[i], i))
                else:
                    pot_max, pot_min = self._compat_potentials(f)
                    if which == 1:
                        order.sort(key=lambda i: (-(pot_max[i][c1] - pot_min[i][c2]), i))
                    elif which == 2:
                        order.sort(key=lambda i: (-(pot_max[i][c2] - pot_min[i][c1]), i))
                    else:
                        # shared choice: favor intervals leaving the widest swing
                        order.sort(key=lambda i: (
                            -(pot_max[i][c1] - pot_min[i][c1]
                              + (pot_max[i][c2] - pot_min[i][c2] if c2 != c1 else 0.0)),
                            i,
                        ))
            self.orders.append(order)

        if self.prob_mode:
            gains = [
                (2.0 if which == 0 else 1.0) * max(self.logm[f])
                for f, which in decisions
            ]
            suffix = [0.0] * (len(decisions) + 1)
            for i in range(len(decisions) - 1, -1, -1):
                suffix[i] = suffix[i + 1] + gains[i]
            self.util_suffix = suffix
        else:
            self.util_suffix = None


def solve(
    e: Ensemble,
    gi: GuardIndex,
    q: SensitivityQuery,
    budget: Budget | None = None,
    level: str = "full",
    use_bounds: bool = True,
) -> Outcome:
    """Decide the query exactly by branch-and-bound over interval assignments.

    Modes ``none``/``clause`` return the first feasible pair in the guided
    order; modes ``prob``/``probclause`` return a utility-maximal pair.
    ``NotSensitive`` is claimed only after exhausting the search space; a
    spent budget yields ``Timeout`` with the best incumbent, never a verdict.
    Identical inputs and (node) budgets give identical outcomes; wall-clock
    limits trade that determinism for a hard stop.
    """
    level = level.lstrip("+")
    if level not in LEVELS:
        raise ValueError("unknown level %r" % (level,))
    budget = budget or Budget()
    started = time.perf_counter()
    prob = _Problem(e, gi, q, level, use_bounds)
    stats = SolveStats()

    nf = gi.num_features
    assign1 = [-1] * nf
    assign2 = [-1] * nf
    ntrees = len(prob.trees)
    stats1 = [None] * ntrees
    stats2 = [None] * ntrees
    for t in range(ntrees):
        stats1[t] = _tree_stats(prob.trees[t], assign1)
        stats2[t] = stats1[t]

    base = e.base_score
    binary = prob.binary
    threshold = prob.threshold
    c1, c2 = prob.classes
    tier = prob.tier
    prob_mode = prob.prob_mode
    sens_feats = prob.q.features
    decisions = prob.decisions
    orders = prob.orders
    ndec = len(decisions)

    best = {"util": None, "a1": None, "a2": None}
    found = {"a1": None, "a2": None}

    def check_budget():
        if budget.node_limit is not None and stats.nodes >= budget.node_limit:
            raise _Stop
        if budget.time_limit is not None and stats.nodes % 256 == 0:
            if time.perf_counter() - started > budget.time_limit:
                raise _Stop

    def class_sum(stats_arr, c, idx):
        s = base
        for t in range(ntrees):
            if prob.tree_class[t] == c:
                s += stats_arr[t][idx]
        return s

    def clause_blocked():
        for lits in prob.clauses:
            for assign in (assign1, assign2):
                inside = True
                for f, s, t in lits:
                    a = assign[f]
                    if a < 0 or not s <= a < t:
                        inside = False
                        break
                if inside:
                    return True
        return False

    def bound_blocked():
        if binary:
            if class_sum(stats1, 1, 0) < threshold:
                return True
            if class_sum(stats2, 1, 1) > -threshold:
                return True
            if tier >= 2:
                diff = 0.0
                for t in range(ntrees):
                    diff += _diff_bound(stats1[t], stats2[t])
                if diff < 2.0 * threshold - _DIFF_SLACK:
                    return True
            return False
        for copy_stats, target in ((stats1, c1), (stats2, c2)):
            hi = class_sum(copy_stats, target, 0)
            for c in range(prob.num_classes):
                if c != target and hi < class_sum(copy_stats, c, 1) + threshold:
                    return True
        if tier >= 2:
            diff = 0.0
            for t in range(ntrees):
                if prob.tree_class[t] == c1:
                    diff += _diff_bound(stats1[t], stats2[t])
                elif prob.tree_class[t] == c2:
                    diff += _diff_bound(stats2[t], stats1[t])
            if diff < 2.0 * threshold - _DIFF_SLACK:
                return True
        return False

    def feasible_complete():
        if binary:
            return (class_sum(stats1, 1, 0) >= threshold
                    and class_sum(stats2, 1, 0) <= -threshold)
        for copy_stats, target in ((stats1, c1), (stats2, c2)):
            raws = [class_sum(copy_stats, c, 0) for c in range(prob.num_classes)]
            for c in range(prob.num_classes):
                if c != target and not raws[target] >= raws[c] + threshold:
                    return False
        return True

    def dfs(depth, util_so_far):
        stats.nodes += 1
        check_budget()

        if prob.clauses and clause_blocked():
            stats.pruned_clause += 1
            return
        if depth < ndec and use_bounds:
            if bound_blocked():
                stats.pruned_bound += 1
                return
            if prob_mode and best["util"] is not None:
                if util_so_far + prob.util_suffix[depth] <= best["util"] + _UTIL_SLACK:
                    stats.pruned_bound += 1
                    return
        if depth == ndec:
            if not feasible_complete():
                return
            if prob_mode:
                if best["util"] is None or util_so_far > best["util"]:
                    best["util"] = util_so_far
                    best["a1"] = assign1.copy()
                    best["a2"] = assign2.copy()
                return
            found["a1"] = assign1.copy()
            found["a2"] = assign2.copy()
            raise _Found

        f, which = decisions[depth]
        affected_trees = prob.feat_trees.get(f, ())
        old1 = [stats1[t] for t in affected_trees]
        old2 = [stats2[t] for t in affected_trees]
        logs = prob.logm[f] if prob_mode else None
        for i in orders[depth]:
            if which == 0:
                assign1[f] = i
                assign2[f] = i
                for t in affected_trees:
                    st = _tree_stats(prob.trees[t], assign1)
                    stats1[t] = st
                    # copies diverge only inside trees that mention a sensitive feature
                    if prob.tree_feats[t] & sens_feats:
                        stats2[t] = _tree_stats(prob.trees[t], assign2)
                    else:
                        stats2[t] = st
                gain = 2.0 * logs[i] if prob_mode else 0.0
            elif which == 1:
                assign1[f] = i
                for t in affected_trees:
                    stats1[t] = _tree_stats(prob.trees[t], assign1)
                gain = logs[i] if prob_mode else 0.0
            else:
                assign2[f] = i
                for t in affected_trees:
                    stats2[t] = _tree_stats(prob.trees[t], assign2)
                gain = logs[i] if prob_mode else 0.0
            dfs(depth + 1, util_so_far + gain)
        if which in (0, 1):
            assign1[f] = -1
        if which in (0, 2):
            assign2[f] = -1
        for idx, t in enumerate(affected_trees):
            stats1[t] = old1[idx]
            stats2[t] = old2[idx]

    verdict = NOT_SENSITIVE
    pair = None
    try:
        dfs(0, 0.0)
        if prob_mode and best["a1"] is not None:
            verdict = SENSITIVE
            pair = _build_pair(e, gi, q, _to_dict(gi, best["a1"]), _to_dict(gi, best["a2"]))
        elif not prob_mode and found["a1"] is not None:
            verdict = SENSITIVE
            pair = _build_pair(e, gi, q, _to_dict(gi, found["a1"]), _to_dict(gi, found["a2"]))
    except _Found:
        verdict = SENSITIVE
        pair = _build_pair(e, gi, q, _to_dict(gi, found["a1"]), _to_dict(gi, found["a2"]))
    except _Stop:
        verdict = TIMEOUT
        if prob_mode and best["a1"] is not None:
            pair = _build_pair(e, gi, q, _to_dict(gi, best["a1"]), _to_dict(gi, best["a2"]))
    stats.wall_time = time.perf_counter() - started
    return Outcome(verdict, pair, stats)


def _to_dict(gi, assign_list):
    return {f: assign_list[f] for f in gi.guarded_features}


def _build_pair(e, gi, q, a1, a2):
    x1 = representative_input(gi, a1)
    x2 = representative_input(gi, a2)
    region1 = {f: gi.interval_bounds(f, a1[f]) for f in gi.guarded_features}
    region2 = {f: gi.interval_bounds(f, a2[f]) for f in gi.guarded_features}
    raw1 = [raw_score(e, x1, c) for c in range(e.num_classes)]
    raw2 = [raw_score(e, x2, c) for c in range(e.num_classes)]
    prob1 = predict_prob(e, x1)
    prob2 = predict_prob(e, x2)
    util = utility_log(q.marginals, x1, x2) if q.marginals is not None else None
    if q.uses_marginals:
        objective = util + objective_coeffs(q.marginals, gi).constant
    elif e.is_binary:
        objective = raw1[1] - raw2[1]
    else:
        c1, c2 = q.classes
        objective = (raw1[c1] - raw2[c1]) + (raw2[c2] - raw1[c2])
    return CounterexamplePair(x1, x2, region1, region2, raw1, raw2, prob1, prob2, util, objective)


def brute_force_oracle(
    e: Ensemble,
    gi: GuardIndex,
    q: SensitivityQuery,
    cap: int = 10_000_000,
) -> Outcome:
    """Ground-truth oracle: exhaustive enumeration over the interval grid.

    Shared assignments range over guarded features outside the sensitive set,
    per-copy assignments over guarded sensitive features.  Every candidate is
    materialized as a concrete input and evaluated by plain tree traversal,
    independently of the solver's interval arithmetic.  Probability modes
    return the exact utility maximum.
    """
    q.validate_for(e)
    started = time.perf_counter()
    binary = e.is_binary
    delta = q.delta() if binary else None
    eta = q.eta() if not binary else None
    t1, t2 = (1, 1) if binary else q.classes
    clauses = q.clauses if q.uses_clauses else ()
    marginals = q.marginals

    shared = [f for f in gi.guarded_features if f not in q.features]
    sens = [f for f in gi.guarded_features if f in q.features]
    states = 1
    for f in shared:
        states *= gi.num_intervals(f)
    per_copy = 1
    for f in sens:
        per_copy *= gi.num_intervals(f)
    if states * per_copy * per_copy > cap:
        raise OracleCapError("state space %d exceeds cap %d" % (states * per_copy * per_copy, cap))

    reps = {
        f: [interval_representative(*gi.interval_bounds(f, i)) for i in range(gi.num_intervals(f))]
        for f in gi.guarded_features
    }

    def raws_of(x):
        if binary:
            s = e.base_score
            for tree in e.trees:
                s += tree(x)
            return (s,)
        out = [e.base_score] * e.num_classes
        for tree in e.trees:
            out[tree.class_id] += tree(x)
        return out

    def copy_ok(raws, copy, target):
        if binary:
            return raws[0] >= delta if copy == 1 else raws[0] <= -delta
        for c in range(e.num_classes):
            if c != target and not raws[target] >= raws[c] + eta:
                return False
        return True

    stats = SolveStats()
    x = [0.0] * gi.num_features
    shared_ranges = [range(gi.num_intervals(f)) for f in shared]
    sens_ranges = [range(gi.num_intervals(f)) for f in sens]
    exhaustive = q.uses_marginals  # utility max needs every feasible candidate

    best_util = None
    best_state = None
    first_state = None

    for shared_combo in product(*shared_ranges):
        for f, i in zip(shared, shared_combo):
            x[f] = reps[f][i]
        feas = {1: [], 2: []}
        for copy, target in ((1, t1), (2, t2)):
            if copy == 2 and not feas[1]:
                break
            for sens_combo in product(*sens_ranges):
                for f, i in zip(sens, sens_combo):
                    x[f] = reps[f][i]
                stats.nodes += 1
                raws = raws_of(x)
                ok = copy_ok(raws, copy, target)
                if ok and clauses:
                    ok = all(clause_satisfied(c, x) for c in clauses)
                if not ok:
                    continue
                util = 0.0
                if marginals is not None:
                    for f, i in zip(sens, sens_combo):
                        util += marginals.logs[f][i]
                feas[copy].append((sens_combo, util))
                if not exhaustive:
                    break
        if not feas[1] or not feas[2]:
            continue
        if not exhaustive:
            first_state = (shared_combo, feas[1][0][0], feas[2][0][0])
            break
        su = 0.0
        for f, i in zip(shared, shared_combo):
            su += 2.0 * marginals.logs[f][i]
        cand1, util1 = _arg_best(feas[1])
        cand2, util2 = _arg_best(feas[2])
        cand = su + util1 + util2
        if best_util is None or cand > best_util:
            best_util = cand
            best_state = (shared_combo, cand1, cand2)

    chosen = best_state if exhaustive else first_state
    stats.wall_time = time.perf_counter() - started
    if chosen is None:
        return Outcome(NOT_SENSITIVE, None, stats)
    shared_combo, s1, s2 = chosen
    a1 = {f: i for f, i in zip(shared, shared_combo)}
    a2 = dict(a1)
    for f, i in zip(sens, s1):
        a1[f] = i
    for f, i in zip(sens, s2):
        a2[f] = i
    pair = _build_pair(e, gi, q, a1, a2)
    return Outcome(SENSITIVE, pair, stats)


def _arg_best(entries):
    """First entry attaining the maximum utility; entries are (combo, util)."""
    best_combo, best_util = entries[0]
    for combo, util in entries[1:]:
        if util > best_util:
            best_combo, best_util = combo, util
    return best_combo, best_util


def check_pair(e: Ensemble, q: SensitivityQuery, pair: CounterexamplePair) -> CheckResult:
    """Certify a counterexample pair against the query, with a reason on failure.

    Agreement outside the sensitive set must hold exactly; the gap/ratio
    conditions are checked within 1e-9; clause modes additionally require
    both points to satisfy every clause.
    """
    tol = 1e-9
    for f in range(e.num_features):
        if f not in q.features and pair.x1[f] != pair.x2[f]:
            return CheckResult(False, "agreement")
    if e.is_binary:
        raw1 = raw_score(e, pair.x1, 1)
        raw2 = raw_score(e, pair.x2, 1)
        if q.prob_gap is not None:
            g = q.prob_gap
            if not (sigmoid(raw1) >= 0.5 + g - tol and sigmoid(raw2) <= 0.5 - g + tol):
                return CheckResult(False, "gap")
        else:
            d = q.delta()
            if not (raw1 >= d - tol and raw2 <= -d + tol):
                return CheckResult(False, "gap")
    else:
        g = q.ratio_gap
        c1, c2 = q.classes
        p1 = predict_prob(e, pair.x1)
        p2 = predict_prob(e, pair.x2)
        for c in range(e.num_classes):
            if c != c1 and not p1[c1] >= g * p1[c] - tol:
                return CheckResult(False, "gap")
            if c != c2 and not p2[c2] >= g * p2[c] - tol:
                return CheckResult(False, "gap")
    if q.uses_clauses:
        for clause in q.clauses:
            if not (clause_satisfied(clause, pair.x1) and clause_satisfied(clause, pair.x2)):
                return CheckResult(False, "clause")
    return CheckResult(True, None)


def depth1_poly_check(e: Ensemble, features, max_free: int = 16, max_states: int = 2_000_000) -> bool:
    """Polynomial-time sensitivity check for stump ensembles (strict signs, zero gap).

    Groups stumps by split feature; sensitive-feature groups contribute their
    reachable min/max sums, and all value combinations of the remaining
    groups are enumerated.  True when some shared contribution c admits both
    c + M > 0 and c + m < 0.
    """
    fs = set(features)
    const = e.base_score
    groups = {}
    for t, tree in enumerate(e.trees):
        if isinstance(tree.root, Leaf):
            const += tree.root.value
            continue
        root = tree.root
        if not (isinstance(root.yes, Leaf) and isinstance(root.no, Leaf)):
            raise ValueError("tree %d has depth > 1" % t)
        groups.setdefault(root.feature, []).append((root.threshold, root.yes.value, root.no.value))

    def group_values(stumps):
        cuts = sorted({tau for tau, _, _ in stumps})
        values = []
        for i in range(len(cuts) + 1):
            total = 0.0
            for tau, yes, no in stumps:
                j = cuts.index(tau) + 1
                total += yes if i < j else no
            values.append(total)
        return values

    lo = hi = 0.0
    for f in sorted(groups):
        if f in fs:
            vals = group_values(groups[f])
            lo += min(vals)
            hi += max(vals)

    free = [f for f in sorted(groups) if f not in fs]
    if len(free) > max_free:
        raise ValueError("too many free features: %d > %d" % (len(free), max_free))
    states = 1
    value_lists = []
    for f in free:
        vals = group_values(groups[f])
        states *= len(vals)
        if states > max_states:
            raise ValueError("free-feature state space exceeds %d" % max_states)
        value_lists.append(vals)

    for combo in product(*value_lists):
        c = const + sum(combo)
        if c + hi > 0 and c + lo < 0:
            return True
    return False
