"""The permuted matching game, its approximation, and the 3DM reduction.

Both players pick matchings of a shared multigraph with an edge permutation
``pi``; the leader scores ``|M_L ∩ pi(M_F)|`` and the follower
``|M_L ∩ M_F|``. Best responses reduce to maximum-weight matchings under
marginal edge probabilities. The greedy pair algorithm plus the
(1/3-eps, 2/3+eps) two-point mixture gives the (1-3eps)/12 guarantee, and
``reduce_3dm``/``lift_3dm``/``extract_3dm`` implement the reduction that
makes finding a matching identical to its pi-image (pi-TIM) as hard as
maximum 3-dimensional matching.

Everything brute-force is capped at 12 edges; the corpora that exercise the
guarantees stay well below that.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .bimatrix import BimatrixGame
from .errors import InputError, SizeLimitError

BRUTE_FORCE_EDGE_LIMIT = 12
WEIGHT_TOL = 1e-9

Matching = frozenset  # of edge ids


@dataclass(frozen=True)
class Multigraph:
    """Undirected multigraph; edge ids are positions in ``edges``."""

    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise InputError("edge endpoint out of range")
            if u == v:
                raise InputError("self-loops are not allowed")
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))

    @property
    def num_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class PermMatchInstance:
    graph: Multigraph
    pi: tuple[int, ...]

    def __post_init__(self):
        e = self.graph.num_edges
        pi = tuple(int(v) for v in self.pi)
        if sorted(pi) != list(range(e)):
            raise InputError("pi must be a bijection over the edge ids")
        object.__setattr__(self, "pi", pi)
        inv = [0] * e
        for src, dst in enumerate(pi):
            inv[dst] = src
        object.__setattr__(self, "_pi_inv", tuple(inv))

    def pi_image(self, edges: Iterable[int]) -> Matching:
        return frozenset(self.pi[e] for e in edges)

    def pi_inverse(self, edge: int) -> int:
        return self._pi_inv[edge]


def as_matching(graph: Multigraph, edge_ids: Iterable[int]) -> Matching:
    """Validate vertex-disjointness and return the edge set."""
    ids = frozenset(int(e) for e in edge_ids)
    seen: set[int] = set()
    for e in ids:
        if not 0 <= e < graph.num_edges:
            raise InputError(f"unknown edge id {e}")
        u, v = graph.edges[e]
        if u in seen or v in seen:
            raise InputError("edge set is not a matching")
        seen.add(u)
        seen.add(v)
    return ids


@dataclass(frozen=True)
class TwoPointLeaderStrategy:
    """A finite-support leader mixture over matchings."""

    support: tuple[tuple[Matching, float], ...]

    def __post_init__(self):
        probs = [p for _, p in self.support]
        if any(p < -1e-12 for p in probs):
            raise InputError("negative probability in leader support")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise InputError("leader support probabilities must sum to 1")
        object.__setattr__(
            self, "support", tuple((frozenset(m), float(p)) for m, p in self.support)
        )


StrategyLike = Union[TwoPointLeaderStrategy, Sequence[tuple[Matching, float]]]


def _support(inst: PermMatchInstance, x: StrategyLike) -> list[tuple[Matching, float]]:
    pairs = x.support if isinstance(x, TwoPointLeaderStrategy) else tuple(x)
    out = []
    for m, p in pairs:
        out.append((as_matching(inst.graph, m), float(p)))
    if abs(sum(p for _, p in out) - 1.0) > 1e-9:
        raise InputError("matching distribution must sum to 1")
    return out


def pm_utilities(inst: PermMatchInstance, m_leader: Iterable[int], m_follower: Iterable[int]) -> tuple[int, int]:
    """(leader, follower) payoffs: |M_L ∩ pi(M_F)| and |M_L ∩ M_F|."""
    ml = as_matching(inst.graph, m_leader)
    mf = as_matching(inst.graph, m_follower)
    return len(ml & inst.pi_image(mf)), len(ml & mf)


def common_dist(x: Iterable[int], y: Iterable[int]) -> tuple[int, int]:
    """(|x ∩ y|, |x| + |y| - 2|x ∩ y|); the second term is a metric."""
    xs, ys = frozenset(x), frozenset(y)
    common = len(xs & ys)
    return common, len(xs) + len(ys) - 2 * common


def enumerate_matchings(graph: Multigraph, limit: Optional[int] = None) -> list[Matching]:
    """All matchings (including the empty one), in a fixed generation order."""
    out: list[Matching] = []
    chosen: list[int] = []
    used: set[int] = set()

    def recurse(idx: int) -> None:
        if idx == graph.num_edges:
            out.append(frozenset(chosen))
            if limit is not None and len(out) > limit:
                raise SizeLimitError(f"more than {limit} matchings")
            return
        recurse(idx + 1)
        u, v = graph.edges[idx]
        if u not in used and v not in used:
            chosen.append(idx)
            used.update((u, v))
            recurse(idx + 1)
            used.difference_update((u, v))
            chosen.pop()

    recurse(0)
    return out


def max_weight_matching(graph: Multigraph, weights: Sequence[float]) -> Matching:
    """Exact maximum-weight matching by branch and bound.

    Edges with nonpositive weight are never included. Among maximizers
    (weights within 1e-12) the lexicographically smallest sorted edge-id
    set wins, which keeps results reproducible across runs.
    """
    if len(weights) != graph.num_edges:
        raise InputError("one weight per edge required")
    cand = [e for e in range(graph.num_edges) if weights[e] > 0 and np.isfinite(weights[e])]
    if any(not np.isfinite(w) for w in weights):
        raise InputError("weights must be finite")
    suffix = [0.0] * (len(cand) + 1)
    for i in range(len(cand) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + weights[cand[i]]
    best_w = 0.0
    best_set: tuple[int, ...] = ()
    chosen: list[int] = []
    used: set[int] = set()

    def recurse(idx: int, total: float) -> None:
        nonlocal best_w, best_set
        if total + suffix[idx] < best_w - 1e-12:
            return
        if idx == len(cand):
            key = tuple(sorted(chosen))
            if total > best_w + 1e-12 or (abs(total - best_w) <= 1e-12 and key < best_set):
                best_w = total
                best_set = key
            return
        e = cand[idx]
        u, v = graph.edges[e]
        if u not in used and v not in used:
            chosen.append(e)
            used.update((u, v))
            recurse(idx + 1, total + weights[e])
            used.difference_update((u, v))
            chosen.pop()
        recurse(idx + 1, total)

    recurse(0, 0.0)
    return frozenset(best_set)


def _marginals(inst: PermMatchInstance, support: list[tuple[Matching, float]]) -> list[float]:
    w = [0.0] * inst.graph.num_edges
    for m, p in support:
        for e in m:
            w[e] += p
    return w


def _expected_leader(inst: PermMatchInstance, support, m_follower: Matching) -> float:
    image = inst.pi_image(m_follower)
    return sum(p * len(m & image) for m, p in support)


def follower_best_response_pm(inst: PermMatchInstance, x: StrategyLike) -> Matching:
    """Follower's maximum-weight matching under the leader's edge marginals.

    Up to 12 edges, weight ties (1e-9) break toward the matching with the
    best expected leader payoff and then the smallest sorted edge-id set;
    larger graphs fall back to the deterministic single optimum and warn.
    """
    support = _support(inst, x)
    weights = _marginals(inst, support)
    if inst.graph.num_edges > BRUTE_FORCE_EDGE_LIMIT:
        warnings.warn(
            "graph exceeds the leader-favoring enumeration limit; "
            "returning a deterministic max-weight matching without the tie-break",
            RuntimeWarning,
            stacklevel=2,
        )
        return max_weight_matching(inst.graph, weights)
    best = None
    for m in enumerate_matchings(inst.graph):
        w = sum(weights[e] for e in m)
        l = _expected_leader(inst, support, m)
        key = tuple(sorted(m))
        if best is None:
            best = (w, l, key, m)
            continue
        bw, bl, bkey, _ = best
        if w > bw + WEIGHT_TOL:
            best = (w, l, key, m)
        elif w >= bw - WEIGHT_TOL:
            if l > bl + WEIGHT_TOL or (abs(l - bl) <= WEIGHT_TOL and key < bkey):
                best = (w, l, key, m)
    assert best is not None
    return best[3]


def leader_best_response_pm(inst: PermMatchInstance, y: StrategyLike) -> Matching:
    """Leader's best response: weights are P[pi^{-1}(e) in M_F]."""
    support = _support(inst, y)
    weights = [0.0] * inst.graph.num_edges
    for m, p in support:
        for e in m:
            weights[inst.pi[e]] += p
    return max_weight_matching(inst.graph, weights)


def greedy_pair(
    inst: PermMatchInstance, edge_order: Optional[Sequence[int]] = None
) -> tuple[Matching, Matching]:
    """One pass of the pairing greedy: scan e', pair it with e = pi(e').

    Adds e to x and e' to x' whenever e is vertex-disjoint from x and e'
    vertex-disjoint from x'; afterwards no admissible pair remains and
    pi(x') = x, so |x| = |x'| = |x ∩ pi(x')|.
    """
    order = list(range(inst.graph.num_edges)) if edge_order is None else list(edge_order)
    if sorted(order) != list(range(inst.graph.num_edges)):
        raise InputError("edge_order must cover every edge exactly once")
    x_used: set[int] = set()
    xp_used: set[int] = set()
    x: set[int] = set()
    xp: set[int] = set()
    for ep in order:
        e = inst.pi[ep]
        eu, ev = inst.graph.edges[e]
        pu, pv = inst.graph.edges[ep]
        if eu in x_used or ev in x_used or pu in xp_used or pv in xp_used:
            continue
        x.add(e)
        x_used.update((eu, ev))
        xp.add(ep)
        xp_used.update((pu, pv))
    return frozenset(x), frozenset(xp)


def opt_pure_pair(inst: PermMatchInstance) -> tuple[Matching, Matching, int]:
    """Exact max over pure pairs of |y ∩ pi(y')| (12-edge brute force).

    Equivalent to picking the largest set of (pi(e'), e') pairs whose first
    components form a matching and whose second components form a matching.
    """
    e = inst.graph.num_edges
    if e > BRUTE_FORCE_EDGE_LIMIT:
        raise SizeLimitError(f"opt_pure_pair is limited to {BRUTE_FORCE_EDGE_LIMIT} edges")
    pairs = [(inst.pi[ep], ep) for ep in range(e)]
    best = (0, frozenset(), frozenset())
    y_used: set[int] = set()
    yp_used: set[int] = set()
    y: list[int] = []
    yp: list[int] = []

    def recurse(idx: int) -> None:
        nonlocal best
        if len(y) + (len(pairs) - idx) <= best[0]:
            return
        if idx == len(pairs):
            if len(y) > best[0]:
                best = (len(y), frozenset(y), frozenset(yp))
            return
        fe, se = pairs[idx]
        fu, fv = inst.graph.edges[fe]
        su, sv = inst.graph.edges[se]
        if fu not in y_used and fv not in y_used and su not in yp_used and sv not in yp_used:
            y.append(fe)
            yp.append(se)
            y_used.update((fu, fv))
            yp_used.update((su, sv))
            recurse(idx + 1)
            y.pop()
            yp.pop()
            y_used.difference_update((fu, fv))
            yp_used.difference_update((su, sv))
        recurse(idx + 1)

    recurse(0)
    value, y_set, yp_set = best
    return y_set, yp_set, value


def approx_leader_strategy(inst: PermMatchInstance, eps: float) -> TwoPointLeaderStrategy:
    """The two-point mixture: greedy x with weight 1/3-eps, x' with 2/3+eps."""
    if not 0 < eps < 1 / 3:
        raise InputError("eps must lie strictly between 0 and 1/3")
    x, xp = greedy_pair(inst)
    p = 1 / 3 - eps
    return TwoPointLeaderStrategy(((x, p), (xp, 1.0 - p)))


def approx_solve(inst: PermMatchInstance, eps: float) -> tuple[TwoPointLeaderStrategy, Matching, float]:
    """Two-point strategy, the follower's response, and the leader's payoff.

    The payoff is guaranteed to be at least (1-3eps)/12 of the exact
    commitment optimum.
    """
    strategy = approx_leader_strategy(inst, eps)
    response = follower_best_response_pm(inst, strategy)
    value = _expected_leader(inst, list(strategy.support), response)
    return strategy, response, value


def pitim_value(inst: PermMatchInstance, m: Iterable[int]) -> int:
    """|M ∩ pi(M)| for a single matching."""
    ids = as_matching(inst.graph, m)
    return len(ids & inst.pi_image(ids))


def bruteforce_pitim(inst: PermMatchInstance) -> tuple[Matching, int]:
    """Exact pi-TIM optimum by matching enumeration (12-edge limit)."""
    if inst.graph.num_edges > BRUTE_FORCE_EDGE_LIMIT:
        raise SizeLimitError(f"bruteforce_pitim is limited to {BRUTE_FORCE_EDGE_LIMIT} edges")
    best: tuple[int, Matching] = (-1, frozenset())
    for m in enumerate_matchings(inst.graph):
        v = len(m & inst.pi_image(m))
        if v > best[0]:
            best = (v, m)
    return best[1], best[0]


def extract_pitim_from_se(
    inst: PermMatchInstance, x: StrategyLike, y: Iterable[int]
) -> tuple[Matching, int]:
    """Read a pi-TIM candidate off a commitment solution.

    The follower's (near-)best response itself is the candidate: when the
    pair is close to optimal on a yes-instance, y is close to pi(y), so its
    pi-TIM value is close to maximal.
    """
    del x  # the leader's mixture certifies quality but is not needed here
    ids = as_matching(inst.graph, y)
    return ids, pitim_value(inst, ids)


def explicit_bimatrix(inst: PermMatchInstance, max_matchings: int = 4096) -> tuple[BimatrixGame, list[Matching]]:
    """The game in explicit form, one pure strategy per matching."""
    matchings = enumerate_matchings(inst.graph, limit=max_matchings)
    images = [inst.pi_image(m) for m in matchings]
    k = len(matchings)
    ul = np.zeros((k, k))
    uf = np.zeros((k, k))
    for i, mi in enumerate(matchings):
        for j, mj in enumerate(matchings):
            ul[i, j] = len(mi & images[j])
            uf[i, j] = len(mi & mj)
    return BimatrixGame(ul, uf), matchings


# ---------------------------------------------------------------------------
# 3-dimensional matching reduction


@dataclass(frozen=True)
class ThreeDMInstance:
    n_a: int
    n_b: int
    n_c: int
    triples: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if min(self.n_a, self.n_b, self.n_c) < 0:
            raise InputError("part sizes must be nonnegative")
        for a, b, c in self.triples:
            if not (0 <= a < self.n_a and 0 <= b < self.n_b and 0 <= c < self.n_c):
                raise InputError("triple index out of range")
        object.__setattr__(
            self, "triples", tuple((int(a), int(b), int(c)) for a, b, c in self.triples)
        )


@dataclass(frozen=True)
class ReductionMap:
    """Bookkeeping for the 3DM -> permuted-matching construction.

    Vertices: A' = [0, n_a), A'' = [n_a, 2n_a), B' = [2n_a, 2n_a+n_b),
    C' = [2n_a+n_b, 2n_a+n_b+n_c). Triple t owns edges 2t (a'-b') and
    2t+1 (a''-c'), and pi swaps the two.
    """

    n_a: int
    n_b: int
    n_c: int
    triples: tuple[tuple[int, int, int], ...]
    per_triple: tuple[tuple[int, int], ...]


def reduce_3dm(tdm: ThreeDMInstance) -> tuple[PermMatchInstance, ReductionMap]:
    edges = []
    pi = []
    for a, b, c in tdm.triples:
        edges.append((a, 2 * tdm.n_a + b))
        edges.append((tdm.n_a + a, 2 * tdm.n_a + tdm.n_b + c))
        pi.extend([len(edges) - 1, len(edges) - 2])
    graph = Multigraph(2 * tdm.n_a + tdm.n_b + tdm.n_c, tuple(edges))
    inst = PermMatchInstance(graph, tuple(pi))
    rmap = ReductionMap(
        tdm.n_a,
        tdm.n_b,
        tdm.n_c,
        tdm.triples,
        tuple((2 * t, 2 * t + 1) for t in range(len(tdm.triples))),
    )
    return inst, rmap


def lift_3dm(rmap: ReductionMap, selected: Iterable[int]) -> Matching:
    """Edges of the reduced graph realizing a 3D matching, value 2|selected|."""
    chosen = sorted(set(int(t) for t in selected))
    seen_a: set[int] = set()
    seen_b: set[int] = set()
    seen_c: set[int] = set()
    for t in chosen:
        if not 0 <= t < len(rmap.triples):
            raise InputError(f"unknown triple index {t}")
        a, b, c = rmap.triples[t]
        if a in seen_a or b in seen_b or c in seen_c:
            raise InputError("selected triples are not a 3D matching")
        seen_a.add(a)
        seen_b.add(b)
        seen_c.add(c)
    out: set[int] = set()
    for t in chosen:
        out.update(rmap.per_triple[t])
    return frozenset(out)


def extract_3dm(rmap: ReductionMap, inst: PermMatchInstance, mp: Iterable[int]) -> set[int]:
    """Triples whose both reduction edges appear in the matching ``mp``."""
    ids = as_matching(inst.graph, mp)
    return {t for t, (e1, e2) in enumerate(rmap.per_triple) if e1 in ids and e2 in ids}


# ---------------------------------------------------------------------------
# JSON


def permmatch_from_json(text: str) -> PermMatchInstance:
    data = json.loads(text)
    entries = sorted(data["edges"], key=lambda e: e["id"])
    if [e["id"] for e in entries] != list(range(len(entries))):
        raise InputError("edge ids must be exactly 0..E-1")
    graph = Multigraph(int(data["vertices"]), tuple((int(e["u"]), int(e["v"])) for e in entries))
    return PermMatchInstance(graph, tuple(int(v) for v in data["pi"]))


def permmatch_to_json_obj(inst: PermMatchInstance) -> dict:
    return {
        "vertices": inst.graph.num_vertices,
        "edges": [{"id": i, "u": u, "v": v} for i, (u, v) in enumerate(inst.graph.edges)],
        "pi": list(inst.pi),
    }


def threedm_from_json(text: str) -> ThreeDMInstance:
    data = json.loads(text)
    return ThreeDMInstance(
        int(data["nA"]),
        int(data["nB"]),
        int(data["nC"]),
        tuple((int(a), int(b), int(c)) for a, b, c in data["triples"]),
    )


def threedm_to_json_obj(tdm: ThreeDMInstance) -> dict:
    return {
        "nA": tdm.n_a,
        "nB": tdm.n_b,
        "nC": tdm.n_c,
        "triples": [list(t) for t in tdm.triples],
    }
