"""Commitment approximation by enumerating an eps-grid of leader mixtures.

For every leader mixed strategy whose probabilities are multiples of
``eps = 1/k``, the follower's exact best-response value is computed, the
follower is then relaxed to any response within ``2*n*eps*M`` of it
(n = leader pure strategies, M = largest payoff magnitude), and the relaxed
response maximizing the leader's payoff is recorded. The best recorded pair
is a ``2*n*eps*M``-approximate commitment solution: its leader payoff is at
most that much below the exact optimum, and its response is that close to a
follower best response.

Grid points are enumerated as integer numerators over k, so membership in
the grid is exact; only payoff evaluation uses floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterator, Union

import numpy as np

from .bimatrix import BimatrixGame, MixedStrategy
from .errors import InputError, SizeLimitError

DEFAULT_GRID_CAP = 10_000_000
_CHUNK = 16384


@dataclass(frozen=True)
class GridParams:
    """The grid resolution eps = 1/k, stored as the integer k."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise InputError("k must be a positive integer")

    @property
    def eps(self) -> float:
        return 1.0 / self.k

    @property
    def eps_fraction(self) -> Fraction:
        return Fraction(1, self.k)

    @classmethod
    def from_eps(cls, eps: Union[float, str, Fraction]) -> "GridParams":
        value = Fraction(eps) if not isinstance(eps, float) else None
        if value is None:
            k = round(1.0 / eps)
            if k < 1 or abs(k * eps - 1.0) > 1e-9:
                raise InputError("1/eps must be a positive integer")
            return cls(k)
        if value <= 0 or value.numerator != 1:
            raise InputError("1/eps must be a positive integer")
        return cls(value.denominator)


@dataclass(frozen=True)
class ApproxSolution:
    leader: MixedStrategy
    follower_response: int
    leader_payoff: float
    follower_payoff: float
    slack: float  # = 2*n*eps*M
    max_payoff: float  # M
    grid_size: int
    candidates_examined: int


def grid_size(n: int, params: GridParams) -> int:
    return comb(n + params.k - 1, n - 1)


def _compositions(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """All length-n tuples of nonnegative ints summing to k, in lex order."""
    if n == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(n - 1, k - first):
            yield (first,) + rest


def grid_strategies(n: int, params: GridParams, cap: int = DEFAULT_GRID_CAP) -> list[MixedStrategy]:
    """Every mixed strategy with probabilities in {0, eps, 2 eps, ..., 1}."""
    if n < 1:
        raise InputError("n must be at least 1")
    count = grid_size(n, params)
    if count > cap:
        raise SizeLimitError(f"grid has {count} points, above the cap of {cap}")
    return [
        MixedStrategy(tuple(c / params.k for c in combo)) for combo in _compositions(n, params.k)
    ]


def max_abs_payoff(game: BimatrixGame) -> float:
    """M: the largest payoff magnitude across both matrices."""
    return float(max(np.abs(game.u_leader).max(), np.abs(game.u_follower).max()))


def almost_best_responses(game: BimatrixGame, x, slack: float) -> set[int]:
    """Columns whose follower payoff is within ``slack`` of the best one."""
    if slack < 0:
        raise InputError("slack must be nonnegative")
    strat = x if isinstance(x, MixedStrategy) else MixedStrategy(tuple(x))
    vals = strat.as_array() @ game.u_follower
    return {j for j in range(game.m) if vals[j] >= vals.max() - slack - 1e-12}


def discretized_se(
    game: BimatrixGame, params: GridParams, cap: int = DEFAULT_GRID_CAP
) -> ApproxSolution:
    """Best recorded (grid strategy, relaxed response) pair.

    Ties on leader payoff keep the lexicographically first grid strategy;
    within one grid point, ties keep the lowest column index.
    """
    n, m = game.n, game.m
    count = grid_size(n, params)
    if count > cap:
        raise SizeLimitError(f"grid has {count} points, above the cap of {cap}")
    big_m = max_abs_payoff(game)
    slack = 2.0 * n * params.eps * big_m
    ul = game.u_leader
    uf = game.u_follower
    best: tuple[float, tuple[int, ...], int, float] | None = None  # payoff, numerators, j, fpay

    chunk: list[tuple[int, ...]] = []

    def flush(chunk_rows: list[tuple[int, ...]]) -> None:
        nonlocal best
        if not chunk_rows:
            return
        xs = np.asarray(chunk_rows, dtype=float) / params.k
        fvals = xs @ uf
        lvals = xs @ ul
        tops = fvals.max(axis=1, keepdims=True)
        allowed = fvals >= tops - slack - 1e-12
        masked = np.where(allowed, lvals, -np.inf)
        picks = masked.argmax(axis=1)
        rows = np.arange(len(chunk_rows))
        values = masked[rows, picks]
        for i in range(len(chunk_rows)):
            if best is None or values[i] > best[0]:
                best = (float(values[i]), chunk_rows[i], int(picks[i]), float(fvals[i, picks[i]]))

    for combo in _compositions(n, params.k):
        chunk.append(combo)
        if len(chunk) >= _CHUNK:
            flush(chunk)
            chunk = []
    flush(chunk)
    assert best is not None
    payoff, numerators, j, fpay = best
    return ApproxSolution(
        leader=MixedStrategy(tuple(c / params.k for c in numerators)),
        follower_response=j,
        leader_payoff=payoff,
        follower_payoff=fpay,
        slack=slack,
        max_payoff=big_m,
        grid_size=count,
        candidates_examined=count,
    )


def verify_eps_approx(game: BimatrixGame, sol: ApproxSolution, exact_leader_payoff: float) -> bool:
    """Recheck both approximation clauses with eps = sol.slack.

    The follower must be within ``slack`` of its best response against the
    recorded leader strategy, and the leader payoff at most ``slack`` below
    the exact commitment value (values above it are legal because the
    follower is relaxed).
    """
    xv = sol.leader.as_array()
    fvals = xv @ game.u_follower
    if fvals[sol.follower_response] < fvals.max() - sol.slack - 1e-9:
        return False
    return sol.leader_payoff >= exact_leader_payoff - sol.slack - 1e-9


def solution_to_json_obj(sol: ApproxSolution) -> dict:
    return {
        "leader": list(sol.leader.probs),
        "followerResponse": sol.follower_response,
        "leaderPayoff": sol.leader_payoff,
        "followerPayoff": sol.follower_payoff,
        "slack": sol.slack,
        "M": sol.max_payoff,
        "gridSize": sol.grid_size,
        "candidatesExamined": sol.candidates_examined,
    }
