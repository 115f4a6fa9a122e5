"""Explicit two-player general-sum games and their exact solvers.

The leader commits to a mixed strategy; the follower observes it and plays a
pure best response, breaking payoff ties in the leader's favor. On top of
that model this module provides the Multiple-LPs commitment solver, maximin
strategies, and Nash equilibria via support enumeration, all of which serve
as exact oracles for the approximation modules.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from . import lp
from .errors import InputError, SizeLimitError, ToolkitError

TIE_TOL = 1e-9

LEADER = "leader"
FOLLOWER = "follower"


@dataclass(frozen=True)
class BimatrixGame:
    """An n x m game given by leader and follower payoff matrices."""

    u_leader: np.ndarray
    u_follower: np.ndarray

    def __post_init__(self):
        ul = np.asarray(self.u_leader, dtype=float)
        uf = np.asarray(self.u_follower, dtype=float)
        if ul.ndim != 2 or ul.shape != uf.shape:
            raise InputError("payoff matrices must share an n x m shape")
        if ul.shape[0] < 1 or ul.shape[1] < 1:
            raise InputError("game needs at least one strategy per player")
        if not (np.isfinite(ul).all() and np.isfinite(uf).all()):
            raise InputError("payoff entries must be finite")
        ul.setflags(write=False)
        uf.setflags(write=False)
        object.__setattr__(self, "u_leader", ul)
        object.__setattr__(self, "u_follower", uf)

    @property
    def n(self) -> int:
        return self.u_leader.shape[0]

    @property
    def m(self) -> int:
        return self.u_leader.shape[1]

    @classmethod
    def from_json(cls, text: str) -> "BimatrixGame":
        data = json.loads(text)
        game = cls(np.asarray(data["uL"], dtype=float), np.asarray(data["uF"], dtype=float))
        if game.n != data["n"] or game.m != data["m"]:
            raise InputError("declared n/m do not match matrix shapes")
        return game

    def to_json_obj(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "uL": self.u_leader.tolist(),
            "uF": self.u_follower.tolist(),
        }


@dataclass(frozen=True)
class MixedStrategy:
    """A probability vector over pure strategies."""

    probs: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(v) for v in self.probs)
        if any(v < -TIE_TOL for v in p):
            raise InputError("mixed strategy has a negative probability")
        if abs(sum(p) - 1.0) > TIE_TOL:
            raise InputError("mixed strategy probabilities must sum to 1")
        object.__setattr__(self, "probs", tuple(max(0.0, v) for v in p))

    def __len__(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @classmethod
    def point_mass(cls, size: int, index: int) -> "MixedStrategy":
        probs = [0.0] * size
        probs[index] = 1.0
        return cls(tuple(probs))


StrategyLike = Union[MixedStrategy, Sequence[float]]


def _coerce(x: StrategyLike, size: int, who: str) -> MixedStrategy:
    strat = x if isinstance(x, MixedStrategy) else MixedStrategy(tuple(x))
    if len(strat) != size:
        raise InputError(f"{who} strategy has {len(strat)} entries, expected {size}")
    return strat


@dataclass(frozen=True)
class StackelbergSolution:
    leader: MixedStrategy
    follower_response: int
    leader_payoff: float
    follower_payoff: float


def expected_utilities(game: BimatrixGame, x: StrategyLike, y: StrategyLike) -> tuple[float, float]:
    """Bilinear expected payoffs (leader, follower) for a strategy pair."""
    xv = _coerce(x, game.n, "leader").as_array()
    yv = _coerce(y, game.m, "follower").as_array()
    return float(xv @ game.u_leader @ yv), float(xv @ game.u_follower @ yv)


def follower_best_response(game: BimatrixGame, x: StrategyLike) -> int:
    """Best follower column against ``x``, ties broken for the leader.

    Among follower payoffs within TIE_TOL of the maximum, picks the column
    maximizing the leader's payoff; remaining ties go to the lowest index.
    """
    xv = _coerce(x, game.n, "leader").as_array()
    follower_vals = xv @ game.u_follower
    leader_vals = xv @ game.u_leader
    best_f = follower_vals.max()
    tied = follower_vals >= best_f - TIE_TOL
    best_l = leader_vals[tied].max()
    for j in range(game.m):
        if tied[j] and leader_vals[j] >= best_l - TIE_TOL:
            return j
    raise ToolkitError("unreachable: no best response column")  # pragma: no cover


def solve_stackelberg(game: BimatrixGame, exact: bool = False) -> StackelbergSolution:
    """Optimal commitment via one LP per follower column (Multiple LPs).

    For each column j, maximizes the leader payoff over the simplex subject
    to j being a weak best response; the best feasible pair wins. The chosen
    pair is re-evaluated through ``follower_best_response`` so the reported
    response honors the leader-favoring tie-break exactly.
    """
    uf = game.u_follower
    best: tuple[float, MixedStrategy, int] | None = None
    for j in range(game.m):
        leq = []
        for jp in range(game.m):
            if jp == j:
                continue
            leq.append((tuple(uf[:, jp] - uf[:, j]), 0.0))
        program = lp.LinearProgram(
            num_vars=game.n,
            objective=tuple(game.u_leader[:, j]),
            leq_rows=tuple(leq),
            eq_rows=(((1.0,) * game.n, 1.0),),
            lower_bounds=(0.0,) * game.n,
            upper_bounds=(None,) * game.n,
        )
        sol = lp.solve(program, exact=exact)
        if not sol.is_optimal:
            continue
        x = MixedStrategy(tuple(min(1.0, max(0.0, v)) for v in sol.values))
        response = follower_best_response(game, x)
        payoff, _ = expected_utilities(game, x, MixedStrategy.point_mass(game.m, response))
        if best is None or payoff > best[0]:
            best = (payoff, x, response)
    if best is None:
        raise ToolkitError("every per-column LP was infeasible on a valid game")
    payoff, x, response = best
    lpay, fpay = expected_utilities(game, x, MixedStrategy.point_mass(game.m, response))
    return StackelbergSolution(x, response, lpay, fpay)


def validate_stackelberg_solution(game: BimatrixGame, sol: StackelbergSolution, tol: float = TIE_TOL) -> None:
    """Re-evaluate the solution's invariants; raises ToolkitError on failure."""
    xv = sol.leader.as_array()
    follower_vals = xv @ game.u_follower
    if follower_vals[sol.follower_response] < follower_vals.max() - tol:
        raise ToolkitError("recorded response is not a follower best response")
    lpay, fpay = expected_utilities(
        game, sol.leader, MixedStrategy.point_mass(game.m, sol.follower_response)
    )
    if abs(lpay - sol.leader_payoff) > tol or abs(fpay - sol.follower_payoff) > tol:
        raise ToolkitError("recorded payoffs do not match re-evaluation")


def solve_maximin(game: BimatrixGame, player: str, exact: bool = False) -> tuple[MixedStrategy, float]:
    """Strategy maximizing the player's own worst-case payoff, and that value."""
    if player == LEADER:
        payoff = game.u_leader
    elif player == FOLLOWER:
        payoff = game.u_follower.T
    else:
        raise InputError(f"unknown player {player!r}")
    k, opp = payoff.shape
    # variables: k probabilities plus the guaranteed value v
    leq = []
    for j in range(opp):
        leq.append((tuple(-payoff[:, j]) + (1.0,), 0.0))
    program = lp.LinearProgram(
        num_vars=k + 1,
        objective=(0.0,) * k + (1.0,),
        leq_rows=tuple(leq),
        eq_rows=(((1.0,) * k + (0.0,), 1.0),),
        lower_bounds=(0.0,) * k + (None,),
        upper_bounds=(None,) * (k + 1),
    )
    sol = lp.solve(program, exact=exact)
    if not sol.is_optimal:
        raise ToolkitError(f"maximin LP reported {sol.status} on a finite game")
    strat = MixedStrategy(tuple(min(1.0, max(0.0, v)) for v in sol.values[:k]))
    return strat, float(sol.values[k])


def realized_maximin_profile(game: BimatrixGame, exact: bool = False) -> tuple[MixedStrategy, MixedStrategy, float, float]:
    """Pair both players' maximin strategies and evaluate the realized payoffs."""
    xl, _ = solve_maximin(game, LEADER, exact=exact)
    yf, _ = solve_maximin(game, FOLLOWER, exact=exact)
    lpay, fpay = expected_utilities(game, xl, yf)
    return xl, yf, lpay, fpay


NASH_SIZE_LIMIT = 8


def solve_nash_support_enumeration(game: BimatrixGame) -> list[tuple[MixedStrategy, MixedStrategy]]:
    """All Nash equilibria found by equal-size support enumeration.

    Complete for nondegenerate games; desk-scale only (n, m <= 8).
    """
    n, m = game.n, game.m
    if n > NASH_SIZE_LIMIT or m > NASH_SIZE_LIMIT:
        raise SizeLimitError(f"support enumeration limited to {NASH_SIZE_LIMIT} strategies per side")
    ul, uf = game.u_leader, game.u_follower
    found: list[tuple[MixedStrategy, MixedStrategy]] = []
    seen: set[tuple] = set()
    for k in range(1, min(n, m) + 1):
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.combinations(range(m), k):
                x = _indifference_solution(uf, rows, cols, axis=0)
                y = _indifference_solution(ul, rows, cols, axis=1)
                if x is None or y is None:
                    continue
                if not (_is_best_response_support(uf, x, rows, cols, axis=0)
                        and _is_best_response_support(ul, y, rows, cols, axis=1)):
                    continue
                xs = _embed(x, rows, n)
                ys = _embed(y, cols, m)
                key = (tuple(round(v, 9) for v in xs), tuple(round(v, 9) for v in ys))
                if key not in seen:
                    seen.add(key)
                    found.append((MixedStrategy(xs), MixedStrategy(ys)))
    return found


def _indifference_solution(payoff, rows, cols, axis):
    """Mix over one side's support making the other side indifferent.

    axis=0: solve for row-player weights equalizing the column payoffs in
    ``cols`` (uses the column player's matrix); axis=1 is the transpose case.
    """
    mat = payoff[np.ix_(rows, cols)]
    if axis == 1:
        mat = mat.T
    k = mat.shape[0]
    a = np.zeros((k, k))
    b = np.zeros(k)
    for i in range(k - 1):
        a[i, :] = mat[:, i] - mat[:, i + 1]
    a[k - 1, :] = 1.0
    b[k - 1] = 1.0
    try:
        w = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None
    if np.any(w < -TIE_TOL):
        return None
    w = np.clip(w, 0.0, None)
    s = w.sum()
    if s <= 0:
        return None
    return w / s


def _is_best_response_support(payoff, weights, rows, cols, axis):
    """Check every support pure strategy is a best response to the mix."""
    if axis == 0:
        vals = weights @ payoff[list(rows), :]
        support = cols
    else:
        vals = payoff[:, list(cols)] @ weights
        support = rows
    best = vals.max()
    return all(vals[s] >= best - 1e-8 for s in support)


def _embed(weights, support, size) -> tuple[float, ...]:
    full = [0.0] * size
    for w, s in zip(weights, support):
        full[s] = float(w)
    return tuple(full)


def random_game_payoffs(rng, n: int, m: int, low: float = 0.0, high: float = 1.0) -> BimatrixGame:
    """Uniform random payoffs from a ``random.Random``-style generator."""
    ul = [[low + (high - low) * rng.random() for _ in range(m)] for _ in range(n)]
    uf = [[low + (high - low) * rng.random() for _ in range(m)] for _ in range(n)]
    return BimatrixGame(np.asarray(ul), np.asarray(uf))
