"""Objections, counter-objections and an epsilon-approximate bargaining-set check.

All payoff vectors are full length-N lists; only members of the analyzed
coalition ``S`` take part, every sub-coalition considered is a subset of ``S``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .game import GameCache, GameLike, as_game, pivotal_set, without
from .instance import Coalition, coalition
from .oracles import SizeLimitError

COUNTER_LIMIT = 20
SEARCH_LIMIT = 12


@dataclass(frozen=True)
class Objection:
    objector: int
    target: int
    coalition: Coalition
    payoff: dict          # member -> y_k

    def to_dict(self) -> dict:
        return {"objector": self.objector, "target": self.target,
                "coalition": list(self.coalition),
                "payoff": {str(k): v for k, v in sorted(self.payoff.items())}}


@dataclass(frozen=True)
class CounterObjection:
    coalition: Coalition
    payoff: dict          # member -> z_k


def subsets(members):
    """All subsets of ``members`` as sorted tuples, smallest first."""
    members = tuple(members)
    for r in range(len(members) + 1):
        yield from itertools.combinations(members, r)


def excess(game: GameLike, C, x) -> float:
    """Surplus ``v(C) - x(C)`` of coalition ``C`` at payoff ``x``."""
    game = as_game(game)
    C = coalition(C, game.n)
    return game.value(C) - math.fsum(x[k] for k in C)


def is_objection(game: GameLike, x, obj: Objection, tol: float = 1e-9) -> bool:
    """Replay the defining inequalities of an objection."""
    game = as_game(game)
    P = obj.coalition
    if obj.objector not in P or obj.target in P or set(obj.payoff) != set(P):
        return False
    scale = tol * max(1.0, abs(game.value(P)))
    return (math.fsum(obj.payoff.values()) <= game.value(P) + scale
            and all(obj.payoff[k] >= x[k] - scale for k in P)
            and obj.payoff[obj.objector] > x[obj.objector])


def counter_bound_holds(game: GameLike, S, x, i: int, j: int) -> bool:
    """Sufficient condition for ``j`` to counter any objection of ``i``
    raised through ``S - j``:
    ``x_j - x_i <= l_j - l_i - Cost(S-i) + Cost(S-j)``."""
    if i == j:
        raise ValueError("i and j must differ")
    game = as_game(game)
    S = coalition(S, game.n)
    bound = (game.localcost(j) - game.localcost(i)
             - game.cost(without(S, i)) + game.cost(without(S, j)))
    return x[j] - x[i] <= bound + game.eq_tol(S)


def counter_exists(game: GameLike, S, x, obj: Objection,
                   tol: float = 0.0) -> Optional[CounterObjection]:
    """Exact search for a counter-objection of the target against ``obj``.

    ``Q`` works iff ``v(Q)`` covers the objection's promises to ``Q & P`` plus
    ``x`` for the rest; the target then takes the slack.
    """
    game = as_game(game)
    S = coalition(S, game.n)
    if len(S) > COUNTER_LIMIT:
        raise SizeLimitError(f"counter-objection search limited to {COUNTER_LIMIT} players")
    i, j, P = obj.objector, obj.target, set(obj.coalition)
    others = [k for k in S if k not in (i, j)]
    for rest in subsets(others):
        Q = coalition(rest + (j,))
        bounds = {k: (obj.payoff[k] if k in P else x[k]) for k in Q}
        vQ = game.value(Q)
        if vQ >= math.fsum(bounds.values()) - tol:
            z = dict(bounds)
            z[j] += vQ - math.fsum(bounds.values())
            return CounterObjection(Q, z)
    return None


def _blocking_payoff(game: GameCache, S, x, i, j, P, epsilon):
    """Find ``y`` funding an objection of ``i`` through ``P`` that no
    coalition of ``j`` can match, each counter falling short by ``epsilon``."""
    members = list(P)
    pos = {k: n for n, k in enumerate(members)}
    lower = [x[k] for k in members]
    lower[pos[i]] = x[i] + epsilon
    A_ub, b_ub = [], []
    others = [k for k in S if k not in (i, j)]
    for rest in subsets(others):
        Q = coalition(rest + (j,))
        need = game.value(Q) - math.fsum(x[k] for k in Q if k not in P) + epsilon
        shared = [k for k in Q if k in P]
        if not shared:
            if need > 0:
                return None
            continue
        row = [0.0] * len(members)
        for k in shared:
            row[pos[k]] = -1.0
        A_ub.append(row)
        b_ub.append(-need)
    res = linprog(np.zeros(len(members)),
                  A_ub=np.array(A_ub) if A_ub else None,
                  b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.ones((1, len(members))), b_eq=[game.value(P)],
                  bounds=list(zip(lower, [None] * len(members))), method="highs")
    if res.status != 0:
        return None
    return {k: float(res.x[pos[k]]) for k in members}


def justified_objection_search(game: GameLike, S, x, epsilon: float = 1e-2,
                               pairs=None) -> Optional[Objection]:
    """First objection (by pair, then coalition) that admits no counter.

    Only coalitions with excess above ``epsilon`` are tried; any other cannot
    pay the objector ``epsilon`` more while keeping the rest whole.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    game = as_game(game)
    S = coalition(S, game.n)
    if len(S) > SEARCH_LIMIT:
        raise SizeLimitError(f"objection search limited to {SEARCH_LIMIT} players")
    if pairs is None:
        pairs = [(i, j) for i in S for j in S if i != j]
    for i, j in pairs:
        others = [k for k in S if k not in (i, j)]
        for rest in subsets(others):
            P = coalition(rest + (i,))
            if excess(game, P, x) <= epsilon:
                continue
            y = _blocking_payoff(game, S, x, i, j, P, epsilon)
            if y is not None:
                return Objection(i, j, P, y)
    return None


@dataclass
class StabilityReport:
    coalition: Coalition
    pivotal: Coalition
    null_players_unpaid: bool
    nonnegative_on_pivotal: bool
    individually_rational: bool
    counter_bound_matrix: list
    justified_objection: Optional[Objection]
    objecting_pairs: list = field(default_factory=list)
    epsilon: float = 1e-2
    eq_tol: float = 0.0

    @property
    def stable(self) -> bool:
        return self.justified_objection is None

    @property
    def conditions_ok(self) -> bool:
        pairs = [v for row in self.counter_bound_matrix for v in row if v is not None]
        return (self.null_players_unpaid and self.nonnegative_on_pivotal
                and self.individually_rational and all(pairs))

    def to_dict(self) -> dict:
        return {
            "coalition": list(self.coalition),
            "pivotal": list(self.pivotal),
            "stable": self.stable,
            "conditions_ok": self.conditions_ok,
            "null_players_unpaid": self.null_players_unpaid,
            "nonnegative_on_pivotal": self.nonnegative_on_pivotal,
            "individually_rational": self.individually_rational,
            "counter_bound_matrix": self.counter_bound_matrix,
            "justified_objection": (self.justified_objection.to_dict()
                                    if self.justified_objection else None),
            "objecting_pairs": [list(p) for p in self.objecting_pairs],
            "search": {"epsilon": self.epsilon, "method": "linprog"},
            "eq_tol": self.eq_tol,
        }


def stability_report(game: GameLike, S, x, epsilon: float = 1e-2) -> StabilityReport:
    """Condition checks on ``x`` plus a per-pair justified-objection search.

    The pairwise bound is only sufficient for counterability, so a ``False``
    entry in the matrix is reported and never taken as proof of instability.
    """
    game = as_game(game)
    S = coalition(S, game.n)
    A = pivotal_set(game, S)
    eq = game.eq_tol(S)
    matrix = [[None] * game.n for _ in range(game.n)]
    for i in A:
        for j in A:
            if i != j:
                matrix[i][j] = counter_bound_holds(game, S, x, i, j)
    objecting, first = [], None
    for i in S:
        for j in S:
            if i == j:
                continue
            obj = justified_objection_search(game, S, x, epsilon, pairs=[(i, j)])
            if obj is not None:
                objecting.append((i, j))
                first = first or obj
    return StabilityReport(
        coalition=S, pivotal=A,
        null_players_unpaid=all(abs(x[k]) <= eq for k in S if k not in A),
        nonnegative_on_pivotal=all(x[k] >= -eq for k in A),
        individually_rational=all(x[k] >= -eq for k in S),
        counter_bound_matrix=matrix, justified_objection=first,
        objecting_pairs=objecting, epsilon=epsilon, eq_tol=eq)
