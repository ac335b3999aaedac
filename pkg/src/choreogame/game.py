"""Characteristic function of the pricing game and the alliance detector.

``v(C) = p(C) - Cost(C)`` where ``p(C)`` is what the members would pay on
their own (sum of local costs) and ``Cost(C)`` is the optimal cost when
they pool jobs and machines.
"""
from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

from .instance import Coalition, Instance, coalition
from .oracles import ScheduleOutcome, coalition_cost

#: relative equality tolerance used with the closed-form oracles
REL_EQ_TOL = 1e-9


class GameCache:
    """Memoized coalition costs for one instance.

    Safe to share between threads: lookups are lock-protected and a repeated
    evaluation of the same coalition always yields the same outcome.
    """

    def __init__(self, inst: Instance, tol: float = 1e-9, no_migration: bool = False,
                 eq_tol: Optional[float] = None):
        self.instance = inst
        self.tol = tol
        self.no_migration = no_migration
        self.fixed_eq_tol = eq_tol
        self.calls = []          # coalitions handed to an oracle, in order
        self.used_convex = False
        self._outcomes = {}
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.instance.n

    def outcome(self, members) -> ScheduleOutcome:
        key = coalition(members, self.n)
        with self._lock:
            if key in self._outcomes:
                return self._outcomes[key]
        out = coalition_cost(self.instance, key, self.tol, self.no_migration)
        with self._lock:
            if key not in self._outcomes:
                self._outcomes[key] = out
                self.calls.append(key)
                if out.method == "convex":
                    self.used_convex = True
            return self._outcomes[key]

    def cost(self, members) -> float:
        return self.outcome(members).total_cost

    def localcost(self, k: int) -> float:
        return self.cost((k,))

    def localcosts(self) -> list:
        return [self.localcost(k) for k in range(self.n)]

    def price(self, members) -> float:
        return math.fsum(self.localcost(k) for k in coalition(members, self.n))

    def value(self, members) -> float:
        key = coalition(members, self.n)
        if len(key) <= 1:
            return 0.0
        return self.price(key) - self.cost(key)

    def table(self, members) -> dict:
        """Cost, price and value of one coalition."""
        return {"cost": self.cost(members), "price": self.price(members),
                "value": self.value(members)}

    def eq_tol(self, S) -> float:
        """Absolute tolerance for deciding ``v(S) == v(S \\ {j})``."""
        if self.fixed_eq_tol is not None:
            return self.fixed_eq_tol
        tol = REL_EQ_TOL * max(1.0, abs(self.value(S)))
        if self.used_convex:
            tol = max(tol, 10 * self.tol * max(1.0, self.price(S)))
        return tol


GameLike = Union[Instance, GameCache]


def as_game(game: GameLike) -> GameCache:
    return game if isinstance(game, GameCache) else GameCache(game)


def without(S: Coalition, k: int) -> Coalition:
    return tuple(j for j in S if j != k)


def localcost(game: GameLike, k: int) -> float:
    return as_game(game).localcost(k)


def price(game: GameLike, members) -> float:
    return as_game(game).price(members)


def value(game: GameLike, members) -> float:
    return as_game(game).value(members)


def pivotal_set(game: GameLike, S) -> Coalition:
    """Members whose departure strictly lowers the coalition's savings."""
    game = as_game(game)
    S = coalition(S, game.n)
    vS = game.value(S)
    eq = game.eq_tol(S)
    return tuple(j for j in S if vS - game.value(without(S, j)) > eq)


def stable_imputation(game: GameLike, S) -> tuple:
    """Payment vector (length N) that pays only pivotal members.

    Each pivotal ``j`` gets ``Cost(S-j) + l_j`` minus the average of
    ``Cost(A) + sum_k Cost(S-k)`` over the pivotal set ``A``. Returns
    ``(x, feasible)``; negative entries are kept, not clamped.
    """
    game = as_game(game)
    S = coalition(S, game.n)
    A = pivotal_set(game, S)
    x = [0.0] * game.n
    if not A:
        return x, True
    shared = (game.cost(A) + math.fsum(game.cost(without(S, k)) for k in A)) / len(A)
    for j in A:
        x[j] = game.cost(without(S, j)) + game.localcost(j) - shared
    eq = game.eq_tol(S)
    return x, all(x[j] >= -eq for j in A)


def aggregate_gate(game: GameLike, S) -> bool:
    """``p(A) >= Cost(A)`` on the pivotal set (summed nonnegativity)."""
    game = as_game(game)
    A = pivotal_set(game, S)
    return game.price(A) >= game.cost(A) - game.eq_tol(S)


@dataclass
class AllianceReport:
    coalition: Coalition
    feasible: bool
    pivotal: Coalition
    imputation: Optional[list]
    grand_value: float
    efficiency_gap: Optional[float]
    incentive: dict
    no_savings: bool
    failed_gate: Optional[str] = None
    violating: list = field(default_factory=list)
    price_pivotal: float = 0.0
    cost_pivotal: float = 0.0
    eq_tol: float = 0.0

    def to_dict(self) -> dict:
        return {
            "coalition": list(self.coalition),
            "feasible": self.feasible,
            "failed_gate": self.failed_gate,
            "violating": list(self.violating),
            "pivotal": list(self.pivotal),
            "imputation": self.imputation,
            "grand_value": self.grand_value,
            "efficiency_gap": self.efficiency_gap,
            "incentive": {str(k): v for k, v in sorted(self.incentive.items())},
            "no_savings": self.no_savings,
            "price_pivotal": self.price_pivotal,
            "cost_pivotal": self.cost_pivotal,
            "eq_tol": self.eq_tol,
        }


def detect_alliance(game: GameLike, S=None, workers: int = 1) -> AllianceReport:
    """Decide whether ``S`` can form a stable alliance and compute its payments.

    Evaluates local costs, every leave-one-out cost, ``Cost(S)`` and the cost
    of the pivotal set: at most ``2|S| + 2`` oracle calls. Besides the summed
    gate ``p(A) >= Cost(A)`` each pivotal payment must be nonnegative.
    """
    game = as_game(game)
    S = game.instance.grand if S is None else coalition(S, game.n)
    jobs = [(k,) for k in S] + [without(S, k) for k in S] + [S]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(game.outcome, jobs))
    else:
        for c in jobs:
            game.outcome(c)

    eq = game.eq_tol(S)
    vS = game.value(S)
    A = pivotal_set(game, S)
    pA, cA = game.price(A), game.cost(A)
    report = AllianceReport(coalition=S, feasible=True, pivotal=A, imputation=None,
                            grand_value=vS, efficiency_gap=None, incentive={},
                            no_savings=vS <= eq, price_pivotal=pA, cost_pivotal=cA,
                            eq_tol=eq)
    if pA < cA - eq:
        report.feasible = False
        report.failed_gate = "aggregate"
        return report

    x, _ = stable_imputation(game, S)
    report.imputation = x
    report.violating = [j for j in A if x[j] < -eq]
    if report.violating:
        report.feasible = False
        report.failed_gate = "per_org"
    report.efficiency_gap = vS - math.fsum(x[k] for k in S)
    shares = game.outcome(S).per_org_cost
    report.incentive = {k: shares[k] - x[k] <= game.localcost(k) + eq for k in S}
    return report
