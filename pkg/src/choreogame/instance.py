"""Domain types for the multi-organization scheduling game and the JSON
instance format.

An instance file looks like::

    {"objective": "sum_energy", "alpha": 3.0,
     "organizations": [{"id": "O1", "machines": 1,
                        "jobs": [{"volume": 1, "deadline": 1.0}]}]}

Organization order defines the index used by coalitions and payoff vectors.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

Coalition = tuple  # sorted, duplicate-free tuple of organization indices


class InstanceError(ValueError):
    """Raised for malformed or invalid instance documents."""


class Objective(str, enum.Enum):
    SUM_COMPLETION = "sum_completion"
    SUM_ENERGY = "sum_energy"


@dataclass(frozen=True)
class Job:
    volume: float = 1.0
    deadline: Optional[float] = None
    proc_time: Optional[float] = None


@dataclass(frozen=True)
class Organization:
    id: str
    machine_count: int
    jobs: tuple = ()


@dataclass(frozen=True)
class Instance:
    objective: Objective
    organizations: tuple
    alpha: Optional[float] = None

    @property
    def n(self) -> int:
        return len(self.organizations)

    @property
    def grand(self) -> Coalition:
        return tuple(range(self.n))

    def index_of(self, org_id: str) -> int:
        for k, org in enumerate(self.organizations):
            if org.id == org_id:
                return k
        raise KeyError(org_id)

    def with_alpha(self, alpha: float) -> "Instance":
        return replace(self, alpha=float(alpha))

    def restrict(self, members: Iterable[int]) -> "Instance":
        """The sub-game played by ``members`` only, re-indexed in order."""
        members = coalition(members, self.n)
        return replace(self, organizations=tuple(self.organizations[k] for k in members))


def coalition(members: Iterable[int], n: Optional[int] = None) -> Coalition:
    """Normalize ``members`` to the canonical sorted tuple form."""
    out = tuple(sorted(set(int(k) for k in members)))
    if out and (out[0] < 0 or (n is not None and out[-1] >= n)):
        raise InstanceError(f"coalition {out} has an index outside 0..{n}")
    return out


def parse_coalition(selector: Optional[str], inst: Instance) -> Coalition:
    """Turn ``"O2,O4"`` into organization indices; ``None`` selects everyone."""
    if selector is None or selector.strip() == "":
        return inst.grand
    ids = [s.strip() for s in selector.split(",") if s.strip()]
    try:
        return coalition((inst.index_of(i) for i in ids), inst.n)
    except KeyError as exc:
        raise InstanceError(f"unknown organization id {exc.args[0]!r}") from None


# --------------------------------------------------------------------------
# validation

def _positive(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) and x > 0


def validate_instance(inst: Instance) -> list:
    """Return a list of human-readable invariant violations (empty if valid)."""
    problems = []
    if not isinstance(inst.objective, Objective):
        problems.append(f"objective: unknown objective {inst.objective!r}")
    if len(inst.organizations) == 0:
        problems.append("organizations: at least one organization is required")
    energy = inst.objective == Objective.SUM_ENERGY
    if energy:
        if inst.alpha is None:
            problems.append("alpha: alpha is required for the energy objective")
        elif not (isinstance(inst.alpha, (int, float)) and math.isfinite(inst.alpha)
                  and inst.alpha > 1):
            problems.append("alpha: alpha must exceed 1")
    elif inst.alpha is not None and not (math.isfinite(inst.alpha) and inst.alpha > 1):
        problems.append("alpha: alpha must exceed 1")

    seen = set()
    for k, org in enumerate(inst.organizations):
        where = f"organizations[{k}] ({org.id})"
        if org.id in seen:
            problems.append(f"organizations: duplicate id {org.id}")
        seen.add(org.id)
        if not isinstance(org.machine_count, int) or isinstance(org.machine_count, bool) \
                or org.machine_count < 1:
            problems.append(f"{where}: machine_count must be ≥ 1")
        for i, job in enumerate(org.jobs):
            jw = f"{where}.jobs[{i}]"
            if not _positive(job.volume):
                problems.append(f"{jw}: volume must be > 0")
            if job.deadline is not None and not _positive(job.deadline):
                problems.append(f"{jw}: deadline must be > 0")
            if job.proc_time is not None and not _positive(job.proc_time):
                problems.append(f"{jw}: proc_time must be > 0")
            if energy and job.deadline is None:
                problems.append(f"{jw}: deadline missing for energy objective")
            if inst.objective == Objective.SUM_COMPLETION and job.proc_time is None:
                problems.append(f"{jw}: proc_time missing for completion objective")
    return problems


# --------------------------------------------------------------------------
# JSON ingestion

_TOP_KEYS = {"objective", "alpha", "organizations"}
_ORG_KEYS = {"id", "machines", "jobs"}
_JOB_KEYS = {"volume", "deadline", "proc_time"}


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise InstanceError(f"{where}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise InstanceError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _number(value, where):
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceError(f"{where}: expected a number, got {value!r}")
    return float(value)


def instance_from_dict(doc) -> Instance:
    _check_keys(doc, _TOP_KEYS, "document")
    try:
        objective = Objective(doc.get("objective"))
    except ValueError:
        raise InstanceError(
            f"objective: expected 'sum_energy' or 'sum_completion', got {doc.get('objective')!r}"
        ) from None
    orgs_doc = doc.get("organizations")
    if not isinstance(orgs_doc, list):
        raise InstanceError("organizations: expected a list")
    orgs = []
    for k, od in enumerate(orgs_doc):
        where = f"organizations[{k}]"
        _check_keys(od, _ORG_KEYS, where)
        if "id" not in od or not isinstance(od["id"], str):
            raise InstanceError(f"{where}: id must be a string")
        machines = od.get("machines")
        if isinstance(machines, bool) or not isinstance(machines, (int, float)) \
                or not float(machines).is_integer():
            raise InstanceError(f"{where}: machines must be an integer")
        jobs = []
        for i, jd in enumerate(od.get("jobs", [])):
            jw = f"{where}.jobs[{i}]"
            _check_keys(jd, _JOB_KEYS, jw)
            volume = _number(jd.get("volume", 1.0), f"{jw}.volume")
            jobs.append(Job(volume=volume,
                            deadline=_number(jd.get("deadline"), f"{jw}.deadline"),
                            proc_time=_number(jd.get("proc_time"), f"{jw}.proc_time")))
        orgs.append(Organization(od["id"], int(machines), tuple(jobs)))
    inst = Instance(objective, tuple(orgs), _number(doc.get("alpha"), "alpha"))
    problems = validate_instance(inst)
    if problems:
        raise InstanceError("; ".join(problems))
    return inst


def parse_instance(text: str) -> Instance:
    """Parse and validate an instance document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(
            f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return instance_from_dict(doc)


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def instance_to_dict(inst: Instance) -> dict:
    doc = {"objective": inst.objective.value}
    if inst.alpha is not None:
        doc["alpha"] = inst.alpha
    orgs = []
    for org in inst.organizations:
        jobs = []
        for job in org.jobs:
            jd = {"volume": job.volume}
            if job.deadline is not None:
                jd["deadline"] = job.deadline
            if job.proc_time is not None:
                jd["proc_time"] = job.proc_time
            jobs.append(jd)
        orgs.append({"id": org.id, "machines": org.machine_count, "jobs": jobs})
    doc["organizations"] = orgs
    return doc


def serialize_instance(inst: Instance) -> str:
    """Canonical JSON form (floats via repr, so parsing it back is lossless)."""
    return json.dumps(instance_to_dict(inst), indent=2, ensure_ascii=False)


def unit_energy_instance(job_counts: Sequence[int], machines: Sequence[int],
                         deadline: float = 1.0, alpha: float = 3.0) -> Instance:
    """Energy instance where every job is a unit job sharing one deadline."""
    orgs = tuple(
        Organization(f"O{k + 1}", int(m), tuple(Job(1.0, float(deadline)) for _ in range(n)))
        for k, (n, m) in enumerate(zip(job_counts, machines))
    )
    return Instance(Objective.SUM_ENERGY, orgs, float(alpha))


def example1(alpha: float = 3.0) -> Instance:
    """Four single-machine organizations with 19, 7, 1 and 1 unit jobs, deadline 1."""
    return unit_energy_instance([19, 7, 1, 1], [1, 1, 1, 1], 1.0, alpha)
