import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from choreogame.instance import (Instance, InstanceError, Job, Objective, Organization,
                                 example1, parse_coalition, parse_instance,
                                 serialize_instance, validate_instance)
from choreogame.game import localcost


def doc(**overrides):
    base = {"objective": "sum_energy", "alpha": 3.0,
            "organizations": [{"id": "O1", "machines": 1, "jobs": [{"deadline": 1.0}]}]}
    base.update(overrides)
    return json.dumps(base)


def test_example1_file(example1_path):
    inst = parse_instance(example1_path.read_text())
    assert inst.n == 4
    assert [len(o.jobs) for o in inst.organizations] == [19, 7, 1, 1]
    assert inst.alpha == 3.0
    assert all(j.volume == 1.0 and j.deadline == 1.0 for o in inst.organizations for j in o.jobs)
    assert validate_instance(inst) == []


def test_alpha_must_exceed_one():
    with pytest.raises(InstanceError, match="alpha must exceed 1"):
        parse_instance(doc(alpha=1.0))


def test_org_without_jobs_is_valid():
    text = doc(organizations=[{"id": "A", "machines": 2, "jobs": []},
                              {"id": "B", "machines": 1, "jobs": [{"deadline": 2}]}])
    inst = parse_instance(text)
    assert localcost(inst, 0) == 0.0


def test_volume_defaults_to_one():
    assert parse_instance(doc()).organizations[0].jobs[0].volume == 1.0


def test_syntax_error_reports_position():
    with pytest.raises(InstanceError, match=r"line 1 column \d+"):
        parse_instance('{"objective": "sum_energy",, }')


@pytest.mark.parametrize("text, message", [
    (doc(typo=1), "unknown key"),
    (doc(objective="makespan"), "objective"),
    (doc(organizations=[{"id": "O1", "machines": 1, "jobs": [{"volume": 1}]}]),
     "deadline missing for energy objective"),
    (json.dumps({"objective": "sum_completion",
                 "organizations": [{"id": "A", "machines": 1, "jobs": [{"deadline": 1}]}]}),
     "proc_time missing"),
    (doc(organizations=[{"id": "O1", "machines": 1.5, "jobs": []}]), "machines must be an integer"),
    (doc(organizations=[{"id": "O1", "machines": 1, "jobs": [{"deadline": 1, "volume": -1}]}]),
     "volume must be > 0"),
])
def test_rejections(text, message):
    with pytest.raises(InstanceError, match=message):
        parse_instance(text)


def test_alpha_optional_for_completion():
    inst = parse_instance(json.dumps({"objective": "sum_completion", "organizations": [
        {"id": "A", "machines": 1, "jobs": [{"proc_time": 2}]}]}))
    assert inst.alpha is None and inst.objective is Objective.SUM_COMPLETION


def test_validate_duplicate_ids():
    inst = Instance(Objective.SUM_ENERGY,
                    (Organization("O1", 1, ()), Organization("O1", 1, ())), 2.0)
    assert validate_instance(inst) == ["organizations: duplicate id O1"]


def test_validate_machine_count():
    inst = Instance(Objective.SUM_ENERGY, (Organization("O1", 0, ()),), 2.0)
    problems = validate_instance(inst)
    assert len(problems) == 1 and "machine_count must be ≥ 1" in problems[0]


def test_coalition_selector():
    inst = example1()
    assert parse_coalition("O4,O2", inst) == (1, 3)
    assert parse_coalition(None, inst) == (0, 1, 2, 3)
    with pytest.raises(InstanceError, match="unknown organization"):
        parse_coalition("O9", inst)


def test_restrict():
    sub = example1().restrict([1, 3])
    assert [o.id for o in sub.organizations] == ["O2", "O4"]


positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)
jobs = st.builds(Job, volume=positive, deadline=positive, proc_time=st.none() | positive)
orgs = st.lists(st.tuples(st.integers(1, 4), st.lists(jobs, max_size=4)), min_size=1, max_size=4)


@settings(max_examples=60, deadline=None)
@given(orgs, st.floats(min_value=1.01, max_value=4))
def test_round_trip(layout, alpha):
    inst = Instance(Objective.SUM_ENERGY,
                    tuple(Organization(f"O{k}", m, tuple(js)) for k, (m, js) in enumerate(layout)),
                    alpha)
    once = parse_instance(serialize_instance(inst))
    assert validate_instance(once) == []
    assert once == inst
    assert parse_instance(serialize_instance(once)) == once
