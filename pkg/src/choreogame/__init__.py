"""Stable alliances in the multi-organization scheduling pricing game."""

__version__ = "0.1.0"

from .instance import (Instance, InstanceError, Job, Objective, Organization, coalition,
                       example1, load_instance, parse_instance, serialize_instance,
                       validate_instance)
from .oracles import (ScheduleOutcome, SizeLimitError, SolverError, brute_force_sum_completion,
                      coalition_cost, grid_energy_oracle, schedule_energy_common_deadline,
                      schedule_energy_general, schedule_energy_single_machine_yds,
                      schedule_sum_completion)
from .game import (AllianceReport, GameCache, aggregate_gate, detect_alliance, localcost,
                   pivotal_set, price, stable_imputation, value)
from .stability import (CounterObjection, Objection, StabilityReport, counter_bound_holds,
                        counter_exists, excess, justified_objection_search, stability_report)
