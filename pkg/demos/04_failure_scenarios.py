#!/usr/bin/env python3
"""From a component system to labeled scenario datasets."""

from scengen import (FAIL, REPAIR, apply_event, build_datasets,
                     decode_scenario, encode_scenario, enumerate_scenarios,
                     is_severe, reference_three_event_system,
                     scenario_probability)

system = reference_three_event_system()
print("system:", system.name)
for event in system.events:
    print(f"  {event.id}: p_down={event.p_down} p_repair={event.p_repair}")
print("severe states:", [sorted(s) for s in system.severe_states])

# System states are bitmasks over the events; a walk toggles one event per
# step and is legal only if it fails up events and repairs down ones.
state = 0
state = apply_event(state, 0, FAIL)
state = apply_event(state, 1, FAIL)
print("\nafter failing A and B: state =", bin(state),
      "severe?", is_severe(state, system))

steps = [(0, FAIL), (0, REPAIR), (0, FAIL), (1, FAIL)]
print("walk", steps)
print("  probability:", scenario_probability(system, steps))
print("  encoded symbols:", encode_scenario(system, steps))
print("  decoded back:", decode_scenario(system, encode_scenario(system, steps)))

# Exhaustive enumeration: every legal walk from the all-up state that first
# reaches a severe state within four steps, split by a probability threshold.
probable, no_probable = enumerate_scenarios(system, max_len=4, p_min=1e-3)
print(f"\nenumerated {len(probable)} probable and {len(no_probable)} "
      "no-probable scenarios")
print("most probable scenarios:")
for sc in probable[:4]:
    names = [(system.events[i].id, a) for i, a in sc.steps]
    print(f"  {names}  P = {sc.probability:.6f}")

# Datasets encode the scenarios as symbol sequences and carve out a seeded
# test split per class.
prob_ds, noprob_ds = build_datasets(system, max_len=4, p_min=1e-3,
                                    test_fraction=0.25, seed=9)
print("\nprobable dataset: alphabet", prob_ds.alphabet_size,
      "train", len(prob_ds.sequences("train")),
      "test", len(prob_ds.sequences("test")))
print("no-probable dataset: train", len(noprob_ds.sequences("train")),
      "test", len(noprob_ds.sequences("test")))
print("example record:", prob_ds.records[0])
