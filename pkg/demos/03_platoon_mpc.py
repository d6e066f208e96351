"""Closed-loop cruise control with and without the safety filter.

The scenario: the platoon cruises from 10 m/s, and at t = 30 s the 15.6
m/s speed limit (event 'a') is announced with a two-step grace period.
The safe controller constrains every predicted (state, input) pair to the
precomputed invariant ellipsoids and stays feasible forever, even with a
short horizon.  The unsafe controller uses only the raw state/input
constraints and paints itself into a corner: by the time it sees the
limit, it is going too fast to brake in two steps.
"""

import numpy as np

import hybridinv as hv
from hybridinv import cruise, plot
from hybridinv.mpc import MpcScenario, simulate

params = cruise.CruiseParams()
system = cruise.build_automaton(params, horizon_steps=2)
lifted, trace = hv.lift_inputs(system)
sets, report = hv.synthesize(hv.to_algebraic(lifted))
assert report.status == "optimal"

x0 = np.array([0.0, 10.0, 10.0])
event = ((30.0, "a"),)

# --- safe mode, horizon 3 ------------------------------------------------
safe = simulate(MpcScenario(system=system, initial_node="q_d0",
                            initial_state=x0, horizon=3, mode="safe",
                            duration=60.0, events=event,
                            sets=sets, trace=trace))
print(f"safe H=3:    {len(safe.records)}/150 steps feasible "
      f"({'all good' if safe.feasible else 'FAILED'})")
safe.to_csv("platoon_safe.csv")
data = plot.read_trajectory_csv("platoon_safe.csv")
for name, svg in (("platoon_speed.svg", plot.plot_speed(data)),
                  ("platoon_accel.svg", plot.plot_acceleration(data))):
    with open(name, "w") as f:
        f.write(svg)
    print(f"wrote {name}")

# --- unsafe mode, sweep of horizons --------------------------------------
# Without the invariant-set filter, the controller needs to see the limit
# far enough ahead to brake in time.  With an unannounced event nothing
# helps: the platoon cruises at full speed and gets only the two-step
# grace period.  With the schedule announced inside the horizon, long
# horizons recover feasibility while H <= 23 steps (9.2 s) stays too short
# to shed the accumulated speed.
print("\nunsafe mode horizon sweep (event 'a' at t = 30 s):")
for H, announced in ((3, False), (23, False), (23, True), (60, True)):
    traj = simulate(MpcScenario(system=system, initial_node="q_d0",
                                initial_state=x0, horizon=H, mode="unsafe",
                                duration=60.0, events=event,
                                announced=announced))
    bad = traj.first_infeasible_step()
    tag = "announced" if announced else "surprise "
    if bad is None:
        print(f"  H = {H:2d} ({tag}): feasible for all 150 steps")
    else:
        print(f"  H = {H:2d} ({tag}): infeasible at step {bad} (t = {bad * 0.4:.1f} s)")
print("(the exact feasibility boundary depends on solver tolerances;")
print(" the H = 60 line is reported, not asserted)")
