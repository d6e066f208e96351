"""Synthesis timing as the platoon grows (reported, not asserted).

Each extra trailer adds two state dimensions, so the lifted per-node
blocks grow from 5x5 (M = 1) to 11x11 (M = 4) while the automaton shape
(10 nodes, 25 transitions after merging) stays fixed.  Absolute times are
hardware-bound; the point of the table is the growth trend and that every
instance still reaches a certified optimum.
"""

import time

import numpy as np

import hybridinv as hv
from hybridinv import cruise

print(f"{'M':>2} {'state':>5} {'build[s]':>9} {'solve[s]':>9} "
      f"{'status':>10} {'verify':>6}")
for trailers in (1, 2, 3, 4):
    params = cruise.CruiseParams(trailers=trailers)
    system = cruise.build_automaton(params, horizon_steps=2)
    lifted, trace = hv.lift_inputs(system)
    has = hv.to_algebraic(lifted)
    t0 = time.perf_counter()
    sets, report = hv.synthesize(has)
    total = time.perf_counter() - t0
    if sets is None:
        print(f"{trailers:>2} {params.state_dim:>5} {'-':>9} {'-':>9} "
              f"{report.status:>10} {'-':>6}")
        continue
    check = hv.verify_hcs(system, trace.original_sets(sets), samples=200)
    print(f"{trailers:>2} {params.state_dim:>5} {report.build_seconds:>9.2f} "
          f"{report.solve_seconds:>9.2f} {report.status:>10} {check.verdict:>6}")
