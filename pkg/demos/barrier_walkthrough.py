"""Walk one twist class through the segmented barrier, step by step.

Prints the segment schedule, accumulates the prime sums for every family
member, classifies who stays under the barrier, and splits the tail by
the segment of first exit.  Ends with a conditional second-moment probe:
a short next-segment twist averaged only over walks still inside.
"""

import numpy as np

from ltail import (
    DirichletPoly,
    VALUE_FLOOR,
    WalkTrace,
    build_schedule,
    curve_by_label,
    desk_overrides,
    empirical_decomposition,
    family_by_address,
    family_central_values,
    family_flags,
    family_partials,
    prime_interval,
)
from ltail.moments import conditional_moment_check
from ltail.primes import primes_up_to

X = 30000.0
ALPHA = 0.3

curve = curve_by_label("11a1")
sched = build_schedule(X, ALPHA, desk_overrides())

print(f"schedule at X={X:g}, alpha={ALPHA}")
print(f"  segments R={sched.R}, V={sched.V:.4f}")
for j in range(1, sched.R + 1):
    lo, hi = prime_interval(sched, j)
    print(f"  segment {j}: primes in ({lo:.1f}, {hi:.1f}], "
          f"target n_{j}={sched.n[j]:.4f}")

fam = family_by_address(curve, X=X)
values, _, _ = family_central_values(curve, fam.discriminants, rel_tol=1e-8)
partials = family_partials(curve, sched, fam.discriminants)
logLs = np.log(np.maximum(values, VALUE_FLOOR))
print(f"\nfamily: {fam.discriminants.size} members, "
      f"S_R spread [{partials[:, -1].min():.2f}, {partials[:, -1].max():.2f}]")

flags = family_flags(sched, partials, logLs, fam.discriminants)
report = empirical_decomposition(fam, flags, sched)
print(f"tail membership: {report.count_H} of {report.family_size}")
print(f"{'exit seg':>8} {'count':>6} {'freq':>8} {'reference':>10}")
for row in report.rows:
    print(f"{row.r:>8d} {row.count:>6d} {row.probability:>8.4f} "
          f"{row.reference_bound:>10.4f}")
assert sum(r.count for r in report.rows) == report.count_H

# conditional probe: segment-2 twist, walks with S_1 near the bulk
increments = np.diff(partials, axis=1, prepend=0.0)
traces = [
    WalkTrace(int(d), increments[i], partials[i])
    for i, d in enumerate(fam.discriminants)
]
lo2, hi2 = prime_interval(sched, 2)
p = int(next(q for q in primes_up_to(int(hi2)) if q > lo2))
Q = DirichletPoly({1: 1.0, p: 0.4})
lhs, rhs = conditional_moment_check(sched, 1, traces, Q, w=-0.5)
print(f"\nconditional twist moment (index {p}): "
      f"observed {lhs:.4f}, gaussian shape {rhs:.4f}, "
      f"ratio {lhs / rhs:.2f}")
