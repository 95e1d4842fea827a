"""Exercise the CG exactness identities, then break them on purpose."""

import numpy as np

from gradcert import SpectrumSpec, generate_with_start, hs_identity_battery, rho_optimality_check, run

spec = SpectrumSpec(dim=25, ell=1.0, lip=400.0, layout="log_uniform", seed=9)
obj, truth, x0 = generate_with_start(spec)
trace = run(obj, "cg_classic", x0, 4_000, 1e-10 * obj.f_gap(x0))

report = hs_identity_battery(trace, obj)
print(f"clean run: {len(trace) - 1} iterations, battery ok={report.ok}")
print("worst normalized residual per identity:")
for name, value in report.max_violations.items():
    print(f"  {name:15s} {value:.3e}")

drift, ok = rho_optimality_check(trace, obj)
print(f"rho optimality (w_k . s_k = 0): max drift {drift:.3e}, ok={ok}")

# Nudge one iterate by 0.1% and recompute its displacement; every identity
# that touches step k now disagrees with the recurrence scalars.
k = len(trace) // 2
trace.xs[k] *= 1.001
trace.ss[k] = trace.xs[k] - trace.xs[k - 1]
trace.ss[k + 1] = trace.xs[k + 1] - trace.xs[k]
poisoned = hs_identity_battery(trace, obj)
print(f"\nafter a 0.1% nudge of x_{k}: battery ok={poisoned.ok}")
for name, first in poisoned.first_failures.items():
    if first is not None:
        print(f"  {name:15s} first failure at step {first} (residual {poisoned.max_violations[name]:.2e})")
