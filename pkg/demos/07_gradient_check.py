"""Finite-difference check of every hand-written gradient, the same check
``mcdd gradcheck`` runs, plus a deliberately broken gradient to show the
check would notice."""

from mcdd.gradcheck import TOLERANCE, gradcheck, passed

for seed in range(3):
    errors = gradcheck(seed)
    print(f"seed {seed}: worst {max(errors.values()):.2e}  {'ok' if passed(errors) else 'FAIL'}")

broken = gradcheck(0, corrupt="mcdd.head.raw_log_sigma")
print(f"corrupted raw_log_sigma: {broken['mcdd.head.raw_log_sigma']:.2e} (tolerance {TOLERANCE:g})")
