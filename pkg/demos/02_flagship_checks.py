"""
Checks on the flagship instance
===============================

n = 1, N = 5, seed 42: six threefolds in (P^1)^5.  This script runs the
pointwise checks that ``detflops verify`` reports.
"""
# %%
#

import itertools

from detflops.exactnum import GF
from detflops.flopengine import check_diagram, flop
from detflops.tensorcore import random_instance
from detflops.varprobe import rank_locus_scan, smoothness_scan

inst = random_instance(1, 5, 42, 9)
print("dim X =", inst.dim, "models =", inst.model_count)

# %%
#
# Jacobian test on every F_3 point of each model.  The reduction mod 3 of
# this tensor is singular, so witnesses do show up here; over F_5 none do.

for ell in inst.slots:
    r3 = smoothness_scan(inst, ell, [GF(3)])
    r5 = smoothness_scan(inst, ell, [GF(5)])
    print(f"X_{ell}: F_3 {r3.verdict} ({len(r3.witnesses)}), F_5 {r5.verdict}")

# %%
#
# Each flop should commute with the two maps to the shared base.

bad = 0
for j, i in itertools.permutations(inst.slots, 2):
    rep = check_diagram(flop(inst, j, i), budget=100)
    bad += len(rep.failures)
print("diagram failures over all 30 flops:", bad)

# %%
#
# Points where a slice matrix vanishes are where the flop is not an
# isomorphism over the base.

for pair in itertools.combinations(inst.slots, 2):
    rep = rank_locus_scan(inst, pair)
    print(pair, rep.verdict, rep.witnesses[0] if rep.witnesses else "")
