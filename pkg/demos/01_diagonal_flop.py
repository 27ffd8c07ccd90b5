"""
Flops on the diagonal fixture
=============================

The smallest instance: n = 1, N = 2 with the diagonal tensor.  Each model is
a finite set of points, which makes every step easy to check by hand.
"""
# %%
#

from detflops.exactnum import GF
from detflops.flopengine import apply_flop, flop
from detflops.tensorcore import diagonal_instance, model
from detflops.varprobe import enumerate_points

inst = diagonal_instance(1, 2)
F = GF(3)

# %%
#
# X_0 lives on the factors 1 and 2.  Over F_3 it has exactly two points.

points = list(enumerate_points(model(inst, 0), F))
for pt in points:
    print(pt)

# %%
#
# The flop to X_1 keeps factor 2 and replaces factor 1 with a kernel vector
# in factor 0.  Going back recovers the starting point.

for pt in points:
    img = apply_flop(flop(inst, 0, 1), pt)
    back = apply_flop(flop(inst, 1, 0), img)
    print(pt, "->", img, "->", back, back == pt)
