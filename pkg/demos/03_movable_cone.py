"""
Chambers of the movable cone
============================

The shipped lattice maps of the flagship instance drive a walk across the
walls of nef chambers.  Closing the walk gives the orbit representatives
and a set of generators; their hull is then tested as a fundamental domain.
"""
# %%
#

from detflops.chamberwalk import bir_generators, chamber_bfs, classify_generator, fundamental_domain, verify_fan
from detflops.picardlattice import load_fixtures, shipped_fixture_path

N, mats, meta = load_fixtures(shipped_fixture_path())
print(meta)
print("flop 0 -> 1 acts on N^1 by")
for row in mats[(0, 1)].matrix:
    print("   ", row)

# %%
#

cert = chamber_bfs(N, mats)
print(cert.status, len(cert.chambers), "chambers,", len(cert.orbit_reps), "orbits")
print(verify_fan(cert))

# %%
#
# Every generator found here is an involution.

for g in bir_generators(cert):
    print(g.word, classify_generator(g))

# %%
#

dom = fundamental_domain(cert, R=4)
print(dom.status)
for line in dom.checks:
    print("  ", line)
