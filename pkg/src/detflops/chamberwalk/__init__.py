from .cones import (ConeRP, NotPointed, cone_from_generators, cone_from_inequalities, cone_intersect, cones_equal,
                    interiors_meet, is_face, primitive, separated, simplicial_cone, zero_cone)
from .tiling import (ChamberNode, GroupElement, InconsistentFan, NotClosed, TilingCertificate, bir_generators,
                     chamber_bfs, check_group_invariance, classify_generator, manual_certificate, verify_fan, walk, word_pushforward)
from .domain import FundamentalDomainCandidate, StabilizerObstruction, fundamental_domain, group_ball, toy_shear_certificate
