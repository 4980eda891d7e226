"""
Layout planarity

Fabricated chips carry all conductors in one plane. Crossings between
conductors need an insulating second layer, which this toolkit does not
model.
"""

from itertools import combinations

import numpy as np

from src.checks.base_check import BaseCheck, CheckStatus, Severity
from src.core.model import Layout


def _segments_cross(a0, a1, b0, b1) -> bool:
    """Proper in-plane intersection of two segments (touching endpoints excluded)"""
    def orient(p, q, r):
        return np.sign((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))

    return (orient(a0, a1, b0) * orient(a0, a1, b1) < 0
            and orient(b0, b1, a0) * orient(b0, b1, a1) < 0)


class PlanarityCheck(BaseCheck):
    """All conductors in z = 0, with crossings reported"""

    def __init__(self, layout: Layout):
        super().__init__()
        self.id = "LAYOUT-1"
        self.title = "Conductors are planar"
        self.description = "Every conductor path lies in the chip plane"
        self.category = "Layout"
        self.severity = Severity.LOW
        self.remediation = "Bend conductor ends off instead of crossing, or plan a second metal layer"
        self.layout = layout

    def crossings(self):
        found = []
        for a, b in combinations(self.layout.conductors, 2):
            pa, pb = np.asarray(a.path), np.asarray(b.path)
            hit = any(
                _segments_cross(pa[i], pa[i + 1], pb[j], pb[j + 1])
                for i in range(len(pa) - 1) for j in range(len(pb) - 1)
            )
            if hit:
                found.append((a.name, b.name))
        return found

    def check(self):
        if not self.layout.conductors:
            return {'status': CheckStatus.NOT_APPLICABLE, 'finding': 'Layout has no finite conductors'}
        lifted = [c.name for c in self.layout.conductors if not c.is_planar or c.path[0][2] != 0.0]
        crossings = self.crossings()
        evidence = {'non_planar': lifted, 'crossings': crossings}
        if lifted:
            return {
                'status': CheckStatus.WARNING,
                'finding': f"{len(lifted)} conductor(s) leave the chip plane",
                'evidence': evidence,
                'risk': 'Geometry cannot be fabricated in a single layer',
            }
        if crossings:
            return {
                'status': CheckStatus.WARNING,
                'finding': f"{len(crossings)} conductor crossing(s) need an insulating layer",
                'evidence': evidence,
                'risk': 'Multi-layer fabrication',
            }
        return {
            'status': CheckStatus.PASS,
            'finding': 'All conductors are planar and non-crossing',
            'evidence': evidence,
            'risk': 'None',
        }
