"""
Conductor current density and dissipation
"""

from src.checks.base_check import BaseCheck, CheckStatus, Severity
from src.traps.limits import ConductorLimits

RATING_TOLERANCE = 0.01


class CurrentDensityCheck(BaseCheck):
    """Check a conductor's current density against the sustainable limit"""

    def __init__(self, limits: ConductorLimits):
        super().__init__()
        self.id = "ELEC-1"
        self.title = "Current density within limit"
        self.description = "j = I / (w h) must stay below the sustainable density of the metal film"
        self.category = "Electrical"
        self.severity = Severity.HIGH
        self.remediation = "Lower the current or widen/thicken the conductor"
        self.limits = limits

    def _rating_note(self, evidence) -> str:
        # the quoted limit and rated_current / area disagree
        if abs(self.limits.rating_discrepancy) <= RATING_TOLERANCE:
            return ""
        return (f"; quoted limit {evidence['j_max_A_per_cm2']:.3e} A/cm^2 does not match "
                f"{evidence['rated_current_A']:g} A / (w h) = {evidence['rated_density_A_per_cm2']:.3e} A/cm^2 "
                f"({100 * self.limits.rating_discrepancy:+.1f}%)")

    def check(self):
        evidence = self.limits.to_dict()
        utilization = self.limits.current_density / self.limits.j_max
        note = self._rating_note(evidence)
        if self.limits.exceeds:
            return {
                'status': CheckStatus.FAIL,
                'finding': f"j = {evidence['current_density_A_per_cm2']:.3e} A/cm^2 exceeds the limit{note}",
                'evidence': evidence,
                'risk': 'Conductor overheats and fuses',
            }
        if utilization > 0.9:
            return {
                'status': CheckStatus.WARNING,
                'finding': f"j = {evidence['current_density_A_per_cm2']:.3e} A/cm^2, "
                           f"{100 * utilization:.0f}% of the limit{note}",
                'evidence': evidence,
                'risk': 'Little margin for current pulses',
            }
        return {
            'status': CheckStatus.PASS,
            'finding': f"j = {evidence['current_density_A_per_cm2']:.3e} A/cm^2, "
                       f"{100 * utilization:.0f}% of the limit{note}",
            'evidence': evidence,
            'risk': 'None',
        }
