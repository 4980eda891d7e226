"""
Spin-flip (Majorana) safety of a trap minimum
"""

from src.analysis.report import TrapReport, adiabaticity
from src.checks.base_check import BaseCheck, CheckStatus, Severity
from src.core.units import GAUSS


class MajoranaCheck(BaseCheck):
    """B_min must be large enough for the spin to follow the field adiabatically"""

    def __init__(self, report: TrapReport, factor: float = 10.0):
        super().__init__()
        self.id = "TRAP-1"
        self.title = "Adiabatic spin precession at the trap minimum"
        self.description = "Larmor precession must be faster than the oscillation by the adiabaticity factor"
        self.category = "Trap"
        self.severity = Severity.HIGH
        self.remediation = "Raise the axial bias or lower the transverse gradient"
        self.report = report
        self.factor = factor

    def check(self):
        if self.report.gradient is None or not self.report.gradient > 0:
            return {'status': CheckStatus.NOT_APPLICABLE, 'finding': 'No gradient recorded for this trap'}
        required = adiabaticity(self.report, self.report.species, self.factor)
        evidence = {
            'B_min_G': self.report.B_min / GAUSS,
            'B_required_G': required.B0 / GAUSS,
            'factor': self.factor,
        }
        if self.report.B_min < required.B0:
            return {
                'status': CheckStatus.FAIL,
                'finding': f"B_min = {self.report.B_min / GAUSS:.3g} G below the adiabatic bias {required.B0 / GAUSS:.3g} G",
                'evidence': evidence,
                'risk': 'Spin flips to untrapped states near the minimum',
            }
        return {
            'status': CheckStatus.PASS,
            'finding': f"B_min exceeds the adiabatic bias by {self.report.B_min / required.B0:.1f}x",
            'evidence': evidence,
            'risk': 'None',
        }
