"""
Four-wire trap - center current bound

The opposed center crossing lowers B_min; once |I2| reaches the mean of
the outer currents the longitudinal field vanishes at the center.
"""

from typing import Mapping, Optional

from src.checks.base_check import BaseCheck, CheckStatus, Severity
from src.core.errors import FieldZeroRisk, InvalidParams
from src.core.model import Layout


def require_opposed_current(current_1: float, current_2: float, current_3: float):
    """
    Raises:
        InvalidParams: I2 not opposed to I1 + I3
        FieldZeroRisk: |I2| >= (I1 + I3) / 2
    """
    outer = current_1 + current_3
    if outer == 0:
        raise InvalidParams("Outer crossing currents must not cancel")
    if current_2 != 0 and (current_2 > 0) == (outer > 0):
        raise InvalidParams(f"Center current {current_2} A must be opposed to the outer currents")
    if abs(current_2) >= abs(outer) / 2:
        raise FieldZeroRisk(
            f"|I2| = {abs(current_2):.4g} A >= (I1 + I3)/2 = {abs(outer) / 2:.4g} A: field zero at the trap center")


class FourWireCurrentCheck(BaseCheck):
    """Check the center current of a four-wire trap against the zero-field bound"""

    def __init__(self, current_1: float, current_2: float, current_3: float):
        super().__init__()
        self.id = "TRAP-4W-1"
        self.title = "Four-wire center current below zero-field bound"
        self.description = "|I2| < (I1 + I3) / 2 keeps B_min above zero between the outer crossings"
        self.category = "Layout"
        self.severity = Severity.CRITICAL
        self.remediation = "Reduce the center current or raise the outer crossing currents"
        self.currents = (current_1, current_2, current_3)

    @classmethod
    def from_layout(cls, layout: Layout) -> Optional['FourWireCurrentCheck']:
        """
        Check for a four-wire layout built by the trap library, else None

        Currents are read from the crossing elements, so edits made to a
        saved layout are checked too.
        """
        meta: Mapping = layout.metadata
        if meta.get('builder') != 'four_wire':
            return None
        currents = {e.name: e.current for e in (*layout.conductors, *layout.infinite_wires)}
        return cls(*(currents.get(name, meta.get(key, 0.0))
                     for name, key in (('cross1', 'I1'), ('cross2', 'I2'), ('cross3', 'I3'))))

    def check(self):
        i1, i2, i3 = self.currents
        bound = abs(i1 + i3) / 2
        evidence = {'I1': i1, 'I2': i2, 'I3': i3, 'bound': bound}
        try:
            require_opposed_current(i1, i2, i3)
        except FieldZeroRisk as e:
            return {
                'status': CheckStatus.FAIL,
                'finding': str(e),
                'evidence': evidence,
                'risk': 'Majorana losses at the field zero; no Ioffe-Pritchard trap',
            }
        except InvalidParams as e:
            return {
                'status': CheckStatus.FAIL,
                'finding': str(e),
                'evidence': evidence,
                'risk': 'Center crossing raises B_min instead of lowering it',
            }
        margin = (bound - abs(i2)) / bound
        return {
            'status': CheckStatus.WARNING if margin < 0.05 else CheckStatus.PASS,
            'finding': f"Center current at {100 * (1 - margin):.1f}% of the zero-field bound",
            'evidence': evidence,
            'risk': 'Small current drifts close the trap' if margin < 0.05 else 'None',
        }
