"""
Base class for all chip design checks
"""

import logging
from abc import ABC, abstractmethod
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Iterable, List

from src.core.errors import AtomChipError

logger = logging.getLogger(__name__)


class CheckStatus(Enum):
    """Status of a design check"""
    PASS = "PASS"
    FAIL = "FAIL"
    WARNING = "WARNING"
    ERROR = "ERROR"
    NOT_APPLICABLE = "NOT_APPLICABLE"


class Severity(Enum):
    """How bad a failed check is for the experiment"""
    CRITICAL = "CRITICAL"
    HIGH = "HIGH"
    MEDIUM = "MEDIUM"
    LOW = "LOW"
    INFO = "INFO"


class BaseCheck(ABC):
    """
    Base class for design checks on layouts, conductors and traps

    Subclasses set their metadata in __init__ and implement check().
    """

    def __init__(self):
        self.id: str = ""
        self.title: str = ""
        self.description: str = ""
        self.category: str = ""
        self.severity: Severity = Severity.MEDIUM
        self.remediation: str = ""

    @abstractmethod
    def check(self) -> Dict[str, Any]:
        """
        Perform the check

        Returns:
            Dictionary with check results:
            {
                'status': CheckStatus,
                'finding': str (description of finding),
                'evidence': Any (supporting numbers, SI units),
                'risk': str (what goes wrong in the experiment),
                'remediation': str (how to fix)
            }
        """

    def run(self) -> Dict[str, Any]:
        """
        Execute the check and return formatted result

        Errors raised by the physics code become an ERROR result instead
        of propagating.
        """
        try:
            result = self.check()
            error = None
        except AtomChipError as e:
            logger.warning("Check %s failed to run: %s", self.id, e)
            result = {'status': CheckStatus.ERROR, 'finding': 'Check execution failed'}
            error = str(e)

        return {
            'id': self.id,
            'title': self.title,
            'description': self.description,
            'category': self.category,
            'severity': self.severity.value,
            'status': result.get('status', CheckStatus.ERROR).value,
            'finding': result.get('finding', 'No finding recorded'),
            'evidence': result.get('evidence'),
            'risk': result.get('risk', ''),
            'remediation': result.get('remediation', self.remediation),
            'timestamp': datetime.now(timezone.utc).isoformat(),
            'error': error,
        }

    def __repr__(self):
        return f"<{self.__class__.__name__}: {self.id} - {self.title}>"


def run_checks(checks: Iterable[BaseCheck]) -> List[Dict[str, Any]]:
    """Run every check, logging failures"""
    results = []
    for check in checks:
        result = check.run()
        level = logging.INFO if result['status'] in ('PASS', 'NOT_APPLICABLE') else logging.WARNING
        logger.log(level, "%s %s: %s", result['id'], result['status'], result['finding'])
        results.append(result)
    return results


def failed(results: Iterable[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Results that block the design (FAIL on a CRITICAL or HIGH check)"""
    blocking = {Severity.CRITICAL.value, Severity.HIGH.value}
    return [r for r in results if r['status'] == CheckStatus.FAIL.value and r['severity'] in blocking]


def data_view(results: Iterable[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Results as written to data files, without run timestamps"""
    return [{k: v for k, v in r.items() if k != 'timestamp'} for r in results]


def run_times(results: Iterable[Dict[str, Any]]) -> Dict[str, str]:
    """Check id -> run timestamp, for the provenance sidecar"""
    return {r['id']: r['timestamp'] for r in results}
