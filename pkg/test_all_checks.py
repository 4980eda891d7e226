#!/usr/bin/env python3
"""
Test all implemented design checks

Run with pytest, or directly for a summary table over the bundled layouts.
"""

import sys
import os
from dataclasses import replace

# Ensure project root is in path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest
from rich.console import Console
from rich.table import Table

from src.analysis.report import report_from_curvatures
from src.checks.base_check import BaseCheck, CheckStatus, Severity, failed, run_checks
from src.checks.electrical.current_density_check import CurrentDensityCheck
from src.checks.layout.four_wire_check import FourWireCurrentCheck
from src.checks.layout.planarity_check import PlanarityCheck
from src.checks.trap.majorana_check import MajoranaCheck
from src.core.constants import species_rb87
from src.core.errors import ZeroFieldRegion
from src.core.layout_io import load_layout
from src.core.model import Conductor, InfiniteWire, Layout
from src.core.units import G_PER_CM, G_PER_CM2, GAUSS, UM
from src.traps.builders import make_four_wire
from src.traps.limits import conductor_limits

LAYOUTS = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'layouts')


def limits_at(current):
    return conductor_limits(10 * UM, 7 * UM, 2.2e-8, current)


def trap_report(B_min_G, gradient_G_per_cm=4.12e5):
    report = report_from_curvatures(np.array([1.09e9, 1.09e9, 1.63e7]) * G_PER_CM2, species_rb87(),
                                    B_min=B_min_G * GAUSS)
    return replace(report, gradient=gradient_G_per_cm * G_PER_CM)


# ---------------------------------------------------------------- planarity

def test_planarity_reports_crossing(crossing_trap):
    result = PlanarityCheck(crossing_trap).run()
    assert result['status'] == 'WARNING'
    assert result['evidence']['crossings'] == [('guide', 'cross')]


def test_planarity_passes_for_z(z_trap):
    assert PlanarityCheck(z_trap).run()['status'] == 'PASS'


def test_planarity_flags_lifted_conductor():
    layout = Layout(conductors=(Conductor('lifted', ((0.0, 0.0, 0.0), (1e-3, 0.0, 5e-6)), 1.0),))
    result = PlanarityCheck(layout).run()
    assert result['status'] == 'WARNING'
    assert result['evidence']['non_planar'] == ['lifted']


def test_planarity_not_applicable_without_conductors():
    layout = Layout(infinite_wires=(InfiniteWire.along('guide', (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), 1.0),))
    assert PlanarityCheck(layout).run()['status'] == 'NOT_APPLICABLE'


# ---------------------------------------------------------------- four-wire

@pytest.mark.parametrize('currents, status', [
    ((0.5, -0.2, 0.5), 'PASS'),
    ((0.5, 0.0, 0.5), 'PASS'),
    ((0.5, -0.49, 0.5), 'WARNING'),
    ((0.5, -0.5, 0.5), 'FAIL'),
    ((0.5, 0.2, 0.5), 'FAIL'),
])
def test_four_wire_bound(currents, status):
    assert FourWireCurrentCheck(*currents).run()['status'] == status


def test_four_wire_reads_layout_currents():
    layout = make_four_wire(2.0, 0.5, -0.2, 0.5, 160 * GAUSS)
    check = FourWireCurrentCheck.from_layout(layout.with_current('cross2', -0.7))
    assert check.currents == (0.5, -0.7, 0.5)
    result = check.run()
    assert result['status'] == 'FAIL'
    assert result['severity'] == 'CRITICAL'


def test_four_wire_skips_other_layouts(crossing_trap):
    assert FourWireCurrentCheck.from_layout(crossing_trap) is None


# ---------------------------------------------------------------- electrical

@pytest.mark.parametrize('current, status', [(1.0, 'PASS'), (3.0, 'WARNING'), (3.3, 'FAIL')])
def test_current_density(current, status):
    result = CurrentDensityCheck(limits_at(current)).run()
    assert result['status'] == status
    assert 'does not match' in result['finding']


# ---------------------------------------------------------------- spin flips

def test_majorana_pass_and_fail():
    # adiabatic bias for 4.12e5 G/cm is about 2.4 G
    assert MajoranaCheck(trap_report(5.0)).run()['status'] == 'PASS'
    result = MajoranaCheck(trap_report(1.0)).run()
    assert result['status'] == 'FAIL'
    assert result['evidence']['B_required_G'] == pytest.approx(2.41, rel=0.02)


def test_majorana_without_gradient():
    report = report_from_curvatures([1e8, 1e8, 1e6], species_rb87(), B_min=1e-4)
    assert MajoranaCheck(report).run()['status'] == 'NOT_APPLICABLE'


# ---------------------------------------------------------------- base class

class RaisingCheck(BaseCheck):
    def __init__(self):
        super().__init__()
        self.id = "TEST-1"
        self.title = "Raises"
        self.severity = Severity.HIGH

    def check(self):
        raise ZeroFieldRegion("no minimum")


def test_check_errors_become_results():
    result = RaisingCheck().run()
    assert result['status'] == CheckStatus.ERROR.value
    assert result['error'] == 'no minimum'


def test_failed_keeps_blocking_results():
    results = run_checks([CurrentDensityCheck(limits_at(3.3)), PlanarityCheck(load_layout(
        os.path.join(LAYOUTS, 'crossing_trap.json')))])
    blocking = failed(results)
    assert [r['id'] for r in blocking] == ['ELEC-1']


def main():
    """Run all checks on the bundled layouts and display results"""
    console = Console()

    console.print("\n[bold blue]atomchip - Running All Checks[/bold blue]\n")

    crossing = load_layout(os.path.join(LAYOUTS, 'crossing_trap.json'))
    checks = [
        PlanarityCheck(crossing),
        PlanarityCheck(load_layout(os.path.join(LAYOUTS, 'elongated_z.json'))),
        FourWireCurrentCheck(0.5, -0.45, 0.5),
        CurrentDensityCheck(limits_at(1.0)),
        CurrentDensityCheck(limits_at(3.0)),
        MajoranaCheck(trap_report(4.85)),
    ]
    results = run_checks(checks)

    table = Table(show_header=True, header_style="bold")
    table.add_column("ID", style="cyan")
    table.add_column("Check", style="white")
    table.add_column("Status", style="white")
    table.add_column("Severity", style="yellow")
    for result in results:
        table.add_row(result['id'], result['title'], result['status'], result['severity'])
    console.print(table)

    passed = sum(r['status'] == 'PASS' for r in results)
    console.print(f"\n[bold]Passed {passed} of {len(results)} checks, "
                  f"{len(failed(results))} blocking[/bold]\n")


if __name__ == "__main__":
    main()
