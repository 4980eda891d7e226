#!/usr/bin/env python3
"""
atomchip - design and analysis of atom-chip magnetic microtraps

Subcommands write plot-ready data files (CSV/JSON) into the output
directory, each with a <stem>.meta.json provenance sidecar.

Exit codes: 0 success, 1 unreadable input or bad flags, 2 invalid input,
3 runtime failure.
"""

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

# Ensure project root is in path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.analysis.minimum import find_minimum
from src.analysis.profile import longitudinal_profile, quad_params
from src.analysis.report import characterize, report_from_curvatures
from src.checks.base_check import data_view, run_checks, run_times
from src.checks.electrical.current_density_check import CurrentDensityCheck
from src.checks.layout.four_wire_check import FourWireCurrentCheck, require_opposed_current
from src.checks.layout.planarity_check import PlanarityCheck
from src.checks.trap.majorana_check import MajoranaCheck
from src.core.config_loader import ConfigLoader
from src.core.constants import CONSTANTS, AtomSpecies, get_species
from src.core.errors import AtomChipError, ConfigError, InvalidParams, NoGuide, exit_code_for
from src.core.layout_io import load_layout, load_schedule, save_layout, save_schedule
from src.core.logging_setup import LEVELS, configure_logging
from src.core.model import Layout
from src.core.schedule import Schedule
from src.core.units import G_PER_CM, G_PER_CM2, GAUSS, MM, UM
from src.dynamics.collider import CloudState, collider_run, rf_truncate, thermal_cloud
from src.dynamics.conveyor import conveyor_transport
from src.dynamics.potential import potential_1d
from src.field.grid import GridSpec, export_grid, grid_eval, project_min, thread_count
from src.reporting.export import write_csv, write_json, write_meta
from src.traps.builders import (calibrate_four_wire, describe, make_crossing_trap, make_elongated_Z,
                                make_four_wire, make_H_trap, make_side_guide, make_strip)
from src.traps.conveyor import (collider_schedule, conveyor_schedule, make_collider_chip,
                                make_conveyor_chip)
from src.traps.limits import conductor_limits, strip_surface_field
from src.traps.optimize import optimize_spacing
from src.traps.rotation import axis_seed, make_cross_layout, rotation_state

logger = logging.getLogger('atomchip')

console = Console()
err_console = Console(stderr=True)

BUILDERS = ('side_guide', 'crossing', 'H', 'four_wire', 'elongated_Z', 'strip', 'cross', 'conveyor', 'collider')

# bundled collider scenario
COLLIDER_RELEASE = 1e-3
COLLIDER_DURATION = 100e-3
COLLIDER_RANGE = (-3300.0, 3300.0, 331)

# bundled conveyor scenario
CONVEYOR_RANGE = (-1000.0, 1000.0, 201)

STATUS_DISPLAY = {
    'PASS': '✅ PASS',
    'FAIL': '❌ FAIL',
    'WARNING': '⚠️  WARN',
    'NOT_APPLICABLE': '➖ N/A',
}


class CliParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    """Resolved settings of one CLI invocation"""
    subcommand: str
    output_dir: Path
    species: AtomSpecies
    seed: int
    threads: int
    command: List[str]
    config: ConfigLoader

    @classmethod
    def from_args(cls, args: argparse.Namespace, config: ConfigLoader, argv: Sequence[str]) -> 'RunConfig':
        output_dir = Path(args.output_dir or config.get('output.directory', 'results'))
        output_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(output_dir, os.W_OK):
            raise InvalidParams(f"Output directory is not writable: {output_dir}")
        seed = args.seed if args.seed is not None else int(config.get('dynamics.seed', 12345))
        return cls(
            subcommand=args.command,
            output_dir=output_dir,
            species=get_species(args.species or config.get('species', 'Rb87')),
            seed=seed,
            threads=thread_count(int(config.get('numerics.threads', 1))),
            command=['atomchip.py', *argv],
            config=config,
        )

    def stem(self, name: Optional[str]) -> Path:
        return self.output_dir / (name or self.subcommand)

    def minimizer_options(self) -> Dict[str, float]:
        options = self.config.get_minimizer_config()
        return {
            'max_iterations': int(options.get('max_iterations', 200)),
            'gradient_tolerance': float(options.get('gradient_tolerance', 1e-10)),
            'step_tolerance': float(options.get('step_tolerance', 1e-9)),
            'sanity_half_width': float(options.get('sanity_half_width_mm', 5.0)) * MM,
        }


# ---------------------------------------------------------------- helpers

def _axis_range(values: Optional[Sequence[float]]) -> tuple:
    """(lo, hi, n) in um from a flag value, n = 1 meaning a fixed coordinate"""
    if values is None:
        return 0.0, 0.0, 1
    lo, hi, n = values
    n = int(n)
    if n < 1:
        raise InvalidParams(f"Sample count must be >= 1, got {n}")
    return float(lo), float(hi) if n > 1 else float(lo), n


def _slices(values: Sequence[float]) -> np.ndarray:
    lo, hi, n = _axis_range(values)
    if n < 4 or not hi > lo:
        raise InvalidParams("Slice range needs hi > lo and at least 4 samples")
    return np.linspace(lo, hi, n) * UM


def _load_schedule(path: Optional[str], layout: Layout) -> Optional[Schedule]:
    if path is None:
        return None
    schedule = load_schedule(path)
    schedule.validate_against(layout.channel_names)
    return schedule


def _print_checks(results: List[Dict[str, Any]]):
    table = Table(show_header=True, header_style="bold")
    table.add_column("ID", style="cyan")
    table.add_column("Check", style="white")
    table.add_column("Status", style="white")
    table.add_column("Severity", style="yellow")
    table.add_column("Finding", style="white")
    for result in results:
        status = STATUS_DISPLAY.get(result['status'], '❓ ERROR')
        table.add_row(result['id'], result['title'], status, result['severity'], result['finding'])
    console.print(table)


def _default_seed(layout: Layout, guide: str) -> np.ndarray:
    """Point above the guide at its zero height, else the lowest |B| on the z axis"""
    try:
        quad = quad_params(layout, guide)
        return np.array([0.0, quad.axis_y, quad.axis_z])
    except NoGuide:
        return axis_seed(layout)


# ---------------------------------------------------------------- commands

def cmd_build(args, run: RunConfig) -> int:
    """Build a layout with the trap library and save it"""
    bias_x = args.bias_x * GAUSS
    bias_y = None if args.bias_y is None else args.bias_y * GAUSS

    def need_bias():
        if bias_y is None:
            raise InvalidParams(f"--bias-y is required for builder {args.builder}")
        return bias_y

    schedule = None
    if args.builder == 'side_guide':
        layout = make_side_guide(args.current, bias_y=bias_y,
                                 z0=None if args.z0_um is None else args.z0_um * UM, infinite=args.infinite)
    elif args.builder == 'crossing':
        layout = make_crossing_trap(args.current, args.cross_current, need_bias(), bias_x, infinite=args.infinite)
    elif args.builder == 'H':
        if args.spacing_um is None:
            raise InvalidParams("--spacing-um is required for builder H")
        layout = make_H_trap(args.current, args.i1, args.i2, args.spacing_um * UM, need_bias(), bias_x,
                             infinite=args.infinite)
    elif args.builder == 'four_wire':
        spacing = None if args.spacing_um is None else args.spacing_um * UM
        if args.kappa is not None:
            layout = calibrate_four_wire(args.current, args.i1, args.i3, need_bias(), args.kappa * G_PER_CM2,
                                         bias_x, infinite=args.infinite)
        else:
            layout = make_four_wire(args.current, args.i1, args.i2, args.i3, need_bias(), bias_x, spacing,
                                    infinite=args.infinite)
    elif args.builder == 'elongated_Z':
        layout = make_elongated_Z(args.current, need_bias(), bridge=args.bridge_mm * MM)
    elif args.builder == 'strip':
        layout = make_strip(args.current, args.width_um * UM, args.height_um * UM)
    elif args.builder == 'cross':
        layout = make_cross_layout(rotation_state(args.angle), bent=args.bent)
    elif args.builder == 'conveyor':
        layout = make_conveyor_chip()
        schedule = conveyor_schedule(args.period_ms * 1e-3, args.periods, args.direction)
    else:
        layout = make_collider_chip()
        schedule = collider_schedule(args.release_ms * 1e-3, args.duration_ms * 1e-3)

    path = Path(args.out) if args.out else run.stem(args.name or args.builder).with_suffix('.json')
    save_layout(layout, path)
    written = [str(path)]
    if schedule is not None:
        schedule_path = path.with_name(path.stem + '.schedule.json')
        save_schedule(schedule, schedule_path)
        written.append(str(schedule_path))
    write_meta(path.with_suffix(''), run.command, layout=layout)
    console.print(describe(layout))
    for item in written:
        console.print(f"wrote {item}")
    return 0


def cmd_field(args, run: RunConfig) -> int:
    """|B| on a line, plane or volume grid"""
    layout = load_layout(args.layout)
    multipliers = None
    if args.schedule:
        multipliers = _load_schedule(args.schedule, layout).multipliers(args.time_ms * 1e-3)
    ranges = [_axis_range(v) for v in (args.x, args.y, args.z)]
    spec = GridSpec(
        lower=tuple(r[0] * UM for r in ranges),
        upper=tuple(r[1] * UM for r in ranges),
        counts=tuple(r[2] for r in ranges),
    )
    result = grid_eval(layout, spec, multipliers, threads=run.threads)
    stem = run.stem(args.name)
    export_grid(result, stem)
    if args.project:
        values, coords = project_min(result, args.project)
        frame = pd.DataFrame({
            'B_min_G': np.ravel(values) / GAUSS,
            f"{args.project}_at_min_um": np.ravel(coords) / UM,
        })
        write_csv(frame, stem.parent / f"{stem.name}_min_{args.project}.csv")
    write_meta(stem, run.command, layout=layout, extra={'grid': spec.to_dict()})
    console.print(f"singular points: {result.singular_count}")
    console.print(f"min |B| = {result.min_value / GAUSS:.6g} G at "
                  f"{np.round(result.argmin_point() / UM, 3).tolist()} um")
    return 0


def cmd_profile(args, run: RunConfig) -> int:
    """Exact and approximate longitudinal profile along a guide"""
    layout = load_layout(args.layout)
    if args.x:
        xs = _slices(args.x)
    else:
        quad = quad_params(layout, args.guide)
        xs = np.linspace(-3.0 * quad.z0, 3.0 * quad.z0, int(run.config.get('profile.samples', 401)))
    profile = longitudinal_profile(layout, args.guide, xs)
    stem = run.stem(args.name)
    write_csv(profile.to_frame(), stem.with_suffix('.csv'))
    error = np.abs(profile.approximation_error)
    summary = {
        'z0_um': profile.quad.z0 / UM,
        'b_G_per_cm': profile.quad.b / G_PER_CM,
        'Bmin_exact_min_G': float(np.min(profile.B_exact)) / GAUSS,
        'max_abs_error_G': float(np.max(error)) / GAUSS,
        'max_rel_error': float(np.max(error) / np.max(profile.B_exact)),
    }
    write_json(summary, stem.with_suffix('.json'))
    write_meta(stem, run.command, layout=layout)
    console.print(f"z0 = {summary['z0_um']:.3f} um, b = {summary['b_G_per_cm']:.4g} G/cm, "
                  f"max approximation error {summary['max_abs_error_G']:.4g} G")
    return 0


def cmd_trap(args, run: RunConfig) -> int:
    """Locate and characterize a trap minimum"""
    layout = load_layout(args.layout)
    pre_checks = [PlanarityCheck(layout)]
    four_wire = FourWireCurrentCheck.from_layout(layout)
    if four_wire is not None:
        require_opposed_current(*four_wire.currents)
        pre_checks.append(four_wire)

    seed = np.asarray(args.seed_point) * UM if args.seed_point else _default_seed(layout, args.guide)
    minimum = find_minimum(layout, seed, **run.minimizer_options())
    if args.curvature_override:
        report = report_from_curvatures(np.asarray(args.curvature_override) * G_PER_CM2, run.species,
                                        B_min=minimum.B_min, r_min=minimum.point)
    else:
        richardson = bool(run.config.get('numerics.richardson', False))
        box = None
        if args.box_um:
            half = args.box_um * UM
            box = (minimum.point - half, minimum.point + half)
        report = characterize(layout, minimum.point, run.species, box=box, richardson=richardson)

    factor = float(run.config.get('limits.adiabaticity_factor', 10.0))
    results = run_checks(pre_checks + [MajoranaCheck(report, factor)])
    stem = run.stem(args.name)
    write_json({'report': report.to_dict(), 'checks': data_view(results)}, stem.with_suffix('.json'))
    write_meta(stem, run.command, layout=layout, extra={'check_times': run_times(results)})
    console.print(report.to_text())
    _print_checks(results)
    return 0


def cmd_optimize(args, run: RunConfig) -> int:
    """Crossing spacing with the largest longitudinal curvature"""
    result = optimize_spacing(args.current, args.cross_current, args.bias_y * GAUSS)
    summary = {
        'spacing_um': result.spacing / UM,
        'z0_um': result.z0 / UM,
        'spacing_over_z0': result.spacing / result.z0,
        'curvature_G_per_cm2': result.curvature / G_PER_CM2,
    }
    stem = run.stem(args.name)
    write_json(summary, stem.with_suffix('.json'))
    write_meta(stem, run.command)
    console.print(f"a* = {summary['spacing_um']:.4f} um = {summary['spacing_over_z0']:.5f} z0")
    return 0


def cmd_limits(args, run: RunConfig) -> int:
    """Resistance, dissipation and current density of a conductor"""
    j_max = args.j_max if args.j_max is not None else float(run.config.get('limits.j_max_A_per_cm2', 4.6e6))
    limits = conductor_limits(args.width_um * UM, args.height_um * UM, args.resistivity * 1e-8, args.current,
                              j_max=j_max * 1e4, rated_current=args.rated_current)
    results = run_checks([CurrentDensityCheck(limits)])
    summary = {
        'R_per_cm': limits.resistance_per_length / 1e2,
        'P_per_cm': limits.power_per_length / 1e2,
        'j': limits.current_density * 1e-4,
        'j_max': limits.j_max * 1e-4,
        'ok': not limits.exceeds,
        'details': limits.to_dict(),
        'checks': data_view(results),
    }
    if args.length_mm is not None:
        summary['total_power_W'] = limits.total_power(args.length_mm * MM)
    if args.strip_distance_um is not None:
        summary['strip_field'] = strip_surface_field(
            args.width_um * UM, args.height_um * UM, args.current, args.strip_distance_um * UM).to_dict()
    stem = run.stem(args.name)
    write_json(summary, stem.with_suffix('.json'))
    write_meta(stem, run.command, extra={'check_times': run_times(results)})
    console.print(f"R = {summary['R_per_cm']:.4g} Ohm/cm, P = {summary['P_per_cm']:.4g} W/cm, "
                  f"j = {summary['j']:.4g} A/cm^2 (limit {summary['j_max']:.4g})")
    _print_checks(results)
    return 0


def cmd_schedule(args, run: RunConfig) -> int:
    """Conveyor transport: follow the wells through a schedule"""
    if args.layout:
        layout = load_layout(args.layout)
        if not args.schedule:
            raise InvalidParams("--schedule is required together with --layout")
        if not args.x:
            raise InvalidParams("--x is required together with --layout")
        schedule = _load_schedule(args.schedule, layout)
        xs = _slices(args.x)
    else:
        layout = make_conveyor_chip()
        schedule = conveyor_schedule(args.period_ms * 1e-3, args.periods, args.direction)
        xs = _slices(args.x or CONVEYOR_RANGE)
    duration = args.duration_ms * 1e-3 if args.duration_ms is not None else schedule.duration
    track = None if args.track is None else [v * UM for v in args.track]
    record = conveyor_transport(layout, schedule, duration, args.dt_ms * 1e-3, xs, run.species,
                                guide=args.guide, track=track)
    stem = run.stem(args.name)
    write_csv(record.to_frame(), stem.with_suffix('.csv'))
    write_json(record.summary(), stem.with_suffix('.json'))
    write_meta(stem, run.command, layout=layout)
    for i in range(record.positions.shape[1]):
        final = record.positions[-1, i]
        shown = 'lost' if not np.isfinite(final) else f"{final / UM:.2f} um"
        console.print(f"well {i}: {record.positions[0, i] / UM:.2f} um -> {shown}")
    return 0


def _pick_wells(minima: Sequence[float], targets: Sequence[float]) -> List[float]:
    xs = np.asarray(minima)
    if len(xs) < 2:
        raise InvalidParams(f"Need two wells before release, found {len(xs)}")
    return [float(xs[np.argmin(np.abs(xs - t))]) for t in targets]


def cmd_collide(args, run: RunConfig) -> int:
    """Release two clouds into the guide and record their encounter"""
    if args.layout:
        layout = load_layout(args.layout)
        if not args.schedule or args.release_ms is None:
            raise InvalidParams("--schedule and --release-ms are required together with --layout")
        schedule = _load_schedule(args.schedule, layout)
        release = args.release_ms * 1e-3
    else:
        layout = make_collider_chip()
        release = COLLIDER_RELEASE
        schedule = collider_schedule(release, release + COLLIDER_DURATION)
    duration = args.duration_ms * 1e-3 if args.duration_ms is not None else schedule.duration - release
    xs = _slices(args.x or COLLIDER_RANGE)
    dynamics = run.config.get_dynamics_config()
    dt = (args.dt_us if args.dt_us is not None else float(dynamics.get('dt_us', 10.0))) * 1e-6
    record_interval = float(dynamics.get('record_interval_ms', 1.0)) * 1e-3
    ensemble = args.ensemble if args.ensemble is not None else int(dynamics.get('ensemble_size', 0))
    temperature = (args.temperature_uk if args.temperature_uk is not None
                   else float(dynamics.get('temperature_uK', 1.0))) * 1e-6

    # wells of the preparation potential, just before the release step
    prepared = potential_1d(layout, schedule, 0.0, xs, run.species, args.guide)
    minima = [x for x, _ in prepared.local_minima()]
    pin = dict(layout.metadata).get('pin_position')
    if args.left_um is not None and args.right_um is not None:
        targets = [args.left_um * UM, args.right_um * UM]
    elif pin is not None:
        targets = [-pin, pin]
    else:
        targets = sorted(minima, key=lambda x: prepared.spline(x))[:2]
    positions = sorted(_pick_wells(minima, targets))

    clouds = []
    for i, (label, x) in enumerate(zip(('left', 'right'), positions)):
        if ensemble > 0:
            cloud = thermal_cloud(prepared, x, temperature, ensemble, run.seed + i, label)
            if math.isfinite(args.rf_cutoff_uk):
                cloud = rf_truncate(cloud, args.rf_cutoff_uk * 1e-6 * CONSTANTS.kB, prepared)
        else:
            cloud = CloudState(label, x)
        clouds.append(cloud)
    logger.info("Clouds at %s um, seed %d", [round(c.x / UM, 2) for c in clouds], run.seed)

    record = collider_run(layout, schedule, release, clouds, dt, duration, xs, run.species, guide=args.guide,
                          record_interval=record_interval, seed=run.seed)
    stem = run.stem(args.name)
    record.export(stem)
    write_meta(stem, run.command, layout=layout, seed=run.seed)
    summary = record.summary()
    if summary['encounter_t_ms'] is None:
        console.print("clouds did not meet")
    else:
        console.print(f"encounter at t = {summary['encounter_t_ms']:.3f} ms, "
                      f"x = {summary['encounter_x_um']:.3f} um (seed {run.seed})")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog='atomchip.py', description=__doc__.strip().splitlines()[0])
    parser.add_argument('--config', help='YAML configuration file (defaults built in)')
    parser.add_argument('--log-level', type=str.upper, choices=LEVELS, help='Console and log file level')
    parser.add_argument('--log-file', help='Also write log records to this file')
    parser.add_argument('--output-dir', help='Directory for data files and sidecars')
    parser.add_argument('--seed', type=int, help='Random seed (default from config)')
    parser.add_argument('--species', help='Atom species (default Rb87)')
    sub = parser.add_subparsers(dest='command', required=True, metavar='COMMAND')

    def grid_axis(p, name):
        p.add_argument(f"--{name}", nargs=3, type=float, metavar=('LO_UM', 'HI_UM', 'N'),
                       help=f"{name} range in um and sample count (N = 1 fixes the coordinate at LO)")

    p = sub.add_parser('build', help='Build a layout with the trap library')
    p.add_argument('builder', choices=BUILDERS)
    p.add_argument('--out', help='Layout file (default <output-dir>/<builder>.json)')
    p.add_argument('--name', help='Output stem inside the output directory')
    p.add_argument('--current', type=float, default=2.0, help='Guide current I0 (A)')
    p.add_argument('--cross-current', type=float, default=0.5, help='Crossing current I1 (A)')
    p.add_argument('--i1', type=float, default=0.5, help='First crossing current (A)')
    p.add_argument('--i2', type=float, default=0.5, help='Second crossing current (A)')
    p.add_argument('--i3', type=float, default=0.5, help='Third crossing current (A)')
    p.add_argument('--spacing-um', type=float, help='Crossing spacing (um)')
    p.add_argument('--bias-x', type=float, default=0.0, help='Axial bias B0x (G)')
    p.add_argument('--bias-y', type=float, help='Transverse bias B0y (G)')
    p.add_argument('--z0-um', type=float, help='Guide height instead of --bias-y (um, side_guide)')
    p.add_argument('--kappa', type=float, help='Four-wire: calibrate I2 for this transverse curvature (G/cm^2)')
    p.add_argument('--bridge-mm', type=float, default=7.0, help='Elongated Z bridge length (mm)')
    p.add_argument('--width-um', type=float, default=10.0, help='Strip width (um)')
    p.add_argument('--height-um', type=float, default=7.0, help='Strip height (um)')
    p.add_argument('--angle', type=float, default=0.0, help='Cross: rotation angle (deg, 0..90)')
    p.add_argument('--bent', action='store_true', help='Cross: bent-conductor variant')
    p.add_argument('--infinite', action='store_true', help='Model straight wires as infinite lines')
    p.add_argument('--period-ms', type=float, default=10.0, help='Conveyor modulation period (ms)')
    p.add_argument('--periods', type=int, default=1, help='Conveyor periods')
    p.add_argument('--direction', type=int, default=1, choices=(1, -1), help='Conveyor direction')
    p.add_argument('--release-ms', type=float, default=1.0, help='Collider release time (ms)')
    p.add_argument('--duration-ms', type=float, default=101.0, help='Collider schedule length (ms)')
    p.set_defaults(handler=cmd_build)

    p = sub.add_parser('field', help='Evaluate |B| on a grid')
    p.add_argument('layout', help='Layout file')
    for axis in ('x', 'y', 'z'):
        grid_axis(p, axis)
    p.add_argument('--schedule', help='Schedule file supplying channel values')
    p.add_argument('--time-ms', type=float, default=0.0, help='Schedule time (ms)')
    p.add_argument('--project', choices=('x', 'y', 'z'), help='Also write the minimum along this axis')
    p.add_argument('--name', help='Output stem (default field)')
    p.set_defaults(handler=cmd_field)

    p = sub.add_parser('profile', help='Longitudinal profile along a guide')
    p.add_argument('layout', help='Layout file')
    grid_axis(p, 'x')
    p.add_argument('--guide', default='guide', help='Guide element name')
    p.add_argument('--name', help='Output stem (default profile)')
    p.set_defaults(handler=cmd_profile)

    p = sub.add_parser('trap', help='Find and characterize a trap minimum')
    p.add_argument('layout', help='Layout file')
    p.add_argument('--seed-point', nargs=3, type=float, metavar=('X_UM', 'Y_UM', 'Z_UM'),
                   help='Start of the minimum search (default: above the guide)')
    p.add_argument('--curvature-override', nargs=3, type=float, metavar='KAPPA',
                   help='Use these curvatures (G/cm^2) instead of the computed Hessian')
    p.add_argument('--box-um', type=float, help='Half-width of the trap-depth box (um)')
    p.add_argument('--guide', default='guide', help='Guide element used for the default seed')
    p.add_argument('--name', help='Output stem (default trap)')
    p.set_defaults(handler=cmd_trap)

    p = sub.add_parser('optimize', help='Optimal crossing spacing')
    p.add_argument('--current', type=float, default=2.0, help='Guide current I0 (A)')
    p.add_argument('--cross-current', type=float, default=0.5, help='Crossing current I1 (A)')
    p.add_argument('--bias-y', type=float, default=160.0, help='Transverse bias B0y (G)')
    p.add_argument('--name', help='Output stem (default optimize)')
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser('limits', help='Electrical limits of a conductor')
    p.add_argument('--width-um', type=float, default=10.0, help='Conductor width (um)')
    p.add_argument('--height-um', type=float, default=7.0, help='Conductor height (um)')
    p.add_argument('--resistivity', type=float, default=2.2, help='Resistivity (uOhm cm)')
    p.add_argument('--current', type=float, default=1.0, help='Current (A)')
    p.add_argument('--j-max', type=float, help='Current density limit (A/cm^2, default from config)')
    p.add_argument('--rated-current', type=float, default=3.0, help='Current the limit was quoted for (A)')
    p.add_argument('--length-mm', type=float, help='Conductor length for the total power (mm)')
    p.add_argument('--strip-distance-um', type=float, help='Also report |B| this far above the top face (um)')
    p.add_argument('--name', help='Output stem (default limits)')
    p.set_defaults(handler=cmd_limits)

    p = sub.add_parser('schedule', help='Conveyor transport (bundled conveyor chip by default)')
    p.add_argument('--layout', help='Layout file (default: bundled conveyor chip)')
    p.add_argument('--schedule', help='Schedule file, required with --layout')
    grid_axis(p, 'x')
    p.add_argument('--period-ms', type=float, default=10.0, help='Bundled modulation period (ms)')
    p.add_argument('--periods', type=int, default=1, help='Bundled number of periods')
    p.add_argument('--direction', type=int, default=1, choices=(1, -1), help='Bundled transport direction')
    p.add_argument('--duration-ms', type=float, help='Tracked time (ms, default whole schedule)')
    p.add_argument('--dt-ms', type=float, default=0.25, help='Time step (ms, at most 1)')
    p.add_argument('--track', nargs='+', type=float, metavar='X_UM', help='Initial positions of tracked wells (um)')
    p.add_argument('--guide', default='guide', help='Guide element name')
    p.add_argument('--name', help='Output stem (default schedule)')
    p.set_defaults(handler=cmd_schedule)

    p = sub.add_parser('collide', help='Linear collider (bundled symmetric scenario by default)')
    p.add_argument('--layout', help='Layout file (default: bundled collider chip)')
    p.add_argument('--schedule', help='Schedule file, required with --layout')
    p.add_argument('--release-ms', type=float, help='Release time, required with --layout (ms)')
    p.add_argument('--duration-ms', type=float, help='Integration time after release (ms)')
    p.add_argument('--dt-us', type=float, help='Time step (us, default from config)')
    grid_axis(p, 'x')
    p.add_argument('--left-um', type=float, help='Left cloud start (um, default: left well)')
    p.add_argument('--right-um', type=float, help='Right cloud start (um, default: right well)')
    p.add_argument('--ensemble', type=int, help='Particles per cloud (0: center of mass only)')
    p.add_argument('--temperature-uk', type=float, help='Cloud temperature (uK)')
    p.add_argument('--rf-cutoff-uk', type=float, default=math.inf, help='rf truncation energy (uK)')
    p.add_argument('--guide', default='guide', help='Guide element name')
    p.add_argument('--name', help='Output stem (default collide)')
    p.set_defaults(handler=cmd_collide)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1

    try:
        config = ConfigLoader(args.config)
        logging_config = config.get_logging_config()
        configure_logging(args.log_level or logging_config.get('level', 'INFO'),
                          args.log_file or logging_config.get('file'))
    except (ConfigError, OSError) as e:
        err_console.print(f"error: {e}", markup=False, highlight=False)
        return 1

    try:
        run = RunConfig.from_args(args, config, argv)
        return args.handler(args, run)
    except (AtomChipError, FileNotFoundError, IsADirectoryError) as e:
        err_console.print(f"error: {type(e).__name__}: {e}", markup=False, highlight=False)
        return exit_code_for(e, default=2)
    except Exception as e:
        logger.exception("Unexpected failure in %s", args.command)
        err_console.print(f"error: internal error: {type(e).__name__}: {e}", markup=False, highlight=False)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
