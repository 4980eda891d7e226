"""
Layout and schedule documents

Both formats are JSON-compatible objects with a `format_version` field and
explicit unit tags. They are read with PyYAML (JSON is a YAML subset) and
written as JSON.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml

from src.core.errors import FormatVersionError, LayoutSyntaxError, UnitError, ValidationError
from src.core.model import BIAS_AXES, Conductor, CrossSection, FieldModel, InfiniteWire, Layout
from src.core.schedule import Schedule, ScheduleSegment, SegmentKind
from src.core.units import from_si, get_scale_factor

logger = logging.getLogger(__name__)

FORMAT_MAJOR = 1
FORMAT_VERSION = "1.0"

LAYOUT_KEYS = {'format_version', 'units', 'conductors', 'infinite_wires', 'bias', 'channels', 'gravity', 'metadata'}
CONDUCTOR_KEYS = {'name', 'path', 'current', 'cross_section', 'model'}
WIRE_KEYS = {'name', 'anchor', 'direction', 'current'}
SCHEDULE_KEYS = {'format_version', 'units', 'duration', 'channels'}
SEGMENT_KEYS = {'t0', 't1', 'kind', 'from', 'to'}

DEFAULT_LAYOUT_UNITS = {'length': 'um', 'current': 'A', 'field': 'G'}
DEFAULT_SCHEDULE_UNITS = {'time': 'ms'}


def _load_document(text: str) -> Dict[str, Any]:
    # strict JSON first: PyYAML reads exponents without a dot ('1e-06') as strings
    try:
        document = json.loads(text)
    except json.JSONDecodeError:
        try:
            document = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise LayoutSyntaxError(f"Malformed document: {e}") from e
    if not isinstance(document, dict):
        raise LayoutSyntaxError("Document must be an object at the top level")
    return document


def _check_keys(obj: Mapping[str, Any], allowed: set, where: str):
    if not isinstance(obj, dict):
        raise LayoutSyntaxError(f"{where} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise LayoutSyntaxError(f"Unknown keys in {where}: {', '.join(sorted(map(str, unknown)))}")


def _check_version(document: Mapping[str, Any]):
    if 'format_version' not in document:
        raise LayoutSyntaxError("Missing format_version")
    raw = str(document['format_version'])
    try:
        major = int(raw.split('.')[0])
    except ValueError:
        raise LayoutSyntaxError(f"Unreadable format_version: {raw!r}") from None
    if major != FORMAT_MAJOR:
        raise FormatVersionError(f"Unsupported format major version {major} (reader supports {FORMAT_MAJOR})")


def _read_units(document: Mapping[str, Any], required: Mapping[str, str]) -> Dict[str, float]:
    units = document.get('units')
    if not isinstance(units, dict):
        raise UnitError("Missing units block")
    factors = {}
    for dimension in required:
        if dimension not in units:
            raise UnitError(f"Missing {dimension} unit tag")
        factors[dimension] = get_scale_factor(dimension, str(units[dimension]))
    extra = set(units) - set(required)
    if extra:
        raise UnitError(f"Unexpected unit tags: {', '.join(sorted(extra))}")
    return factors


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise LayoutSyntaxError(f"{where} must be a number, got {value!r}")
    return float(value)


def _vector(value: Any, scale: float, where: str):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise LayoutSyntaxError(f"{where} must be a list of 3 numbers")
    return tuple(_number(v, where) * scale for v in value)


def _parse_model(raw: Any, where: str):
    if raw is None or raw == 'thin':
        return FieldModel.THIN, 1, 1
    if raw == 'ribbon':
        return FieldModel.RIBBON, 1, 1
    if isinstance(raw, dict):
        _check_keys(raw, {'kind', 'n_w', 'n_h'}, where)
        kind = raw.get('kind')
        if kind == 'thin':
            return FieldModel.THIN, 1, 1
        if kind == 'ribbon':
            n_w, n_h = raw.get('n_w', 1), raw.get('n_h', 1)
            if not isinstance(n_w, int) or not isinstance(n_h, int):
                raise LayoutSyntaxError(f"{where}: n_w and n_h must be integers")
            return FieldModel.RIBBON, n_w, n_h
    raise LayoutSyntaxError(f"{where}: unknown field model {raw!r}")


def layout_from_dict(document: Mapping[str, Any]) -> Layout:
    """Build a validated Layout from an already loaded document"""
    _check_keys(document, LAYOUT_KEYS, "layout")
    _check_version(document)
    units = _read_units(document, DEFAULT_LAYOUT_UNITS)
    length, current, bfield = units['length'], units['current'], units['field']

    conductors = []
    for index, raw in enumerate(document.get('conductors') or []):
        where = f"conductors[{index}]"
        _check_keys(raw, CONDUCTOR_KEYS, where)
        if 'path' not in raw or 'current' not in raw:
            raise LayoutSyntaxError(f"{where} needs path and current")
        if not isinstance(raw['path'], list):
            raise LayoutSyntaxError(f"{where}.path must be a list of points")
        path = tuple(_vector(p, length, f"{where}.path") for p in raw['path'])
        section = None
        if raw.get('cross_section') is not None:
            cs = raw['cross_section']
            _check_keys(cs, {'width', 'height'}, f"{where}.cross_section")
            section = CrossSection(_number(cs.get('width'), 'width') * length,
                                   _number(cs.get('height'), 'height') * length)
        model, n_w, n_h = _parse_model(raw.get('model'), f"{where}.model")
        conductors.append(Conductor(
            name=str(raw.get('name', f"c{index}")),
            path=path,
            current=_number(raw['current'], f"{where}.current") * current,
            cross_section=section,
            model=model,
            n_w=n_w,
            n_h=n_h,
        ))

    wires = []
    for index, raw in enumerate(document.get('infinite_wires') or []):
        where = f"infinite_wires[{index}]"
        _check_keys(raw, WIRE_KEYS, where)
        wires.append(InfiniteWire(
            name=str(raw.get('name', f"w{index}")),
            anchor=_vector(raw.get('anchor'), length, f"{where}.anchor"),
            direction=_vector(raw.get('direction'), 1.0, f"{where}.direction"),
            current=_number(raw.get('current'), f"{where}.current") * current,
        ))

    raw_bias = document.get('bias') or {}
    _check_keys(raw_bias, set(BIAS_AXES), "bias")
    bias = tuple(_number(raw_bias.get(axis, 0.0), f"bias.{axis}") * bfield for axis in BIAS_AXES)

    channels = document.get('channels') or {}
    if not isinstance(channels, dict):
        raise LayoutSyntaxError("channels must be an object of name -> bindings")
    for name, bindings in channels.items():
        if not isinstance(bindings, list) or not all(isinstance(b, str) for b in bindings):
            raise LayoutSyntaxError(f"channels.{name} must be a list of binding strings")

    gravity = document.get('gravity', False)
    if not isinstance(gravity, bool):
        raise LayoutSyntaxError("gravity must be true or false")
    metadata = document.get('metadata') or {}
    if not isinstance(metadata, dict):
        raise LayoutSyntaxError("metadata must be an object")

    return Layout(
        conductors=tuple(conductors),
        infinite_wires=tuple(wires),
        bias=bias,
        channels=channels,
        include_gravity=gravity,
        metadata=metadata,
    )


def parse_layout(text: str) -> Layout:
    """
    Parse a layout document

    Args:
        text: Layout file content

    Returns:
        Validated Layout in SI units

    Raises:
        LayoutSyntaxError: malformed document or unknown keys
        UnitError: missing or unknown unit tag
        ValidationError: model invariant violated
    """
    return layout_from_dict(_load_document(text))


def layout_to_dict(layout: Layout, units: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    units = dict(units or DEFAULT_LAYOUT_UNITS)

    def length(v):
        return from_si(v, 'length', units['length'])

    conductors = []
    for c in layout.conductors:
        entry = {
            'name': c.name,
            'path': [[length(v) for v in p] for p in c.path],
            'current': from_si(c.current, 'current', units['current']),
        }
        if c.cross_section is not None:
            entry['cross_section'] = {'width': length(c.cross_section.width),
                                      'height': length(c.cross_section.height)}
        if c.model is FieldModel.RIBBON:
            entry['model'] = {'kind': 'ribbon', 'n_w': c.n_w, 'n_h': c.n_h}
        conductors.append(entry)

    return {
        'format_version': FORMAT_VERSION,
        'units': units,
        'conductors': conductors,
        'infinite_wires': [
            {
                'name': w.name,
                'anchor': [length(v) for v in w.anchor],
                'direction': list(w.direction),
                'current': from_si(w.current, 'current', units['current']),
            }
            for w in layout.infinite_wires
        ],
        'bias': {axis: from_si(b, 'field', units['field']) for axis, b in zip(BIAS_AXES, layout.bias)},
        'channels': {name: list(bindings) for name, bindings in layout.channels.items()},
        'gravity': layout.include_gravity,
        'metadata': dict(layout.metadata),
    }


def serialize_layout(layout: Layout, units: Optional[Mapping[str, str]] = None) -> str:
    return json.dumps(layout_to_dict(layout, units), indent=2)


def schedule_from_dict(document: Mapping[str, Any]) -> Schedule:
    _check_keys(document, SCHEDULE_KEYS, "schedule")
    _check_version(document)
    time_scale = _read_units(document, DEFAULT_SCHEDULE_UNITS)['time']
    if 'duration' not in document:
        raise LayoutSyntaxError("Schedule needs a duration")
    channels = document.get('channels') or {}
    if not isinstance(channels, dict):
        raise LayoutSyntaxError("channels must be an object of name -> segments")

    parsed = {}
    for name, segments in channels.items():
        if not isinstance(segments, list):
            raise LayoutSyntaxError(f"channels.{name} must be a list of segments")
        items = []
        for index, raw in enumerate(segments):
            where = f"channels.{name}[{index}]"
            _check_keys(raw, SEGMENT_KEYS, where)
            try:
                kind = SegmentKind(raw.get('kind'))
            except ValueError:
                raise LayoutSyntaxError(f"{where}: unknown segment kind {raw.get('kind')!r}") from None
            start = _number(raw.get('from'), f"{where}.from")
            end = _number(raw.get('to', start), f"{where}.to")
            items.append(ScheduleSegment(
                t0=_number(raw.get('t0'), f"{where}.t0") * time_scale,
                t1=_number(raw.get('t1'), f"{where}.t1") * time_scale,
                kind=kind,
                start=start,
                end=end,
            ))
        parsed[str(name)] = tuple(items)
    return Schedule(_number(document['duration'], 'duration') * time_scale, parsed)


def parse_schedule(text: str) -> Schedule:
    """Parse a schedule document into a validated Schedule (times in s)"""
    return schedule_from_dict(_load_document(text))


def schedule_to_dict(schedule: Schedule, time_unit: str = 'ms') -> Dict[str, Any]:
    def t(v):
        return from_si(v, 'time', time_unit)

    return {
        'format_version': FORMAT_VERSION,
        'units': {'time': time_unit},
        'duration': t(schedule.duration),
        'channels': {
            name: [
                {'t0': t(s.t0), 't1': t(s.t1), 'kind': s.kind.value, 'from': s.start, 'to': s.end}
                for s in segs
            ]
            for name, segs in schedule.channels.items()
        },
    }


def serialize_schedule(schedule: Schedule, time_unit: str = 'ms') -> str:
    return json.dumps(schedule_to_dict(schedule, time_unit), indent=2)


def _read_text(path: Union[str, Path]) -> str:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Input file not found: {path}")
    return path.read_text(encoding='utf-8')


def load_layout(path: Union[str, Path]) -> Layout:
    layout = parse_layout(_read_text(path))
    logger.debug("Loaded layout %s: %d conductors, %d infinite wires",
                 path, len(layout.conductors), len(layout.infinite_wires))
    return layout


def load_schedule(path: Union[str, Path]) -> Schedule:
    return parse_schedule(_read_text(path))


def save_layout(layout: Layout, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_layout(layout) + "\n", encoding='utf-8')
    return path


def save_schedule(schedule: Schedule, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_schedule(schedule) + "\n", encoding='utf-8')
    return path
