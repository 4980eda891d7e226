"""
Data files and provenance sidecars

Data files (CSV/JSON) carry no timestamps, so identical inputs give
byte-identical outputs. Provenance lives in <stem>.meta.json.
"""

import hashlib
import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src import __version__
from src.core.layout_io import serialize_layout
from src.core.model import Layout

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def clean_json(value: Any) -> Any:
    """Recursively convert numpy types to Python and NaN/inf to None"""
    if isinstance(value, Mapping):
        return {str(k): clean_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean_json(v) for v in value]
    if isinstance(value, np.ndarray):
        return [clean_json(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(data: Any, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(clean_json(data), indent=2, allow_nan=False) + "\n", encoding='utf-8')
    return path


def write_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def layout_hash(layout: Layout) -> str:
    """SHA-256 of the canonical layout document"""
    return hashlib.sha256(serialize_layout(layout).encode('utf-8')).hexdigest()


def write_meta(stem: PathLike, command: Sequence[str], layout: Optional[Layout] = None,
               seed: Optional[int] = None, extra: Optional[Dict[str, Any]] = None) -> Path:
    """
    Write <stem>.meta.json next to the data files of a run

    Args:
        stem: Output path without suffix
        command: argv of the run
        layout: Input layout, hashed for provenance
        seed: Random seed, if the run is stochastic
    """
    stem = Path(stem)
    meta = {
        'tool': 'atomchip',
        'version': __version__,
        'command': list(command),
        'layout_sha256': layout_hash(layout) if layout is not None else None,
        'seed': seed,
        'timestamp': datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        meta.update(extra)
    path = stem.parent / (stem.name + '.meta.json')
    logger.debug("Writing provenance to %s", path)
    return write_json(meta, path)
