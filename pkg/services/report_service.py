"""
Report and table writers shared by the CLI

JSON reports are written with sorted keys and tables with fixed float
formatting so that reruns with the same inputs are byte-identical.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '{:.6f}'


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into JSON-native values"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def write_json(data: Dict[str, Any], path: Union[str, Path]) -> Path:
    path = Path(path)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(_plain(data), f, sort_keys=True, indent=2)
        f.write('\n')
    logger.debug(f"Wrote report {path}")
    return path


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    return str(value)


def write_tsv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: Union[str, Path]) -> Path:
    """Tab-separated table with a header line"""
    path = Path(path)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, delimiter='\t', lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug(f"Wrote table {path}")
    return path


def side_path(out_path: Union[str, Path], suffix: str) -> Path:
    """`<out>.<suffix>` next to the main output"""
    out_path = Path(out_path)
    return out_path.with_name(f"{out_path.name}.{suffix}")


def histogram_rows(edges: Sequence[float], counts: Sequence[int]):
    """(bin_start, bin_end, count) rows for plotting"""
    return [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]
