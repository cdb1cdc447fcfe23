# fracseg/core/scoring.py
import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from fracseg.exceptions import ParameterError
from fracseg.gridio.base import LabelMask, as_field, check_same_shape
from fracseg.gridio.exceptions import map_io_exception

logger = logging.getLogger(__name__)


def _region_order(labels: np.ndarray, q: int, key_values) -> List[int]:
    """Non-empty labels sorted by key value (largest first), then by size (largest first)."""
    entries = []
    for c in range(q):
        region = labels == c
        size = int(region.sum())
        if size == 0:
            continue
        entries.append((-key_values(c, region), -size, c))
    entries.sort()
    return [c for _, _, c in entries]


def misclassification(
    pred: LabelMask,
    truth: LabelMask,
    h_est,
    truth_h: Optional[Sequence[float]] = None,
) -> float:
    """
    Fraction of pixels whose matched label differs from the truth.

    Predicted regions are sorted by the median of h_est over each region and
    paired in that order with the truth regions, sorted by their prescribed
    regularity when ``truth_h`` is given and by the median of h_est otherwise.
    Equal medians are ordered by region size. Unpaired predicted regions count
    as wrong.
    """
    h_est = as_field(h_est, name="h estimate")
    check_same_shape(pred.labels, truth.labels, h_est, names=("prediction", "truth", "estimate"))
    if pred.q != truth.q:
        raise ParameterError(f"prediction has Q={pred.q} but truth has Q={truth.q}")
    if truth_h is not None and len(truth_h) != truth.q:
        raise ParameterError(f"{len(truth_h)} regularity values given for Q={truth.q}")

    def median_of(_c, region):
        return float(np.median(h_est[region]))

    pred_order = _region_order(pred.labels, pred.q, median_of)
    if truth_h is not None:
        truth_order = _region_order(truth.labels, truth.q, lambda c, _region: float(truth_h[c]))
    else:
        truth_order = _region_order(truth.labels, truth.q, median_of)

    lookup = np.full(pred.q, -1, dtype=np.int64)
    for p, t in zip(pred_order, truth_order):
        lookup[p] = t
    matched = lookup[pred.labels]
    rate = float(np.mean(matched != truth.labels))
    logger.debug(f"misclassification: pairing {dict(zip(pred_order, truth_order))}, rate={rate:.4f}")
    return rate


def emit_histogram(h, bins: int = 128) -> List[Tuple[float, int]]:
    """(bin centre, count) rows over uniform bins on [min, max]."""
    h = as_field(h, name="h map")
    if bins < 1:
        raise ParameterError(f"bin count must be >= 1, got {bins}")
    counts, edges = np.histogram(h, bins=bins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return [(float(c), int(n)) for c, n in zip(centers, counts)]


def write_histogram_csv(rows: List[Tuple[float, int]], path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["center", "count"])
            for center, count in rows:
                writer.writerow([repr(center), count])
    except Exception as e:
        raise map_io_exception(e, path) from e
