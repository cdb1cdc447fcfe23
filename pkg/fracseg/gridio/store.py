# fracseg/gridio/store.py
import csv
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import orjson

from fracseg.core.multiscale import LeaderStack
from fracseg.core.scoring import write_histogram_csv
from fracseg.exceptions import ShapeMismatchError
from fracseg.gridio import f2d, pgm
from fracseg.gridio.base import Field2D, LabelMask
from fracseg.gridio.exceptions import map_io_exception

logger = logging.getLogger(__name__)


class GridStore:
    """
    Artifact access layer: every file the services read or write goes through here.
    """

    def __init__(self, root: str | Path | None = None) -> None:
        self.root = Path(root) if root is not None else None

    def resolve(self, path: str | Path) -> Path:
        path = Path(path)
        if self.root is not None and not path.is_absolute():
            return self.root / path
        return path

    def ensure_dir(self, path: str | Path) -> Path:
        path = self.resolve(path)
        try:
            path.mkdir(parents=True, exist_ok=True)
        except Exception as e:
            raise map_io_exception(e, path) from e
        return path

    # -------------------------------------------------------- grids

    def read_field(self, path) -> Field2D:
        return f2d.read_field(self.resolve(path))

    def write_field(self, field, path) -> None:
        f2d.write_field(field, self.resolve(path))

    def read_leaders(self, path) -> LeaderStack:
        grids, j1, gamma = f2d.read_stack(self.resolve(path))
        if not grids:
            raise ShapeMismatchError(f"leader stack {path} holds no scales")
        shapes = {g.shape for g in grids}
        if len(shapes) != 1:
            raise ShapeMismatchError(f"leader stack {path} mixes grid shapes {sorted(shapes)}")
        return LeaderStack(j1=j1, j2=j1 + len(grids) - 1, gamma=gamma, log_leaders=np.stack(grids))

    def write_leaders(self, stack: LeaderStack, path) -> None:
        f2d.write_stack(list(stack.log_leaders), stack.j1, stack.gamma, self.resolve(path))

    def read_image(self, path) -> Field2D:
        """F2D fields as stored; anything with a .pgm suffix is imported as grayscale."""
        path = self.resolve(path)
        if path.suffix.lower() == ".pgm":
            return pgm.import_grayscale(path)
        return f2d.read_field(path)

    # -------------------------------------------------------- masks

    def read_mask(self, path, q: int | None = None) -> LabelMask:
        return pgm.read_mask(self.resolve(path), q)

    def write_mask(self, mask: LabelMask, path) -> None:
        pgm.write_mask(mask, self.resolve(path))

    def export_grayscale(self, field, path) -> None:
        pgm.export_grayscale(field, self.resolve(path))

    # -------------------------------------------------------- reports

    def write_json(self, payload: Any, path) -> None:
        path = self.resolve(path)
        try:
            path.write_bytes(orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
        except orjson.JSONEncodeError as e:
            raise map_io_exception(ValueError(str(e)), path) from e
        except Exception as e:
            raise map_io_exception(e, path) from e
        logger.debug(f"wrote {path}")

    def read_json(self, path) -> Any:
        path = self.resolve(path)
        try:
            return orjson.loads(path.read_bytes())
        except orjson.JSONDecodeError as e:
            raise map_io_exception(ValueError(str(e)), path) from e
        except Exception as e:
            raise map_io_exception(e, path) from e

    def write_csv(self, header: Sequence[str], rows: Iterable[Sequence[Any]], path) -> None:
        path = self.resolve(path)
        try:
            with path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                writer.writerows(rows)
        except Exception as e:
            raise map_io_exception(e, path) from e
        logger.debug(f"wrote {path}")

    def write_histogram(self, rows, path) -> None:
        write_histogram_csv(rows, self.resolve(path))
