from pathlib import Path
from typing import Iterable, List, Sequence, Union
import csv
import json
import logging
import numpy as np
from pydantic import BaseModel

logger = logging.getLogger(__name__)

RUN_PREFIX = "# run: "


def run_line(run: dict) -> str:
    return RUN_PREFIX + json.dumps(run, sort_keys=True)


def write_csv(path: Union[str, Path],
              header: Sequence[str],
              rows: Iterable[Sequence],
              run: dict) -> Path:
    """CSV with a leading `# run: {...}` line, then a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(run_line(run) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    logger.info(f"Wrote {path}")
    return path


def write_json(path: Union[str, Path], model: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def read_csv(path: Union[str, Path]) -> List[dict]:
    """Rows of an artifact CSV as dicts; the run line is skipped."""
    with open(path, newline="", encoding="utf-8") as f:
        lines = [ln for ln in f if not ln.startswith(RUN_PREFIX)]
    return list(csv.DictReader(lines))


def read_run(path: Union[str, Path]) -> dict:
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    if not first.startswith(RUN_PREFIX):
        raise ValueError(f"{path} has no run line")
    return json.loads(first[len(RUN_PREFIX):])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v
