import csv
import json
from pathlib import Path
from typing import Any

import structlog
from pydantic import BaseModel

_log = structlog.get_logger(__name__)

CONFIG_FILE = "config.json"
TRAIN_REPORT_FILE = "train_report.json"
CERTIFICATE_FILE = "certificate.json"
TRAJECTORIES_FILE = "trajectories.csv"
HISTORY_FILE = "potential_history.csv"
CHECKPOINT_FILE = "checkpoint.json"
SUMMARY_FILE = "summary.json"
TRAJECTORY_FIGURE = "trajectories.svg"
HISTORY_FIGURE = "potential_history.svg"


def write_json(path: Path, payload: BaseModel | dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(by_alias=True, indent=2)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True)
    path.write_text(text + "\n")
    _log.info("artifact_written", path=str(path))
    return path


def write_potential_history(path: Path, values: list[float], grad_norms: list[float]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["iteration", "potential", "grad_norm"])
        for k, (value, norm) in enumerate(zip(values, grad_norms), start=1):
            writer.writerow([k, repr(float(value)), repr(float(norm))])
    _log.info("artifact_written", path=str(path))
    return path


def read_potential_history(path: Path) -> tuple[list[float], list[float]]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return [float(r["potential"]) for r in rows], [float(r["grad_norm"]) for r in rows]
