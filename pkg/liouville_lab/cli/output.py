# cli/output.py
import csv
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence, TextIO, Tuple

from liouville_lab import __version__
from liouville_lab.cli.experiments import ExperimentConfig, ExperimentResult

SCHEMA_VERSION = 1


def _cell(value: Any) -> Any:
    # repr keeps full float precision
    if isinstance(value, float):
        return repr(value)
    return value


def _atomic_write(path: Path, write) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as handle:
            write(handle)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def meta_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".meta.json")


def build_metadata(config: ExperimentConfig, result: ExperimentResult, wall_time: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": config.kind.value,
        "config": config.model_dump(mode="json"),
        "code_version": __version__,
        "wall_time_s": wall_time,
        "verdict": result.verdict.value,
        "summary": result.summary,
    }


def write_rows(handle: TextIO, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])


def write_csv(handle: TextIO, result: ExperimentResult) -> None:
    write_rows(handle, result.header, result.rows)


def write_table(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """A bare CSV table, replaced atomically."""
    csv_path = Path(path)
    _atomic_write(csv_path, lambda handle: write_rows(handle, header, rows))
    return csv_path


def write_result(
    path: str, config: ExperimentConfig, result: ExperimentResult, wall_time: float
) -> Tuple[Path, Path]:
    """CSV of the result rows plus a ``.meta.json`` sidecar, each replaced atomically."""
    csv_path = write_table(path, result.header, result.rows)
    sidecar = write_json(str(meta_path(csv_path)), build_metadata(config, result, wall_time))
    return csv_path, sidecar


def write_json(path: str, record: dict) -> Path:
    json_path = Path(path)

    def write(handle) -> None:
        json.dump(record, handle, indent=2, default=str)
        handle.write("\n")

    _atomic_write(json_path, write)
    return json_path
