from __future__ import annotations

import csv
import json
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..core.config import settings
from ..core.errors import ConfigError
from ..core.utils import format_float, json_sanitize
from .bench import StudyReport
from .encoder import FiringRecord
from .kernel import KernelSpec, kernel_samples


def _cell(v: Any, digits: int) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v), digits)
    return str(v)


class ArtifactStore:
    """
    File-backed writer/reader for run artifacts under one output directory:
      - firing records: CSV (n, t_n) + JSON metadata
      - kernel dumps: CSV (t, g)
      - study reports: CSV (one row per trial) + JSON summary, named {scenario}_{seed}
    """

    def __init__(self, out_dir: Optional[str] = None, digits: Optional[int] = None) -> None:
        self.out_dir = out_dir or settings.output_dir
        self.digits = int(digits or settings.csv_digits)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    # ----------------------------------------------------
    # LOW LEVEL
    # ----------------------------------------------------

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        target = self.path(name)
        os.makedirs(self.out_dir, exist_ok=True)
        with open(target, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(list(header))
            for row in rows:
                writer.writerow([_cell(v, self.digits) for v in row])
        return target

    def write_json(self, name: str, data: Dict[str, Any]) -> str:
        target = self.path(name)
        os.makedirs(self.out_dir, exist_ok=True)
        with open(target, "w", encoding="utf-8") as f:
            json.dump(json_sanitize(data), f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")
        return target

    def read_csv(self, name: str) -> List[Dict[str, str]]:
        target = name if os.path.isabs(name) else self.path(name)
        if not os.path.exists(target):
            raise ConfigError(f"file not found: {target}")
        with open(target, newline="", encoding="utf-8") as f:
            return list(csv.DictReader(f))

    def read_json(self, name: str) -> Dict[str, Any]:
        target = name if os.path.isabs(name) else self.path(name)
        if not os.path.exists(target):
            raise ConfigError(f"file not found: {target}")
        try:
            with open(target, "r", encoding="utf-8") as f:
                return json.load(f) or {}
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed JSON in {target}: {e}")

    # ----------------------------------------------------
    # DOMAIN ARTIFACTS
    # ----------------------------------------------------

    def save_firings(self, stem: str, record: FiringRecord, extra: Optional[Dict[str, Any]] = None) -> List[str]:
        csv_path = self.write_csv(
            f"{stem}.csv", ("n", "t_n"), [(i, t) for i, t in enumerate(record.instants)]
        )
        meta = record.to_dict()
        meta.update(extra or {})
        return [csv_path, self.write_json(f"{stem}.json", meta)]

    def load_firings(self, stem: str) -> FiringRecord:
        """
        Rebuild a record from its JSON metadata; when a CSV sits next to it, the
        CSV instants win (hand-edited/truncated files).
        """
        meta = self.read_json(stem if stem.endswith(".json") else f"{stem}.json")
        base = stem[:-5] if stem.endswith(".json") else stem
        csv_name = f"{base}.csv"
        csv_target = csv_name if os.path.isabs(csv_name) else self.path(csv_name)
        if os.path.exists(csv_target):
            rows = self.read_csv(csv_name)
            try:
                meta = dict(meta, instants=[float(r["t_n"]) for r in rows])
            except (KeyError, ValueError) as e:
                raise ConfigError(f"firings CSV {csv_target} needs a numeric t_n column: {e}")
        # metadata may carry run extras next to the record fields
        return FiringRecord.from_dict({k: meta[k] for k in ("params", "t_start", "T_obs", "instants") if k in meta})

    def save_kernel(self, stem: str, spec: KernelSpec, points: int = 1024) -> List[str]:
        t, g = kernel_samples(spec, points)
        return [
            self.write_csv(f"{stem}.csv", ("t", "g"), zip(t, g)),
            self.write_json(f"{stem}.json", dict(spec.to_dict(), points=points)),
        ]

    def save_report(self, report: StudyReport) -> List[str]:
        return [
            self.write_csv(f"{report.name}.csv", report.columns, report.rows()),
            self.write_json(f"{report.name}.json", report.to_dict()),
        ]
