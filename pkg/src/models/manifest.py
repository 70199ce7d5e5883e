"""
Run manifest data model.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Union

from src.utils.time_utils import utc_isoformat

MANIFEST_FILE = "run_manifest.json"


class StageStatus(Enum):
    """Pipeline stage status enumeration"""
    PENDING = "PENDING"
    RUNNING = "RUNNING"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"


def run_id_for(config: Dict[str, Any]) -> str:
    """Git-style short id: first 12 hex chars of SHA-1 over the resolved config"""
    payload = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:12]


@dataclass
class RunManifest:
    """Record of one output directory: config, seeds, stages and artifacts"""
    config: Dict[str, Any]
    run_id: str = ""
    created_at: str = field(default_factory=utc_isoformat)
    updated_at: str = ""
    seeds: Dict[str, int] = field(default_factory=dict)
    stages: Dict[str, str] = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.run_id:
            self.run_id = run_id_for(self.config)
        if not self.updated_at:
            self.updated_at = self.created_at

    def set_stage(self, stage: str, status: StageStatus) -> None:
        self.stages[stage] = status.value
        self.updated_at = utc_isoformat()

    def add_artifact(self, relative_path: str) -> None:
        if relative_path not in self.artifacts:
            self.artifacts.append(relative_path)
            self.artifacts.sort()

    def save(self, directory: Union[str, Path]) -> Path:
        path = Path(directory) / MANIFEST_FILE
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "RunManifest":
        data = json.loads((Path(directory) / MANIFEST_FILE).read_text(encoding="utf-8"))
        return cls(**data)
