"""
Run-record persistence for schwinger_adapt.

Trajectories are stored as JSON files under an output directory, indexed by
a metadata.json file.  File names carry a 16-character hash of the resolved
run configuration so an identical configuration maps to the same record.
Exact ground energies are cached separately in exact/e0_cache.json.
"""

import hashlib
import json
import logging
import os
import tempfile
import threading
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .adapt import AdaptConfig, Trajectory

logger = logging.getLogger(__name__)


def config_hash(config: AdaptConfig) -> str:
    """16-character hash of the resolved configuration"""
    payload = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, 'w') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


class RunRecordInfo:
    """Index entry for one stored trajectory"""

    def __init__(self,
                 run_id: str,
                 pool_id: str,
                 preset: str,
                 L: int,
                 created_at: datetime,
                 termination: str,
                 final_error: float,
                 iterations: int,
                 file_name: str):
        self.run_id = run_id
        self.pool_id = pool_id
        self.preset = preset
        self.L = L
        self.created_at = created_at
        self.termination = termination
        self.final_error = final_error
        self.iterations = iterations
        self.file_name = file_name

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'run_id': self.run_id,
            'pool_id': self.pool_id,
            'preset': self.preset,
            'L': self.L,
            'created_at': self.created_at.isoformat(),
            'termination': self.termination,
            'final_error': self.final_error,
            'iterations': self.iterations,
            'file_name': self.file_name,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunRecordInfo':
        """Create from dictionary"""
        return cls(
            run_id=data['run_id'],
            pool_id=data['pool_id'],
            preset=data['preset'],
            L=int(data['L']),
            created_at=datetime.fromisoformat(data['created_at']),
            termination=data['termination'],
            final_error=float(data['final_error']),
            iterations=int(data['iterations']),
            file_name=data['file_name'],
        )


class RecordManager:
    """Manager for trajectory files and their index"""

    def __init__(self, output_dir: Union[str, Path] = 'runs'):
        """
        Initialize record manager

        Args:
            output_dir: Directory holding trajectory files
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.metadata_file = self.output_dir / 'metadata.json'
        self._lock = threading.Lock()
        self.metadata = self._load_metadata()

    def _load_metadata(self) -> Dict[str, Any]:
        """Load the run index from file"""
        if self.metadata_file.exists():
            try:
                return json.loads(self.metadata_file.read_text())
            except (OSError, json.JSONDecodeError) as e:
                logger.error(f"Failed to load run index: {e}")
        return {'runs': {}}

    def _save_metadata(self) -> None:
        _atomic_write(self.metadata_file, json.dumps(self.metadata, indent=2, sort_keys=True))

    def run_id(self, config: AdaptConfig) -> str:
        return f"{config.pool_id}_{config.preset}_L{config.L}_{config_hash(config)}"

    def path_for(self, config: AdaptConfig) -> Path:
        return self.output_dir / f"{self.run_id(config)}.json"

    def has_run(self, config: AdaptConfig) -> bool:
        return self.path_for(config).exists()

    def save_trajectory(self, trajectory: Trajectory, index: bool = True) -> Path:
        """
        Write a trajectory and, unless index is False, add it to the index

        Returns:
            Path of the trajectory file
        """
        path = self.path_for(trajectory.config)
        _atomic_write(path, trajectory.to_json())
        if index:
            self.index_trajectory(trajectory)
        logger.info(f"Saved run {self.run_id(trajectory.config)} to {path}")
        return path

    def index_trajectory(self, trajectory: Trajectory) -> RunRecordInfo:
        config = trajectory.config
        run_id = self.run_id(config)
        path = self.path_for(config)
        info = RunRecordInfo(
            run_id=run_id,
            pool_id=config.pool_id,
            preset=config.preset,
            L=config.L,
            created_at=datetime.now(),
            termination=trajectory.termination,
            final_error=trajectory.records[-1].energy_density_error,
            iterations=len(trajectory.records) - 1,
            file_name=path.name,
        )
        with self._lock:
            self.metadata['runs'][run_id] = info.to_dict()
            self._save_metadata()
        return info

    def load_trajectory(self, run_id: str) -> Trajectory:
        """
        Raises:
            FileNotFoundError: If the run is not stored
        """
        path = self.output_dir / f"{run_id}.json"
        if not path.exists():
            raise FileNotFoundError(f"Run {run_id} not found in {self.output_dir}")
        return Trajectory.load(path)

    def list_runs(self, pool_id: Optional[str] = None) -> List[RunRecordInfo]:
        """Indexed runs, newest first"""
        runs = [RunRecordInfo.from_dict(data) for data in self.metadata['runs'].values()
                if pool_id is None or data['pool_id'] == pool_id]
        runs.sort(key=lambda r: r.created_at, reverse=True)
        return runs

    def trajectory_files(self) -> List[Path]:
        return sorted(p for p in self.output_dir.glob('*.json') if p.name != 'metadata.json')

    def delete_run(self, run_id: str) -> bool:
        """
        Delete a stored run

        Returns:
            True if a file was removed
        """
        path = self.output_dir / f"{run_id}.json"
        deleted = False
        if path.exists():
            path.unlink()
            deleted = True
            logger.info(f"Deleted run file: {path}")
        with self._lock:
            if self.metadata['runs'].pop(run_id, None) is None:
                logger.warning(f"Run {run_id} not found in index")
            self._save_metadata()
        return deleted


class E0Cache:
    """
    Exact ground energies keyed by (preset, lattice spacing, L, method),
    stored with the solver residual.  Writes replace the file atomically.
    """

    def __init__(self, output_dir: Union[str, Path]):
        self.path = Path(output_dir) / 'exact' / 'e0_cache.json'
        self._lock = threading.Lock()

    @staticmethod
    def key(preset: str, a: float, L: int, method: str) -> str:
        return f"{preset}|{a!r}|{L}|{method}"

    def _read(self) -> Dict[str, Any]:
        if not self.path.exists():
            return {}
        try:
            return json.loads(self.path.read_text())
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Ignoring unreadable E0 cache {self.path}: {e}")
            return {}

    def get(self, preset: str, a: float, L: int, method: str) -> Optional[Dict[str, Any]]:
        return self._read().get(self.key(preset, a, L, method))

    def put(self, preset: str, a: float, L: int, method: str, energy: float, residual: float) -> None:
        with self._lock:
            entries = self._read()
            entries[self.key(preset, a, L, method)] = {'energy': energy, 'residual': residual}
            _atomic_write(self.path, json.dumps(entries, indent=2, sort_keys=True))
