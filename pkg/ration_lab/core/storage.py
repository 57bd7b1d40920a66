"""
Storage for reports, demand banks and instance files
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import aiofiles
import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from ration_lab.core.config import settings
from ration_lab.core.demand import (
    DemandModel,
    FiniteSupportModel,
    IndependentModel,
    InstanceSpec,
    SampleBankModel,
)
from ration_lab.core.errors import ConfigError
from ration_lab.core.models import (
    BankProvenance,
    BankRecord,
    FairnessReport,
    InstanceFile,
    MarginalAtom,
    ModelSpec,
    OutputFormat,
    SupportPoint,
)

logger = logging.getLogger(__name__)


def records_frame(rows: Sequence[BaseModel]) -> pd.DataFrame:
    """One row per model, list fields expanded into numbered columns."""
    flat: List[Dict[str, Any]] = []
    for row in rows:
        data = row.model_dump(mode="json")
        out: Dict[str, Any] = {}
        for key, value in data.items():
            if isinstance(value, list):
                for i, item in enumerate(value):
                    out[f"{key}_{i}"] = item
            else:
                out[key] = value
        flat.append(out)
    return pd.DataFrame(flat)


def render(rows: Sequence[BaseModel], fmt: OutputFormat) -> str:
    """JSON array or CSV text carrying the same values."""
    if fmt == OutputFormat.CSV:
        return records_frame(rows).to_csv(index=False, float_format="%.17g")
    return json.dumps([row.model_dump(mode="json") for row in rows], indent=2)


class ReportStore:
    """Manages report, bank and instance files under a results directory"""

    def __init__(self, results_dir: Optional[Union[str, Path]] = None):
        self.results_dir = Path(results_dir or settings.RESULTS_DIR)

        # Create directories if they don't exist
        self.results_dir.mkdir(parents=True, exist_ok=True)

    def _resolve(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        return path if path.is_absolute() or path.parent != Path(".") else self.results_dir / path

    async def save_report(
        self,
        rows: Sequence[BaseModel],
        name: Union[str, Path],
        fmt: OutputFormat = OutputFormat.JSON,
    ) -> str:
        """
        Save report rows as JSON or CSV.
        Returns the file path.
        """
        target = self._resolve(name)
        target.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(target, "w") as f:
            await f.write(render(rows, fmt))
        logger.info(f"Wrote {len(rows)} rows to {target}")
        return str(target)

    async def load_reports(self, name: Union[str, Path]) -> List[FairnessReport]:
        """Load FairnessReport rows written by save_report in JSON format"""
        target = self._resolve(name)
        async with aiofiles.open(target, "r") as f:
            content = await f.read()
        return [FairnessReport.model_validate(item) for item in json.loads(content)]

    async def save_bank(
        self,
        demands: np.ndarray,
        path: Union[str, Path],
        provenance: Optional[BankProvenance] = None,
    ) -> str:
        """Write one JSON object per path plus a provenance sidecar."""
        target = self._resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(target, "w") as f:
            for i, row in enumerate(np.asarray(demands, dtype=float)):
                record = BankRecord(path_id=i, demands=[float(v) for v in row])
                await f.write(record.model_dump_json() + "\n")
        if provenance is not None:
            async with aiofiles.open(self._provenance_path(target), "w") as f:
                await f.write(provenance.model_dump_json(indent=2))
        return str(target)

    async def load_bank(self, path: Union[str, Path]) -> Tuple[np.ndarray, Optional[BankProvenance]]:
        """Rows ordered by path_id and the provenance sidecar when present."""
        target = Path(path)
        if not target.exists():
            target = self._resolve(path)
        if not target.exists():
            raise ConfigError(f"bank file {path} does not exist")
        records: List[BankRecord] = []
        async with aiofiles.open(target, "r") as f:
            async for line in f:
                if line.strip():
                    try:
                        records.append(BankRecord.model_validate_json(line))
                    except ValidationError as e:
                        raise ConfigError(f"malformed bank line in {target}: {e}") from e
        if not records:
            raise ConfigError(f"bank file {target} is empty")
        records.sort(key=lambda r: r.path_id)
        provenance = None
        sidecar = self._provenance_path(target)
        if sidecar.exists():
            async with aiofiles.open(sidecar, "r") as f:
                provenance = BankProvenance.model_validate_json(await f.read())
        return np.array([r.demands for r in records], dtype=float), provenance

    @staticmethod
    def _provenance_path(target: Path) -> Path:
        return target.with_name(target.name + ".meta.json")

    async def load_instance(self, path: Union[str, Path]) -> InstanceSpec:
        """Parse an instance file; sample-bank paths are relative to the instance file."""
        target = Path(path)
        if not target.exists():
            raise ConfigError(f"instance file {path} does not exist")
        async with aiofiles.open(target, "r") as f:
            content = await f.read()
        try:
            spec = InstanceFile.model_validate_json(content)
        except ValidationError as e:
            raise ConfigError(f"invalid instance file {path}: {e}") from e

        model_spec = spec.model
        if model_spec.sample_bank is not None:
            bank_path = Path(model_spec.sample_bank.path)
            if not bank_path.is_absolute():
                bank_path = target.parent / bank_path
            demands, _ = await self.load_bank(bank_path)
            model: DemandModel = SampleBankModel(demands, model_spec.sample_bank.k)
        else:
            model = model_from_spec(model_spec)
        return InstanceSpec(n_agents=spec.agents, supply=spec.supply, model=model)

    async def save_instance(self, instance_file: InstanceFile, path: Union[str, Path]) -> str:
        target = self._resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(target, "w") as f:
            await f.write(instance_file.model_dump_json(indent=2, exclude_none=True))
        return str(target)

    def list_reports(self) -> List[str]:
        """List all report files"""
        if not self.results_dir.exists():
            return []

        return sorted(
            p.name for p in self.results_dir.iterdir()
            if p.is_file() and p.suffix in (".json", ".csv")
        )

    def delete_report(self, name: str) -> bool:
        target = self.results_dir / name
        if not target.exists():
            return False
        target.unlink()
        return True

    def get_storage_stats(self) -> Dict[str, Any]:
        """Get storage statistics"""
        total_size = sum(
            f.stat().st_size
            for f in self.results_dir.rglob("*")
            if f.is_file()
        )

        return {
            "total_reports": len(self.list_reports()),
            "results_size_bytes": total_size,
            "total_size_mb": total_size / (1024 * 1024),
        }


def model_from_spec(spec: ModelSpec) -> DemandModel:
    """Demand model for the in-memory kinds of an instance file."""
    if spec.finite_support is not None:
        return FiniteSupportModel(
            [p.prob for p in spec.finite_support],
            [p.demands for p in spec.finite_support],
        )
    if spec.independent is not None:
        return IndependentModel(
            [([a.value for a in atoms], [a.prob for a in atoms]) for atoms in spec.independent]
        )
    raise ConfigError("sample-bank models are loaded through ReportStore.load_instance")


def instance_file_from_model(model: DemandModel, supply: float = 1.0) -> InstanceFile:
    """Serialisable form of a finite-support or independent model."""
    if isinstance(model, FiniteSupportModel):
        spec = ModelSpec(
            finite_support=[
                SupportPoint(prob=float(p), demands=[float(v) for v in row])
                for p, row in zip(model.probs, model.demands)
            ]
        )
    elif isinstance(model, IndependentModel):
        spec = ModelSpec(
            independent=[
                [MarginalAtom(value=float(v), prob=float(p)) for v, p in zip(values, probs)]
                for values, probs in model.marginals
            ]
        )
    else:
        raise ConfigError(f"{model.kind} models are stored as bank files")
    return InstanceFile(agents=model.n_agents, supply=supply, model=spec)
