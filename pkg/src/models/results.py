from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from .. import __version__


class Table(BaseModel):
    """A CSV table produced by an experiment."""

    name: str
    columns: List[str]
    rows: List[List[Any]] = Field(default_factory=list)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(
                f"table {self.name} expects {len(self.columns)} values, got {len(values)}"
            )
        self.rows.append(list(values))

    @property
    def filename(self) -> str:
        return f"{self.name}.csv"


class ExperimentResult(BaseModel):
    """Tables plus the records that go into the manifest."""

    tables: List[Table] = Field(default_factory=list)
    hypotheses: List[Dict[str, Any]] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)


class FileRecord(BaseModel):
    name: str
    sha256: str
    rows: Optional[int] = None


class RunManifest(BaseModel):
    """Per-run record written atomically next to the tables."""

    version: str = __version__
    mode: str
    status: str = "running"
    exit_code: int = 0
    config: Dict[str, Any] = Field(default_factory=dict)
    started_at: str
    finished_at: Optional[str] = None
    files: List[FileRecord] = Field(default_factory=list)
    hypotheses: List[Dict[str, Any]] = Field(default_factory=list)
    summary: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[Dict[str, Any]] = None

    def file(self, name: str) -> FileRecord:
        for record in self.files:
            if record.name == name:
                return record
        raise KeyError(name)


