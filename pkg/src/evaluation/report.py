"""
Evaluation reports

An EvalReport is one model evaluated on one dataset with one seed. Reports
are written one JSON object per line and rendered as a table in the column
order PP, FITB@r, CP-AUC, match rates, personalization, diversity.
"""
from pathlib import Path
from typing import Dict, Iterable, List, Optional
import json
import logging
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from rich.console import Console
from rich.table import Table

from ..errors import DataError

logger = logging.getLogger(__name__)

# excluded when reports are compared for reproducibility
WALL_CLOCK_FIELDS = {"runtime_seconds"}


def _rate(value: Optional[float], name: str) -> Optional[float]:
    if value is not None and not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


class EvalReport(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_id: str
    family: str
    dataset_id: str
    seed: int
    perplexity: Optional[float] = Field(default=None, gt=0.0)
    cp_auc: Optional[float] = None
    fitb: Dict[int, float] = Field(default_factory=dict)
    match_mode: Optional[str] = None
    match_rates: Dict[str, float] = Field(default_factory=dict)
    personalization_rate: Optional[float] = None
    item_diversity: Optional[float] = None
    validity_rate: Optional[float] = None
    random_base_rate: Optional[float] = None
    skipped: Dict[str, int] = Field(default_factory=dict)
    runtime_seconds: float = Field(default=0.0, ge=0.0)

    @field_validator("cp_auc", "personalization_rate", "item_diversity", "validity_rate", "random_base_rate")
    @classmethod
    def _check_rate(cls, value, info):
        return _rate(value, info.field_name)

    @field_validator("fitb", "match_rates")
    @classmethod
    def _check_rates(cls, values, info):
        for key, value in values.items():
            _rate(value, f"{info.field_name}[{key}]")
        return values

    @model_validator(mode="after")
    def _fitb_monotone(self):
        cutoffs = sorted(self.fitb)
        for low, high in zip(cutoffs, cutoffs[1:]):
            if self.fitb[high] < self.fitb[low]:
                raise ValueError(f"FITB@{high} ({self.fitb[high]}) below FITB@{low} ({self.fitb[low]})")
        return self

    def to_line(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True)

    def deterministic_dump(self) -> Dict:
        """Every field except wall-clock measurements"""
        return self.model_dump(mode="json", exclude=WALL_CLOCK_FIELDS)


def write_reports(path: Path, reports: Iterable[EvalReport], append: bool = False) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "a" if append else "w", encoding="utf-8") as handle:
        for report in reports:
            handle.write(report.to_line() + "\n")
            count += 1
    logger.info(f"Wrote {count} evaluation reports to {path}")
    return count


def read_reports(path: Path) -> List[EvalReport]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Report file {path} does not exist")
    reports = []
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                reports.append(EvalReport.model_validate_json(line))
            except ValidationError as e:
                raise DataError(f"{path}:{number}: invalid report: {e.errors()[0]['msg']}") from e
    return reports


def _cell(value: Optional[float], digits: int = 3) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def report_table(reports: List[EvalReport], title: str = "Evaluation") -> Table:
    cutoffs = sorted({r for report in reports for r in report.fitb})
    schemas = list(dict.fromkeys(s for report in reports for s in report.match_rates))
    modes = {report.match_mode for report in reports if report.match_mode}
    mode = modes.pop().upper() if len(modes) == 1 else "match"

    table = Table(title=title)
    table.add_column("model")
    table.add_column("seed", justify="right")
    table.add_column("PP", justify="right")
    for r in cutoffs:
        table.add_column(f"FITB@{r}", justify="right")
    table.add_column("CP-AUC", justify="right")
    for schema in schemas:
        table.add_column(f"{schema} {mode}", justify="right")
    table.add_column("pers.", justify="right")
    table.add_column("div.", justify="right")
    table.add_column("valid", justify="right")
    for report in reports:
        table.add_row(
            report.model_id,
            str(report.seed),
            _cell(report.perplexity, 1),
            *(_cell(report.fitb.get(r)) for r in cutoffs),
            _cell(report.cp_auc),
            *(_cell(report.match_rates.get(s)) for s in schemas),
            _cell(report.personalization_rate),
            _cell(report.item_diversity),
            _cell(report.validity_rate),
        )
    return table


def print_reports(reports: List[EvalReport], console: Optional[Console] = None, title: str = "Evaluation") -> None:
    (console or Console()).print(report_table(reports, title))
