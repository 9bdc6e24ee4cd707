"""
Cross-model comparison

Reports of one dataset are tabulated per model (mean over seeds), ranked per
metric, and checked against the directional claims the benchmark is meant to
reproduce. Each claim is decided per seed and passes on a majority of the
seeds where it can be evaluated.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence
import logging
import re
import pandas as pd
from rich.console import Console
from rich.table import Table

from ..errors import ComparisonError
from ..evaluation import EvalReport

logger = logging.getLogger(__name__)

# metric -> True when lower is better
METRIC_DIRECTIONS: Dict[str, bool] = {"perplexity": True}
VALIDITY_LIFT = 5.0

Lookup = Callable[[str, str], Optional[float]]
SEED_SUFFIX = r"-s\d+$"


@dataclass(frozen=True)
class Claim:
    key: str
    description: str
    check: Callable[[Lookup], Optional[bool]]


@dataclass
class ClaimOutcome:
    claim: Claim
    votes: List[bool] = field(default_factory=list)

    @property
    def evaluated(self) -> bool:
        return bool(self.votes)

    @property
    def passed(self) -> bool:
        return self.evaluated and sum(self.votes) * 2 > len(self.votes)


def _all_known(*values) -> bool:
    return all(v is not None for v in values)


def _greater(get: Lookup, metric: str, winners: Sequence[str], losers: Sequence[str]) -> Optional[bool]:
    high = [get(f, metric) for f in winners]
    low = [get(f, metric) for f in losers]
    if not _all_known(*high, *low):
        return None
    return min(high) > max(low)


def _first_known(get: Lookup, keys: Sequence[str], metric: str) -> Optional[float]:
    for key in keys:
        value = get(key, metric)
        if value is not None:
            return value
    return None


def _claim_context(get: Lookup) -> Optional[bool]:
    # the stylist-trained references see the same questionnaire data as the contextual models
    pp = [get("ctx_gpt", "perplexity"), _first_known(get, ("gpt_stylist", "gpt"), "perplexity")]
    fitb = [get("ctx_bert", "fitb@1"), _first_known(get, ("bert_stylist", "bert"), "fitb@1")]
    if not _all_known(*pp, *fitb):
        return None
    return pp[0] < pp[1] and fitb[0] > fitb[1]


def _claim_validity(get: Lookup) -> Optional[bool]:
    rate, base = get("gpt", "validity_rate"), get("gpt", "random_base_rate")
    if not _all_known(rate, base):
        return None
    return rate >= VALIDITY_LIFT * base


CLAIMS: List[Claim] = [
    Claim("a", "BERT beats GPT on FITB@1", lambda get: _greater(get, "fitb@1", ["bert"], ["gpt"])),
    Claim("b", "GPT has lower perplexity than BERT",
          lambda get: _greater(get, "perplexity", ["bert"], ["gpt"])),
    Claim("c", "GPT and BERT beat LSTM and Siamese on CP-AUC",
          lambda get: _greater(get, "cp_auc", ["gpt", "bert"], ["lstm", "siamese"])),
    Claim("d", "Context lowers GPT perplexity and raises BERT FITB@1", _claim_context),
    Claim("e", "Transformer beats Siamese and seq2seq LSTM on brand-category CTR",
          lambda get: _greater(get, "brand-category", ["transformer"], ["siamese", "s2s_lstm"])),
    Claim("f", f"Generated GPT outfits are valid at least {VALIDITY_LIFT:g}x as often as random sets",
          _claim_validity),
]


def report_frame(reports: Sequence[EvalReport]) -> pd.DataFrame:
    """One row per report; FITB and match rates flattened into columns"""
    rows = []
    for report in reports:
        row = {"model_id": report.model_id, "key": re.sub(SEED_SUFFIX, "", report.model_id),
               "family": report.family, "seed": report.seed,
               "perplexity": report.perplexity, "cp_auc": report.cp_auc,
               "personalization_rate": report.personalization_rate, "item_diversity": report.item_diversity,
               "validity_rate": report.validity_rate, "random_base_rate": report.random_base_rate}
        row.update({f"fitb@{r}": v for r, v in report.fitb.items()})
        row.update(report.match_rates)
        rows.append(row)
    return pd.DataFrame(rows)


@dataclass
class Comparison:
    dataset_id: str
    table: pd.DataFrame
    rankings: Dict[str, List[str]]
    outcomes: List[ClaimOutcome] = field(default_factory=list)

    @property
    def checklist_skipped(self) -> bool:
        return not self.outcomes


def compare(reports: Sequence[EvalReport], claims: Sequence[Claim] = CLAIMS) -> Comparison:
    if not reports:
        raise ComparisonError("Nothing to compare")
    dataset_ids = {report.dataset_id for report in reports}
    if len(dataset_ids) > 1:
        raise ComparisonError(f"Reports come from {len(dataset_ids)} different datasets: "
                              f"{sorted(d[:12] for d in dataset_ids)}")
    frame = report_frame(reports)
    metrics = [c for c in frame.columns if c not in ("model_id", "key", "family", "seed")]
    frame[metrics] = frame[metrics].astype(float)
    table = frame.groupby("model_id", sort=True)[metrics].mean()

    rankings: Dict[str, List[str]] = {}
    for metric in metrics:
        column = table[metric].dropna()
        if column.empty:
            continue
        ascending = METRIC_DIRECTIONS.get(metric, False)
        rankings[metric] = list(column.sort_values(ascending=ascending, kind="mergesort").index)

    outcomes: List[ClaimOutcome] = []
    if len(reports) > 1:
        outcomes = [ClaimOutcome(claim) for claim in claims]
        for seed, seed_frame in frame.groupby("seed", sort=True):
            by_key = seed_frame.groupby("key")[metrics].mean()

            def get(key: str, metric: str) -> Optional[float]:
                if key not in by_key.index or metric not in by_key.columns:
                    return None
                value = by_key.at[key, metric]
                return None if pd.isna(value) else float(value)

            for outcome in outcomes:
                vote = outcome.claim.check(get)
                if vote is not None:
                    outcome.votes.append(bool(vote))
        for outcome in outcomes:
            if not outcome.evaluated:
                logger.warning(f"Claim ({outcome.claim.key}) not evaluated: required models missing")
    return Comparison(next(iter(dataset_ids)), table, rankings, outcomes)


def comparison_table(comparison: Comparison) -> Table:
    table = Table(title=f"Comparison on dataset {comparison.dataset_id[:12]}")
    table.add_column("model")
    columns = [c for c in comparison.table.columns if comparison.table[c].notna().any()]
    for column in columns:
        table.add_column(column, justify="right")
    for model_id, row in comparison.table.iterrows():
        table.add_row(str(model_id), *("-" if pd.isna(row[c]) else f"{row[c]:.3f}" for c in columns))
    return table


def checklist_table(comparison: Comparison) -> Table:
    table = Table(title="Directional claims")
    table.add_column("claim")
    table.add_column("description")
    table.add_column("seeds", justify="right")
    table.add_column("result")
    for outcome in comparison.outcomes:
        if not outcome.evaluated:
            result = "[yellow]SKIP[/yellow]"
        else:
            result = "[green]PASS[/green]" if outcome.passed else "[red]FAIL[/red]"
        table.add_row(outcome.claim.key, outcome.claim.description,
                      f"{sum(outcome.votes)}/{len(outcome.votes)}", result)
    return table


def print_comparison(comparison: Comparison, console: Optional[Console] = None) -> None:
    console = console or Console()
    console.print(comparison_table(comparison))
    if comparison.checklist_skipped:
        console.print("Checklist skipped: a single report has nothing to compare against")
    else:
        console.print(checklist_table(comparison))
