"""
Full benchmark: every default experiment over several seeds, then compare
"""
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

from ..catalog import load_dataset
from ..errors import ConfigurationError
from ..evaluation import EvalReport, write_reports
from ..utils.performance import monitor_operation
from .compare import Comparison, compare
from .config import load_experiment_config
from .experiment import run_experiment

logger = logging.getLogger(__name__)

BENCHMARK_REPORTS = "benchmark.jsonl"
DEFAULT_SEEDS = (0, 1, 2)


def experiment_files(experiments_dir: Path) -> List[Path]:
    """Runnable configs; files starting with an underscore are include-only"""
    files = sorted(p for p in Path(experiments_dir).glob("*.yaml") if not p.name.startswith("_"))
    if not files:
        raise ConfigurationError(f"No experiment configs under {experiments_dir}")
    return files


def run_benchmark(experiments_dir: Path, seeds: Sequence[int] = DEFAULT_SEEDS,
                  overrides: Optional[Dict[str, Any]] = None) -> Tuple[List[EvalReport], Comparison]:
    """Run each config once per seed (init and eval seeds set to the seed) and compare"""
    overrides = dict(overrides or {})
    reports: List[EvalReport] = []
    dataset = None
    output_dir = None
    with monitor_operation("benchmark", {"seeds": list(seeds)}):
        for path in experiment_files(experiments_dir):
            for seed in seeds:
                config = load_experiment_config(path, {**overrides, "init_seed": seed, "eval_seed": seed})
                config = config.model_copy(update={"name": f"{config.name}-s{seed}"})
                if dataset is None:
                    dataset = load_dataset(config.data_dir)
                output_dir = config.output_dir
                _, report = run_experiment(config, dataset=dataset)
                reports.append(report)
    if output_dir is not None:
        write_reports(Path(output_dir) / BENCHMARK_REPORTS, reports)
    return reports, compare(reports)
