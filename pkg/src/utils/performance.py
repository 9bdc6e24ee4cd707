"""
Stage timing for data generation, training and evaluation

Durations measured here feed the wall-clock fields of run manifests and
evaluation reports; they are never part of deterministic outputs.
"""
import time
import logging
from typing import Dict, Any, List, Optional
from dataclasses import dataclass, field


@dataclass
class StageTiming:
    """One timed stage"""
    operation: str
    start_time: float
    end_time: Optional[float] = None
    duration: Optional[float] = None
    success: bool = True
    error: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def complete(self, success: bool = True, error: Optional[str] = None):
        self.end_time = time.perf_counter()
        self.duration = self.end_time - self.start_time
        self.success = success
        self.error = error


class PerformanceMonitor:
    """Collects stage timings for the current process"""

    def __init__(self):
        self.timings: List[StageTiming] = []
        self.logger = logging.getLogger(__name__)

    def start_operation(self, operation: str, metadata: Optional[Dict[str, Any]] = None) -> StageTiming:
        timing = StageTiming(operation=operation, start_time=time.perf_counter(), metadata=metadata or {})
        self.timings.append(timing)
        self.logger.debug(f"Started {operation}")
        return timing

    def complete_operation(self, timing: StageTiming, success: bool = True, error: Optional[str] = None):
        timing.complete(success=success, error=error)
        log_level = logging.INFO if success else logging.WARNING
        self.logger.log(log_level, f"{timing.operation} finished in {timing.duration:.2f}s (success: {success})")
        if error:
            self.logger.error(f"{timing.operation} failed: {error}")


# Global performance monitor instance
performance_monitor = PerformanceMonitor()


class monitor_operation:
    """Context manager timing a block; yields the StageTiming"""

    def __init__(self, operation: str, metadata: Optional[Dict[str, Any]] = None):
        self.operation = operation
        self.metadata = metadata or {}
        self.timing: Optional[StageTiming] = None

    def __enter__(self) -> StageTiming:
        self.timing = performance_monitor.start_operation(self.operation, self.metadata)
        return self.timing

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.timing:
            performance_monitor.complete_operation(self.timing, success=exc_type is None,
                                                   error=str(exc_val) if exc_val else None)
