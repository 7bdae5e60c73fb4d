"""
Wall-time and process-memory probes for long runs.
"""

import logging
import os
import time
from dataclasses import asdict, dataclass

import psutil

logger = logging.getLogger(__name__)


@dataclass
class ProbeResult:
    """One probe point.

    Elapsed times exclude the cost of the memory reads themselves; the
    overhead of every earlier probe is subtracted from elapsed_since_start.
    """

    label: str
    elapsed_since_start: float
    elapsed_since_last: float
    rss_bytes: int
    delta_since_start: int
    delta_since_last: int


def process_rss() -> int:
    """Resident set size of this process in bytes."""
    return psutil.Process(os.getpid()).memory_info().rss


class PerformanceTracker:
    """Context manager recording time and RSS at named probes.

    Example:
        with PerformanceTracker("correlate") as tracker:
            table = build_sieve_table(limit)
            tracker.probe("table")
            report = chowla_correlation(table, ...)
            tracker.probe("sum")
        manifest.timings = tracker.timings()
    """

    def __init__(self, name: str = "run"):
        self.name = name
        self.probes: list[ProbeResult] = []
        self.total_elapsed: float = 0.0
        self.total_delta: int = 0
        self._start_time = 0.0
        self._start_memory = 0
        self._last_time = 0.0
        self._last_memory = 0
        self._overhead = 0.0

    def __enter__(self):
        self._start_time = time.perf_counter()
        self._start_memory = process_rss()
        self._last_time = self._start_time
        self._last_memory = self._start_memory
        return self

    def probe(self, label: str) -> ProbeResult:
        time_before = time.perf_counter()
        rss = process_rss()
        time_after = time.perf_counter()
        self._overhead += time_after - time_before

        probe = ProbeResult(
            label=label,
            elapsed_since_start=time_before - self._start_time - self._overhead,
            elapsed_since_last=time_before - self._last_time,
            rss_bytes=rss,
            delta_since_start=rss - self._start_memory,
            delta_since_last=rss - self._last_memory,
        )
        self.probes.append(probe)
        self._last_time = time_after
        self._last_memory = rss
        logger.debug(
            "%s/%s: %.4fs, rss %.1f MB (%+.1f MB)",
            self.name,
            label,
            probe.elapsed_since_last,
            rss / (1024 * 1024),
            probe.delta_since_last / (1024 * 1024),
        )
        return probe

    def __exit__(self, *args):
        self.total_elapsed = time.perf_counter() - self._start_time
        self.total_delta = process_rss() - self._start_memory

    def timings(self) -> dict[str, float]:
        """Seconds spent between consecutive probes, keyed by probe label, plus the total."""
        out = {p.label: round(p.elapsed_since_last, 6) for p in self.probes}
        out["total"] = round(self.total_elapsed, 6)
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "total_seconds": self.total_elapsed,
            "total_delta_bytes": self.total_delta,
            "probes": [asdict(p) for p in self.probes],
        }

    def summary_lines(self) -> list[str]:
        """Fixed-width table of the probes."""
        lines = [
            "=" * 70,
            f"Performance: {self.name}",
            "=" * 70,
            f"{'Probe':<25} {'Time (s)':<12} {'Δt (s)':<12} {'Mem (MB)':<12} {'ΔMem (MB)':<12}",
            "-" * 70,
        ]
        for p in self.probes:
            lines.append(
                f"{p.label:<25} "
                f"{p.elapsed_since_start:>10.4f}  "
                f"{p.elapsed_since_last:>10.4f}  "
                f"{p.rss_bytes / (1024 * 1024):>10.2f}  "
                f"{p.delta_since_last / (1024 * 1024):>+10.2f}"
            )
        lines.append("-" * 70)
        lines.append(
            f"{'TOTAL':<25} {self.total_elapsed:>10.4f}  {'':>10}  {'':>10}  "
            f"{self.total_delta / (1024 * 1024):>+10.2f}"
        )
        lines.append("=" * 70)
        return lines
