"""Result structures for reports and experiments."""

from dataclasses import dataclass, field

import numpy as np

from pabeam.beamformers import Method

METRIC_COLUMNS = ["method", "depth_mm", "snr_db", "fwhm_mm", "psl_db"]
PROFILE_COLUMNS = ["method", "depth_mm", "x_mm", "db"]


def _cell(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def _optional_float(value) -> float | None:
    if value is None or value == "":
        return None
    return float(value)


@dataclass
class MetricRow:
    """Image-quality metrics of one method at one target.

    Missing values (the metric could not be measured) are None.
    """

    method: Method
    depth_mm: float
    snr_db: float | None = None
    fwhm_mm: float | None = None
    psl_db: float | None = None

    @property
    def sort_key(self) -> tuple[float, int]:
        """Depth first, then the fixed method order."""
        return (round(self.depth_mm, 6), list(Method).index(self.method))

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "method": self.method.label,
            "depth_mm": self.depth_mm,
            "snr_db": self.snr_db,
            "fwhm_mm": self.fwhm_mm,
            "psl_db": self.psl_db,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricRow":
        """Create from dictionary (CSV rows with empty cells included)."""
        return cls(
            method=Method.parse(data["method"]),
            depth_mm=float(data["depth_mm"]),
            snr_db=_optional_float(data.get("snr_db")),
            fwhm_mm=_optional_float(data.get("fwhm_mm")),
            psl_db=_optional_float(data.get("psl_db")),
        )

    def to_csv_row(self) -> list[str]:
        """Cells in METRIC_COLUMNS order."""
        return [
            self.method.label,
            f"{self.depth_mm:.3f}",
            _cell(self.snr_db),
            _cell(self.fwhm_mm),
            _cell(self.psl_db),
        ]


@dataclass
class ProfileRow:
    """One sample of a lateral profile."""

    method: Method
    depth_mm: float
    x_mm: float
    db: float

    def to_csv_row(self) -> list[str]:
        """Cells in PROFILE_COLUMNS order."""
        return [self.method.label, f"{self.depth_mm:.3f}", f"{self.x_mm:.6f}", f"{self.db:.6f}"]


@dataclass
class ReportResult:
    """Metrics and lateral profiles of one RF frame."""

    metrics: list[MetricRow] = field(default_factory=list)
    profiles: list[ProfileRow] = field(default_factory=list)
    seed: int | None = None

    def sorted_metrics(self) -> list[MetricRow]:
        """Rows ordered by depth, then DAS, DMAS, MV, MVB-DMAS."""
        return sorted(self.metrics, key=lambda row: row.sort_key)

    def sorted_profiles(self) -> list[ProfileRow]:
        """Profile samples ordered by depth, method and lateral position."""
        order = list(Method)
        return sorted(
            self.profiles,
            key=lambda row: (round(row.depth_mm, 6), order.index(row.method), row.x_mm),
        )

    def metric(self, method: Method, depth_mm: float) -> MetricRow | None:
        """Row of a method at the target nearest a depth, if any."""
        candidates = [row for row in self.metrics if row.method is method]
        if not candidates:
            return None
        return min(candidates, key=lambda row: abs(row.depth_mm - depth_mm))

    def missing_count(self) -> int:
        """Number of metric cells that could not be measured."""
        return sum(
            value is None
            for row in self.metrics
            for value in (row.snr_db, row.fwhm_mm, row.psl_db)
        )

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON export."""
        return {
            "seed": self.seed,
            "metrics": [row.to_dict() for row in self.sorted_metrics()],
        }

    def get_summary(self) -> str:
        """Get a human-readable summary of the result.

        Returns:
            Summary string
        """
        depths = {round(row.depth_mm, 6) for row in self.metrics}
        summary = f"{len(self.metrics)} metric rows over {len(depths)} depths"
        missing = self.missing_count()
        if missing:
            summary += f" ({missing} values not measurable)"
        return summary


def _mean(values: list[float | None]) -> float | None:
    measured = [v for v in values if v is not None]
    return float(np.mean(measured)) if measured else None


def average_reports(results: list[ReportResult]) -> ReportResult:
    """Average metrics over seeds, per method and depth.

    Values missing for some seeds are averaged over the seeds that measured
    them; a value missing for every seed stays missing.

    Args:
        results: Reports of the same phantom for different seeds

    Returns:
        ReportResult without profiles and without a seed
    """
    grouped: dict[tuple[Method, float], list[MetricRow]] = {}
    for result in results:
        for row in result.metrics:
            grouped.setdefault((row.method, round(row.depth_mm, 6)), []).append(row)

    averaged = [
        MetricRow(
            method=method,
            depth_mm=depth_mm,
            snr_db=_mean([row.snr_db for row in rows]),
            fwhm_mm=_mean([row.fwhm_mm for row in rows]),
            psl_db=_mean([row.psl_db for row in rows]),
        )
        for (method, depth_mm), rows in grouped.items()
    ]
    return ReportResult(metrics=sorted(averaged, key=lambda row: row.sort_key))
