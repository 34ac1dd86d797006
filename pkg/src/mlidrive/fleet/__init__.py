"""Fleet dataset ingestion and statistical trend analysis."""

from .pipeline import (CohortStats, CorrelationReport, FilterResult, cohorts, correlation_matrix,
                       filter_pipeline, quartiles)
from .records import FleetRecord, ingest
from .stats import breusch_pagan, pearson, shapiro_wilk

__all__ = ["CohortStats", "CorrelationReport", "FilterResult", "FleetRecord", "breusch_pagan",
           "cohorts", "correlation_matrix", "filter_pipeline", "ingest", "pearson", "quartiles",
           "shapiro_wilk"]
