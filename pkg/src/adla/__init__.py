"""Side-channel leakage assessment with TVLA and ADLA."""
__version__ = "0.1.0"

from adla._backend import NAME as backend
from adla.assess import (AssessmentReport, SampleStatistics, assess_pair, detection_curve,
                         traces_to_detection)
from adla.simulate import ScenarioConfig, generate_pair, scenario_catalog
from adla.stats import ad_statistic, normal_cdf, normal_quantile, qq_points, welch_t
from adla.threshold import (CumulantLedger, ThresholdSpec, cumulants, derive_thresholds,
                            pearson_quantile, sample_a2_infinity, series_sum)
from adla.trace_io import (TracePair, TraceSet, load_trace_set, read_csv, read_trace_set,
                           save_trace_set, write_trace_set)

__all__ = [
    "AssessmentReport", "CumulantLedger", "SampleStatistics", "ScenarioConfig", "ThresholdSpec",
    "TracePair", "TraceSet", "ad_statistic", "assess_pair", "backend", "cumulants",
    "derive_thresholds", "detection_curve", "generate_pair", "load_trace_set", "normal_cdf",
    "normal_quantile", "pearson_quantile", "qq_points", "read_csv", "read_trace_set",
    "sample_a2_infinity", "save_trace_set", "scenario_catalog", "series_sum",
    "traces_to_detection", "welch_t", "write_trace_set",
]
