"""Conformal prediction sets and uncertainty-aware evaluation for ordinal scoring."""

from .conformal import (
    ConformalModel,
    PredictionSet,
    calibrate,
    conformal_quantile,
    lac_score,
    load_model,
    predict_batch,
    predict_set,
    save_model,
)
from .dataset import (
    Manifest,
    ProbRecord,
    RecordSet,
    SplitSpec,
    load_manifest,
    load_records,
    split,
    split_sizes,
    write_records,
)
from .errors import CalibrationError, ConformalError, MetricError, RecordFormatError, ValidationError
from .labels import ASAP_P1, FCE_BAND_MAP, THREE_BAND, BandMap, LabelSpace, make_label_space, map_raw_score
from .metrics import (
    EvalReport,
    accuracy,
    avg_set_size,
    coverage,
    evaluate,
    macro_f1,
    point_prediction,
    qwk,
    singleton_rate,
    uacc,
)
from .simulation import SimConfig, SimResult, generate_exchangeable, run_coverage_experiment

__version__ = "0.1.0"
