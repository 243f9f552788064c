from .coincidence import (
    CoincidenceSpec,
    EmptyHistogram,
    Histogram,
    accidental_counts,
    accidental_estimate,
    correlation_fwhm,
    count_coincidences,
    find_coincidences,
    g2_histogram,
    relative_delay_estimate,
)
from .detectors import DetectorSpec, TimeTag, merge_streams, read_timetags, write_timetags
from .experiment import ConfigInvalid, Experiment, SimulationRun, count_probability, simulate, simulate_timetags
from .scan import SCAN_AXES, ScanRow, predict_scan, scan, write_scan_csv
