"""Wi-Fi FTM ranging toolkit."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    Bandwidth,
    Dataset,
    FtmFrame,
    FtmMeasurement,
    LabeledSample,
    Scenario,
    to_labeled_sample,
    validate_measurement,
)
from .errors import FtmError  # noqa: E402

__all__ = [
    "Bandwidth",
    "Dataset",
    "FtmError",
    "FtmFrame",
    "FtmMeasurement",
    "LabeledSample",
    "Scenario",
    "__version__",
    "to_labeled_sample",
    "validate_measurement",
]
