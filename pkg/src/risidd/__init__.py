"""Link-level simulation of RIS-assisted multiuser uplinks with iterative
detection and decoding."""

from risidd.config import Geometry, PowerBudget, SystemConfig, dbm_to_linear, split_power

__version__ = "0.1.0"

__all__ = [
    "Geometry",
    "PowerBudget",
    "SystemConfig",
    "dbm_to_linear",
    "split_power",
]
