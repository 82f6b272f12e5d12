from demandlab.simulation.config import (
    CyclicalParams,
    EventCalendar,
    ExternalContext,
    LeadTimeModel,
    PlatformParams,
    PriceModel,
    SimConfig,
    default_config,
    load_config,
    save_config,
)
from demandlab.simulation.engine import Dataset, DemandRecord, run_simulation
from demandlab.simulation import sampling

__all__ = [
    "CyclicalParams",
    "Dataset",
    "DemandRecord",
    "EventCalendar",
    "ExternalContext",
    "LeadTimeModel",
    "PlatformParams",
    "PriceModel",
    "SimConfig",
    "default_config",
    "load_config",
    "run_simulation",
    "sampling",
    "save_config",
]
