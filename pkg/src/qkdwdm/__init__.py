"""Performance model for QKD over a fibre shared with classical DWDM channels."""

from .config import (
    MIN_KEY_RATE_BPS,
    QBER_CEILING,
    SCHEMA_VERSION,
    ChannelPlan,
    ClassicalChannel,
    ConfigError,
    DetectorSpec,
    Direction,
    FibreSpec,
    FilterSpec,
    LinkConfig,
    Protocol,
    ProtocolConfig,
    RamanProfile,
    load_config,
    load_raman_profile,
)

__version__ = "0.1.0"

__all__ = [
    "MIN_KEY_RATE_BPS",
    "QBER_CEILING",
    "SCHEMA_VERSION",
    "ChannelPlan",
    "ClassicalChannel",
    "ConfigError",
    "DetectorSpec",
    "Direction",
    "FibreSpec",
    "FilterSpec",
    "LinkConfig",
    "Protocol",
    "ProtocolConfig",
    "RamanProfile",
    "load_config",
    "load_raman_profile",
    "__version__",
]
