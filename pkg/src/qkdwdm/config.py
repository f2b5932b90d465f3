"""Domain types, validation, and the JSON/CSV file formats.

Every type is a frozen dataclass that validates itself on construction, so a
value that exists is a value that satisfies its invariants.
"""

from __future__ import annotations

import csv
import enum
import functools
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import units

SCHEMA_VERSION = 1

# Operating limits of the encryption link.
QBER_CEILING = 0.09
MIN_KEY_RATE_BPS = 8.6

DEFAULT_GAMMA_PER_W_KM = 2.0
DEFAULT_PROFILE_NAME = "raman_synthetic_1550.csv"

PROFILE_HEADER = ("wavelength_nm", "rho_per_km_per_nm")


class ConfigError(ValueError):
    """Invalid configuration value or malformed input file."""

    def __init__(self, message: str, field_name: str | None = None, line: int | None = None):
        self.field_name = field_name
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field_name is not None:
            prefix += f"{field_name}: "
        super().__init__(prefix + message)


def _require(cond: bool, field_name: str, message: str) -> None:
    if not cond:
        raise ConfigError(message, field_name)


def _finite(x: float) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


class Direction(str, enum.Enum):
    TOWARD_BOB = "toward_bob"
    TOWARD_ALICE = "toward_alice"


class Protocol(str, enum.Enum):
    BB84 = "BB84"
    SARG = "SARG"

    @classmethod
    def parse(cls, value: "str | Protocol") -> "Protocol":
        if isinstance(value, Protocol):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ConfigError(f"unknown protocol {value!r} (expected BB84 or SARG)", "protocol") from None


# --------------------------------------------------------------------------
# Raman profile


@dataclass(frozen=True)
class RamanProfile:
    """Tabulated effective Raman cross-section rho(lambda) in 1/(km nm)."""

    pump_wavelength_nm: float
    temperature_K: float
    samples: tuple[tuple[float, float], ...]
    source: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        samples = tuple((float(w), float(r)) for w, r in self.samples)
        object.__setattr__(self, "samples", samples)
        _require(len(samples) >= 2, "samples", "need at least 2 samples")
        for w, r in samples:
            _require(math.isfinite(w), "wavelength_nm", "non-finite wavelength")
            _require(math.isfinite(r), "rho_per_km_per_nm", "non-finite cross-section")
            _require(r >= 0, "rho_per_km_per_nm", f"negative cross-section {r!r}")
        for (w0, _), (w1, _) in zip(samples, samples[1:]):
            _require(w1 > w0, "wavelength_nm", f"unsorted wavelengths ({w0} then {w1})")
        _require(_finite(self.temperature_K) and self.temperature_K > 0, "temperature_K", "must be > 0")
        _require(_finite(self.pump_wavelength_nm) and self.pump_wavelength_nm > 0,
                 "pump_wavelength_nm", "must be > 0")
        lo, hi = samples[0][0], samples[-1][0]
        if not lo <= self.pump_wavelength_nm <= hi:
            warnings.warn(
                f"pump wavelength {self.pump_wavelength_nm} nm lies outside the sampled span [{lo}, {hi}] nm",
                stacklevel=3,
            )

    @property
    def wavelengths_nm(self) -> tuple[float, ...]:
        return tuple(w for w, _ in self.samples)

    @property
    def rho(self) -> tuple[float, ...]:
        return tuple(r for _, r in self.samples)

    @property
    def span_nm(self) -> tuple[float, float]:
        return self.samples[0][0], self.samples[-1][0]

    def scaled(self, factor: float) -> "RamanProfile":
        if not (math.isfinite(factor) and factor >= 0):
            raise ConfigError(f"scale factor must be finite and >= 0, got {factor!r}", "raman_scale")
        return replace(self, samples=tuple((w, r * factor) for w, r in self.samples))


def parse_raman_profile(lines: Iterable[str], source: str = "<string>") -> RamanProfile:
    meta: dict[str, float] = {}
    samples: list[tuple[float, float]] = []
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                key = key.strip()
                if key in ("pump_nm", "temperature_K"):
                    try:
                        meta[key] = float(value.strip())
                    except ValueError:
                        raise ConfigError(f"bad metadata value {value.strip()!r}", key, lineno) from None
            continue
        row = next(csv.reader([line]))
        if not header_seen:
            if tuple(c.strip() for c in row) != PROFILE_HEADER:
                raise ConfigError(f"expected header {','.join(PROFILE_HEADER)!r}, got {line!r}", line=lineno)
            header_seen = True
            continue
        if len(row) != 2:
            raise ConfigError(f"expected 2 columns, got {len(row)}", line=lineno)
        try:
            w, r = float(row[0]), float(row[1])
        except ValueError:
            raise ConfigError(f"non-numeric row {line!r}", line=lineno) from None
        if r < 0:
            raise ConfigError(f"negative cross-section {r!r}", "rho_per_km_per_nm", lineno)
        if samples and w <= samples[-1][0]:
            raise ConfigError(f"unsorted wavelengths ({samples[-1][0]} then {w})", "wavelength_nm", lineno)
        samples.append((w, r))
    if not header_seen:
        raise ConfigError("missing header line", line=None)
    return RamanProfile(
        pump_wavelength_nm=meta.get("pump_nm", 1550.0),
        temperature_K=meta.get("temperature_K", 293.0),
        samples=tuple(samples),
        source=source,
    )


def load_raman_profile(path: str | Path) -> RamanProfile:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return parse_raman_profile(fh, source=str(path))


def dump_raman_profile(profile: RamanProfile, path: str | Path, comments: Sequence[str] = ()) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(f"# pump_nm={profile.pump_wavelength_nm!r}\n")
        fh.write(f"# temperature_K={profile.temperature_K!r}\n")
        fh.write(",".join(PROFILE_HEADER) + "\n")
        for w, r in profile.samples:
            fh.write(f"{w!r},{r:.6e}\n")


@functools.lru_cache(maxsize=32)
def _cached_profile(path: str) -> RamanProfile:
    return load_raman_profile(path)


def default_profile() -> RamanProfile:
    ref = resources.files("qkdwdm") / "data" / DEFAULT_PROFILE_NAME
    with resources.as_file(ref) as p:
        return _cached_profile(str(p))


# --------------------------------------------------------------------------
# Link components


@dataclass(frozen=True)
class FibreSpec:
    length_km: float
    attenuation_db_per_km: float = 0.21
    zero_dispersion_wavelength_nm: float | None = None
    nonlinear_gamma_per_w_km: float = DEFAULT_GAMMA_PER_W_KM

    def __post_init__(self) -> None:
        _require(_finite(self.length_km) and self.length_km >= 0, "length_km", "must be finite and >= 0")
        _require(_finite(self.attenuation_db_per_km) and 0 < self.attenuation_db_per_km <= 5,
                 "attenuation_db_per_km", "must lie in (0, 5] dB/km")
        _require(_finite(self.nonlinear_gamma_per_w_km) and self.nonlinear_gamma_per_w_km >= 0,
                 "nonlinear_gamma_per_w_km", "must be finite and >= 0")

    @property
    def alpha_per_km(self) -> float:
        return units.alpha_db_to_per_km(self.attenuation_db_per_km)

    def transmission(self, length_km: float | None = None) -> float:
        length = self.length_km if length_km is None else length_km
        return 10.0 ** (-self.attenuation_db_per_km * length / 10.0)


@dataclass(frozen=True)
class ClassicalChannel:
    """A classical DWDM channel.

    `offset_ghz_from_quantum` is positive for channels on the long-wavelength
    side of the quantum channel.
    """

    offset_ghz_from_quantum: float
    direction: Direction
    receiver_power_dbm: float = -28.0
    extra_launch_offset_db: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "direction", Direction(self.direction))
        _require(_finite(self.offset_ghz_from_quantum) and self.offset_ghz_from_quantum != 0,
                 "offset_ghz_from_quantum", "must be finite and non-zero")
        _require(_finite(self.receiver_power_dbm) and -40 <= self.receiver_power_dbm <= 5,
                 "receiver_power_dbm", "must lie in [-40, +5] dBm")
        _require(_finite(self.extra_launch_offset_db) and self.extra_launch_offset_db >= 0,
                 "extra_launch_offset_db", "must be >= 0")


@dataclass(frozen=True)
class ChannelPlan:
    quantum_wavelength_nm: float = 1551.72
    quantum_passband_nm: float = 0.4
    grid_spacing_ghz: float = 100.0
    channels: tuple[ClassicalChannel, ...] = ()
    isolation_adjacent_db: float = 59.0
    isolation_nonadjacent_db: float = 82.0
    dwdm_insertion_loss_db: float = 1.95
    # Mux at Alice plus demux at Bob; zero for a dark fibre.
    quantum_path_loss_db: float = 3.9

    def __post_init__(self) -> None:
        object.__setattr__(self, "channels", tuple(self.channels))
        _require(_finite(self.quantum_wavelength_nm) and self.quantum_wavelength_nm > 0,
                 "quantum_wavelength_nm", "must be > 0")
        _require(_finite(self.grid_spacing_ghz) and self.grid_spacing_ghz > 0, "grid_spacing_ghz", "must be > 0")
        _require(_finite(self.quantum_passband_nm) and self.quantum_passband_nm > 0,
                 "quantum_passband_nm", "must be > 0")
        grid_nm = units.ghz_to_nm_at(self.quantum_wavelength_nm, self.grid_spacing_ghz)
        _require(self.quantum_passband_nm <= grid_nm, "quantum_passband_nm",
                 f"passband {self.quantum_passband_nm} nm exceeds the grid spacing ({grid_nm:.4f} nm)")
        for name in ("isolation_adjacent_db", "isolation_nonadjacent_db", "dwdm_insertion_loss_db",
                     "quantum_path_loss_db"):
            v = getattr(self, name)
            _require(isinstance(v, (int, float)) and not math.isnan(v) and v >= 0, name, "must be >= 0")
        seen = set()
        for ch in self.channels:
            _require(abs(ch.offset_ghz_from_quantum) >= self.grid_spacing_ghz - 1e-9, "channels",
                     f"offset {ch.offset_ghz_from_quantum} GHz is closer than one grid spacing")
            key = (ch.offset_ghz_from_quantum, ch.direction)
            _require(key not in seen, "channels",
                     f"duplicate channel at {ch.offset_ghz_from_quantum} GHz {ch.direction.value}")
            seen.add(key)

    @property
    def passband_ghz(self) -> float:
        return units.passband_nm_to_ghz(self.quantum_wavelength_nm, self.quantum_passband_nm)

    def channel_wavelength_nm(self, ch: ClassicalChannel) -> float:
        return units.offset_to_wavelength_nm(self.quantum_wavelength_nm, ch.offset_ghz_from_quantum)

    def is_adjacent(self, ch: ClassicalChannel) -> bool:
        return round(abs(ch.offset_ghz_from_quantum) / self.grid_spacing_ghz) <= 1

    def isolation_db(self, ch: ClassicalChannel) -> float:
        return self.isolation_adjacent_db if self.is_adjacent(ch) else self.isolation_nonadjacent_db

    def fibre_output_power_dbm(self, ch: ClassicalChannel) -> float:
        """Channel power at the fibre end feeding its receiver."""
        return ch.receiver_power_dbm + self.dwdm_insertion_loss_db


@dataclass(frozen=True)
class DetectorSpec:
    efficiency: float = 0.07
    dark_count_prob_per_ns: float = 5e-6
    gate_width_ns: float = 1.5
    dead_time_us: float = 10.0
    afterpulse_prob: float = 0.008

    def __post_init__(self) -> None:
        _require(_finite(self.efficiency) and 0 < self.efficiency <= 1, "efficiency", "must lie in (0, 1]")
        _require(_finite(self.dark_count_prob_per_ns) and self.dark_count_prob_per_ns >= 0,
                 "dark_count_prob_per_ns", "must be >= 0")
        _require(_finite(self.gate_width_ns) and self.gate_width_ns > 0, "gate_width_ns", "must be > 0")
        _require(_finite(self.dead_time_us) and self.dead_time_us >= 0, "dead_time_us", "must be >= 0")
        _require(_finite(self.afterpulse_prob) and 0 <= self.afterpulse_prob < 1,
                 "afterpulse_prob", "must lie in [0, 1)")
        _require(self.dark_count_prob_per_ns * self.gate_width_ns <= 1, "dark_count_prob_per_ns",
                 "dark count probability per gate exceeds 1")

    @property
    def dark_count_prob_per_gate(self) -> float:
        return self.dark_count_prob_per_ns * self.gate_width_ns


@dataclass(frozen=True)
class ProtocolConfig:
    protocol: Protocol = Protocol.BB84
    visibility: float = 0.994
    pulse_rate_hz: float = 5e6
    storage_line_km: float = 10.0
    bob_internal_loss_db: float = 2.65
    error_correction_inefficiency: float = 1.2
    mean_photon_override: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "protocol", Protocol.parse(self.protocol))
        _require(_finite(self.visibility) and 0 < self.visibility <= 1, "visibility", "must lie in (0, 1]")
        _require(_finite(self.pulse_rate_hz) and self.pulse_rate_hz > 0, "pulse_rate_hz", "must be > 0")
        _require(_finite(self.storage_line_km) and self.storage_line_km >= 0, "storage_line_km", "must be >= 0")
        _require(_finite(self.bob_internal_loss_db) and self.bob_internal_loss_db >= 0,
                 "bob_internal_loss_db", "must be >= 0")
        _require(_finite(self.error_correction_inefficiency) and self.error_correction_inefficiency >= 1,
                 "error_correction_inefficiency", "must be >= 1")
        if self.mean_photon_override is not None:
            _require(_finite(self.mean_photon_override) and self.mean_photon_override > 0,
                     "mean_photon_override", "must be > 0")


@dataclass(frozen=True)
class FilterSpec:
    """Narrowband filter in front of each detector.

    Noise rejection is a calibrated scalar. The raw optical parameters are
    kept for reference and used only for the crosstalk extinction.
    """

    passband_pm: float = 45.0
    extinction_db: float = 14.0
    insertion_loss_db: float = 2.0
    noise_rejection_fraction: float = 0.85

    def __post_init__(self) -> None:
        _require(_finite(self.passband_pm) and self.passband_pm > 0, "passband_pm", "must be > 0")
        _require(_finite(self.extinction_db) and self.extinction_db >= 0, "extinction_db", "must be >= 0")
        _require(_finite(self.insertion_loss_db) and self.insertion_loss_db >= 0,
                 "insertion_loss_db", "must be >= 0")
        _require(_finite(self.noise_rejection_fraction) and 0 <= self.noise_rejection_fraction < 1,
                 "noise_rejection_fraction", "must lie in [0, 1)")


@dataclass(frozen=True)
class LinkConfig:
    """Everything needed to evaluate one link."""

    fibre: FibreSpec
    plan: ChannelPlan
    detector: DetectorSpec
    protocol: ProtocolConfig
    filter: FilterSpec | None = None
    raman_profile_path: str | None = None
    raman_scale: float = 1.0
    base_dir: Path | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        _require(_finite(self.raman_scale) and self.raman_scale >= 0, "raman_scale", "must be finite and >= 0")

    def profile(self) -> RamanProfile:
        """The Raman profile with `raman_scale` applied."""
        if self.raman_profile_path is None:
            base = default_profile()
        else:
            p = Path(self.raman_profile_path)
            if not p.is_absolute() and self.base_dir is not None:
                p = self.base_dir / p
            try:
                base = _cached_profile(str(p.resolve()))
            except FileNotFoundError:
                raise ConfigError(f"file not found: {p}", "raman_profile_path") from None
        return base if self.raman_scale == 1.0 else base.scaled(self.raman_scale)

    def with_protocol(self, protocol: Protocol | str) -> "LinkConfig":
        return replace(self, protocol=replace(self.protocol, protocol=Protocol.parse(protocol)))

    def with_filter(self, enabled: bool) -> "LinkConfig":
        if not enabled:
            return replace(self, filter=None)
        return self if self.filter is not None else replace(self, filter=FilterSpec())

    def with_length(self, length_km: float) -> "LinkConfig":
        return replace(self, fibre=replace(self.fibre, length_km=length_km))


# --------------------------------------------------------------------------
# JSON (de)serialisation


def _build(cls, data: Mapping[str, Any], section: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f"expected an object, got {type(data).__name__}", section)
    allowed = {f for f in cls.__dataclass_fields__}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", section)
    try:
        return cls(**data)
    except ConfigError as exc:
        raise ConfigError(str(exc), section) from None
    except TypeError as exc:
        raise ConfigError(str(exc), section) from None


def config_from_dict(data: Mapping[str, Any], base_dir: Path | None = None) -> LinkConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("top level must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})", "schema_version")
    allowed = {"schema_version", "fibre", "plan", "detector", "protocol", "filter",
               "raman_profile_path", "raman_scale"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    for key in ("fibre", "plan", "detector", "protocol"):
        if key not in data:
            raise ConfigError("missing section", key)

    plan_data = dict(data["plan"])
    raw_channels = plan_data.pop("channels", [])
    if not isinstance(raw_channels, list):
        raise ConfigError("must be a list", "plan.channels")
    channels = tuple(_build(ClassicalChannel, c, "plan.channels") for c in raw_channels)
    plan = _build(ChannelPlan, {**plan_data, "channels": channels}, "plan")

    filt = data.get("filter")
    return LinkConfig(
        fibre=_build(FibreSpec, data["fibre"], "fibre"),
        plan=plan,
        detector=_build(DetectorSpec, data["detector"], "detector"),
        protocol=_build(ProtocolConfig, data["protocol"], "protocol"),
        filter=None if filt is None else _build(FilterSpec, filt, "filter"),
        raman_profile_path=data.get("raman_profile_path"),
        raman_scale=float(data.get("raman_scale", 1.0)),
        base_dir=base_dir,
    )


def config_to_dict(config: LinkConfig) -> dict[str, Any]:
    plan = asdict(config.plan)
    plan["channels"] = [
        {**asdict(ch), "direction": ch.direction.value} for ch in config.plan.channels
    ]
    protocol = asdict(config.protocol)
    protocol["protocol"] = config.protocol.protocol.value
    return {
        "schema_version": SCHEMA_VERSION,
        "fibre": asdict(config.fibre),
        "plan": plan,
        "detector": asdict(config.detector),
        "protocol": protocol,
        "filter": None if config.filter is None else asdict(config.filter),
        "raman_profile_path": config.raman_profile_path,
        "raman_scale": config.raman_scale,
    }


def dumps_config(config: LinkConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n"


def loads_config(text: str, base_dir: Path | None = None) -> LinkConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return config_from_dict(data, base_dir=base_dir)


def load_config(path: str | Path) -> LinkConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    return loads_config(text, base_dir=path.resolve().parent)


def dump_config(config: LinkConfig, path: str | Path) -> None:
    Path(path).write_text(dumps_config(config), encoding="utf-8")
