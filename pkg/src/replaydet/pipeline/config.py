"""Run configuration parsed from ``key = value`` text files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..autoencoder import CODE_DIM, TrainState
from ..errors import ConfigError
from ..features.extract import FeatureConfig
from ..features.io import FeatureKind
from ..gmm import TrainConfig

ARMS = ("arm1", "arm2", "both")
ARM2_INPUTS = ("codes", "reconstructions")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    kinds: tuple[FeatureKind, ...] = tuple(FeatureKind)
    arm: str = "both"
    augment: bool = True
    augment_arm1: bool = False
    arm2_input: str = "codes"
    seed: int = 0
    max_frames: int = 0
    features: FeatureConfig = field(default_factory=FeatureConfig)
    gmm: TrainConfig = field(default_factory=TrainConfig)
    ae_code_dim: int = CODE_DIM
    ae_learning_rate: float = 0.01
    ae_batch_size: int = 64
    ae_epochs: int = 200
    ae_max_frames: int = 0
    fusion_reg: float = 1e-2
    fusion_prior: float = 0.5

    def __post_init__(self):
        if self.arm not in ARMS:
            raise ConfigError(f"arm must be one of {ARMS}, got {self.arm!r}")
        if self.arm2_input not in ARM2_INPUTS:
            raise ConfigError(f"arm2_input must be one of {ARM2_INPUTS}, got {self.arm2_input!r}")
        if not self.kinds:
            raise ConfigError("at least one feature kind must be enabled")
        if self.max_frames < 0 or self.ae_max_frames < 0:
            raise ConfigError("frame caps must be nonnegative (0 disables the cap)")
        if self.fusion_reg < 0 or not 0 < self.fusion_prior < 1:
            raise ConfigError("fusion_reg must be >= 0 and fusion_prior in (0, 1)")
        self.ae_state(0)

    @property
    def arms(self) -> tuple[str, ...]:
        return ("arm1", "arm2") if self.arm == "both" else (self.arm,)

    def ae_state(self, seed: int) -> TrainState:
        try:
            return TrainState(self.ae_learning_rate, self.ae_batch_size, self.ae_epochs, seed)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(str(exc)) from exc


_TOP = {f.name: f for f in dataclasses.fields(RunConfig) if f.name not in ("features", "gmm")}
_FEATURE = {f.name: f for f in dataclasses.fields(FeatureConfig)}
_GMM = {f.name: f for f in dataclasses.fields(TrainConfig)}


def _coerce(f: dataclasses.Field, text: str):
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    if f.name == "kinds":
        return tuple(FeatureKind.parse(k) for k in text.split(",") if k.strip())
    if kind == "bool":
        return _parse_bool(text)
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    return text.strip()


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Build a RunConfig; unknown keys and malformed lines are hard errors."""
    top, feat, gmm = {}, {}, {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in _TOP:
                top[key] = _coerce(_TOP[key], value)
            elif key in _FEATURE:
                feat[key] = _coerce(_FEATURE[key], value)
            elif key in _GMM:
                gmm[key] = _coerce(_GMM[key], value)
            else:
                raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{source}:{n}: bad value for {key!r}: {exc}") from exc
    try:
        return RunConfig(features=FeatureConfig(**feat), gmm=TrainConfig(**gmm), **top)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for name in _TOP:
        value = getattr(cfg, name)
        if name == "kinds":
            value = ",".join(k.name for k in value)
        lines.append(f"{name} = {value}")
    for obj, fields in ((cfg.features, _FEATURE), (cfg.gmm, _GMM)):
        lines.extend(f"{name} = {getattr(obj, name)}" for name in fields)
    return "\n".join(lines) + "\n"


# Full-scale profile vs. a desk-scale one that finishes in minutes on the synthetic corpus.
FULL_PROFILE = RunConfig()
DESK_PROFILE = RunConfig(
    kinds=(FeatureKind.MFCC, FeatureKind.CQCC, FeatureKind.LFCC),
    max_frames=20000,
    ae_max_frames=10000,
    features=FeatureConfig(cqt_octaves=5),
    gmm=TrainConfig(components=16),
)
