"""Run configuration file: INI sections validated by pydantic, unknown keys rejected."""

import configparser
import hashlib
from pathlib import Path
from typing import Annotated, Any

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from src.services.evaluation import EvaluationSettings, Method
from src.services.exceptions import InvalidConfiguration
from src.services.models import (
    WINDOW_LENGTH,
    WINDOW_STRIDE,
    AugmentConfig,
    ForestConfig,
    SyntheticSceneConfig,
    TrainConfig,
)
from src.services.pipeline import AbnormalTransform, LineDirection
from src.services.seeding import STAGE_INGEST, STAGE_TRAIN, derive_seed


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


CommaList = Annotated[list[str], BeforeValidator(_split_list)]

METHOD_NAMES = tuple(method.value for method in Method)


def _check_method(value: str) -> str:
    if value not in METHOD_NAMES:
        raise ValueError(f"unknown method '{value}'")
    return value


class RunSection(_Section):
    seed: int = Field(default=42, ge=0)
    dataset: str = "synthetic"
    method: str = Method.DAE.value
    methods: CommaList = Field(default_factory=lambda: list(METHOD_NAMES))

    @field_validator("method")
    @classmethod
    def _known_method(cls, value: str) -> str:
        return _check_method(value)

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, value: list[str]) -> list[str]:
        if not value:
            raise ValueError("at least one method is required")
        for name in value:
            _check_method(name)
        return value


class PathsSection(_Section):
    annotations: str = "data/annotations.csv"
    corpus: str = "data/normal_corpus.csv"
    abnormal: str = "data/abnormal_corpus.csv"
    model: str = "models/detector.model"
    report: str = "reports/evaluation.csv"


class SceneSection(_Section):
    width: float = Field(default=640.0, gt=0)
    height: float = Field(default=480.0, gt=0)
    car_count: int = Field(default=15, ge=0)
    pedestrian_count: int = Field(default=5, ge=0)
    car_speed: float = Field(default=8.0, gt=0)
    pedestrian_speed: float = Field(default=2.0, gt=0)
    corridor_half_width: float = Field(default=20.0, ge=0)
    jitter_sigma: float = Field(default=0.3, ge=0)


class WindowSection(_Section):
    length: int = Field(default=WINDOW_LENGTH, ge=1)
    stride: int = Field(default=WINDOW_STRIDE, ge=1)


class AugmentSection(_Section):
    count_per_track: int = Field(default=50, ge=0)
    position_noise_sigma: float = Field(default=2.0, ge=0)


class AbnormalSection(_Section):
    straight_count: int = Field(default=200, ge=0)
    speed_min: float = Field(default=1.0, ge=0)
    speed_max: float = Field(default=10.0, ge=0)
    realistic_count: int = Field(default=200, ge=0)
    transforms: CommaList = Field(default_factory=lambda: [AbnormalTransform.ROTATE.value])
    rotation_degrees: float = 90.0
    offroad_dx: float | None = None
    offroad_dy: float | None = None
    direction: str = LineDirection.ANY.value

    @field_validator("offroad_dx", "offroad_dy", mode="before")
    @classmethod
    def _blank_is_default(cls, value: Any) -> Any:
        return None if isinstance(value, str) and not value.strip() else value

    @field_validator("transforms")
    @classmethod
    def _known_transforms(cls, value: list[str]) -> list[str]:
        known = {transform.value for transform in AbnormalTransform}
        for name in value:
            if name not in known:
                raise ValueError(f"unknown transform '{name}'")
        return value

    @field_validator("direction")
    @classmethod
    def _known_direction(cls, value: str) -> str:
        if value not in {direction.value for direction in LineDirection}:
            raise ValueError(f"unknown line direction '{value}'")
        return value

    @model_validator(mode="after")
    def _ordered_speeds(self) -> "AbnormalSection":
        if self.speed_min > self.speed_max:
            raise ValueError("speed_min must not exceed speed_max")
        return self

    @property
    def offroad_offset(self) -> tuple[float, float] | None:
        if self.offroad_dx is None or self.offroad_dy is None:
            return None
        return self.offroad_dx, self.offroad_dy


class TrainSection(_Section):
    batch_size: int = Field(default=128, ge=1)
    epochs: int = Field(default=100, ge=1)
    learning_rate: float = Field(default=0.001, gt=0)
    rmsprop_decay: float = Field(default=0.9, ge=0, lt=1)
    rmsprop_epsilon: float = Field(default=1e-8, gt=0)
    cv_fraction: float = Field(default=0.1, gt=0, lt=1)
    split_fraction: float = Field(default=0.8, gt=0, lt=1)
    vae_hidden: int = Field(default=8, ge=1)


class ForestSection(_Section):
    tree_count: int = Field(default=100, ge=1)
    subsample_size: int = Field(default=256, ge=2)
    contamination: float = Field(default=0.1, gt=0, lt=0.5)


class EvalSection(_Section):
    iterations: int = Field(default=10, ge=1)
    split_fraction: float = Field(default=0.8, gt=0, lt=1)


class RunConfig(_Section):
    """Everything a command needs, from one file and one global seed."""

    run: RunSection = Field(default_factory=RunSection)
    paths: PathsSection = Field(default_factory=PathsSection)
    scene: SceneSection = Field(default_factory=SceneSection)
    window: WindowSection = Field(default_factory=WindowSection)
    augment: AugmentSection = Field(default_factory=AugmentSection)
    abnormal: AbnormalSection = Field(default_factory=AbnormalSection)
    train: TrainSection = Field(default_factory=TrainSection)
    forest: ForestSection = Field(default_factory=ForestSection)
    eval: EvalSection = Field(default_factory=EvalSection)

    @property
    def seed(self) -> int:
        return self.run.seed

    def _with_run(self, **changes: Any) -> "RunConfig":
        # revalidated, a copy would skip the field checks
        return _validate({**self.model_dump(), "run": {**self.run.model_dump(), **changes}})

    def with_seed(self, seed: int) -> "RunConfig":
        return self._with_run(seed=seed)

    def with_method(self, method: str) -> "RunConfig":
        return self._with_run(method=method)

    def with_methods(self, methods: list[str]) -> "RunConfig":
        return self._with_run(methods=methods)

    def scene_config(self) -> SyntheticSceneConfig:
        return SyntheticSceneConfig(**self.scene.model_dump())

    def augment_config(self) -> AugmentConfig:
        return AugmentConfig(
            count_per_track=self.augment.count_per_track,
            position_noise_sigma=self.augment.position_noise_sigma,
            rng_seed=derive_seed(self.seed, STAGE_INGEST),
        )

    def train_config(self) -> TrainConfig:
        values = self.train.model_dump(exclude={"split_fraction", "vae_hidden"})
        return TrainConfig(**values, rng_seed=derive_seed(self.seed, STAGE_TRAIN))

    def forest_config(self) -> ForestConfig:
        return ForestConfig(**self.forest.model_dump())

    def evaluation_settings(self) -> EvaluationSettings:
        return EvaluationSettings(
            split_fraction=self.eval.split_fraction,
            train=self.train_config(),
            vae_hidden=self.train.vae_hidden,
            forest=self.forest_config(),
        )

    def to_ini(self) -> str:
        """Normalized text: every section and key, in declaration order."""
        lines: list[str] = []
        for section_name in type(self).model_fields:
            section = getattr(self, section_name)
            lines.append(f"[{section_name}]")
            for key in type(section).model_fields:
                lines.append(f"{key} = {_format_value(getattr(section, key))}")
            lines.append("")
        return "\n".join(lines)

    def digest(self) -> str:
        """SHA-256 of the normalized text."""
        return hashlib.sha256(self.to_ini().encode("utf-8")).hexdigest()


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, list):
        return ",".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _validate(data: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as error:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in item['loc'])}: {item['msg']}"
            for item in error.errors()
        )
        raise InvalidConfiguration(f"invalid run configuration: {problems}") from None


def parse_run_config(text: str) -> RunConfig:
    """Parse INI text; unknown sections or keys are errors, missing ones take defaults."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read_string(text)
    except configparser.Error as error:
        raise InvalidConfiguration(f"unreadable run configuration: {error}") from None

    known = set(RunConfig.model_fields)
    unknown = [name for name in parser.sections() if name not in known]
    if unknown:
        raise InvalidConfiguration(f"unknown section(s): {', '.join(unknown)}")
    return _validate({name: dict(parser.items(name)) for name in parser.sections()})


def load_run_config(path: str | Path | None = None, seed: int | None = None) -> RunConfig:
    """Read a config file (defaults when `path` is None) and apply a seed override."""
    if path is None:
        config = RunConfig()
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as error:
            raise InvalidConfiguration(f"cannot read {path}: {error.strerror}") from None
        config = parse_run_config(text)
    return config if seed is None else config.with_seed(seed)
