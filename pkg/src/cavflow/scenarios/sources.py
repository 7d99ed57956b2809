from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional

import structlog
from pydantic import ValidationError

from cavflow.exceptions import SpecValidationError
from cavflow.models.game import DynamicsKind, GameSpec
from cavflow.models.scenario import ObstacleSize, ScenarioName, ScenarioPreset
from cavflow.scenarios.presets import default_train_config, resolve_preset

_log = structlog.get_logger(__name__)


class ScenarioSource(ABC):
    """Abstract base class for places presets are resolved from."""

    @abstractmethod
    def names(self) -> list[str]:
        """Presets this source can resolve."""

    @abstractmethod
    def get(
            self,
            name: str,
            beta: Optional[float] = None,
            obstacle: Optional[ObstacleSize] = None,
            model: Optional[DynamicsKind] = None,
    ) -> ScenarioPreset:
        """Resolve one preset, applying scenario overrides."""


class BuiltinScenarios(ScenarioSource):
    def names(self) -> list[str]:
        return [n.value for n in ScenarioName if n != ScenarioName.CUSTOM]

    def get(
            self,
            name: str,
            beta: Optional[float] = None,
            obstacle: Optional[ObstacleSize] = None,
            model: Optional[DynamicsKind] = None,
    ) -> ScenarioPreset:
        try:
            scenario = ScenarioName(name)
        except ValueError as e:
            raise SpecValidationError(f"Unknown preset '{name}'; choose from {self.names()}") from e
        try:
            return resolve_preset(scenario, beta, obstacle, model)
        except ValueError as e:
            raise SpecValidationError(str(e)) from e


class FileScenarios(ScenarioSource):
    """Presets stored as JSON files `<name>.json` in a directory."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)

    def names(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.json"))

    def get(
            self,
            name: str,
            beta: Optional[float] = None,
            obstacle: Optional[ObstacleSize] = None,
            model: Optional[DynamicsKind] = None,
    ) -> ScenarioPreset:
        path = Path(name)
        if not path.suffix:
            if name not in self.names():
                raise SpecValidationError(
                    f"Unknown preset '{name}'; choose from "
                    f"{BuiltinScenarios().names() + self.names()}"
                )
            path = self.directory / f"{name}.json"
        preset = load_preset(path)
        if beta is not None or obstacle is not None or model is not None:
            # Overrides re-resolve the scenario and keep the file's training setup.
            rebuilt = BuiltinScenarios().get(
                preset.name.value,
                beta if beta is not None else preset.beta,
                obstacle or preset.obstacle,
                model or preset.model,
            )
            preset = rebuilt.model_copy(update={"arch": preset.arch, "train": preset.train})
        return preset


def load_preset(path: Path) -> ScenarioPreset:
    """A preset file, or a bare GameSpec file wrapped with default training settings."""
    payload = Path(path).read_text()
    try:
        return ScenarioPreset.model_validate_json(payload)
    except ValidationError as preset_error:
        try:
            spec = GameSpec.from_json(payload)
        except ValidationError:
            raise SpecValidationError(
                f"{path} is neither a preset nor a game: {preset_error}"
            ) from preset_error
    _log.info("game_file_wrapped", path=str(path))
    return wrap_game(spec)


def wrap_game(spec: GameSpec) -> ScenarioPreset:
    return ScenarioPreset(
        name=ScenarioName.CUSTOM,
        model=spec.dynamics.kind,
        spec=spec,
        train=default_train_config(spec),
    )


def save_preset(preset: ScenarioPreset, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(preset.model_dump_json(by_alias=True, indent=2))
    return path
