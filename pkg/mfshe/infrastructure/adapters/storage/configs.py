import tomllib
from pathlib import Path

import tomli_w

from mfshe.domain.exceptions import ConfigFileError
from mfshe.domain.schemas.experiment import ExperimentConfig


def loads_config(text: str) -> ExperimentConfig:
    """Parses a TOML experiment config.

    Raises:
        ConfigFileError: The text is not valid TOML.
        pydantic.ValidationError: The document does not describe a valid experiment.
    """
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigFileError(f"invalid TOML: {e}") from e
    return ExperimentConfig.model_validate(document)


def dumps_config(config: ExperimentConfig) -> str:
    return tomli_w.dumps(config.model_dump(mode="json", exclude_none=True))


def read_config(path: Path) -> ExperimentConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigFileError(f"cannot read {path}: {e.strerror}") from e
    return loads_config(text)
