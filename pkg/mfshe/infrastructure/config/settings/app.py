from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings
from pydantic_settings import SettingsConfigDict

from mfshe import BASE_DIR
from mfshe.infrastructure.config.loggers import LogHandler
from mfshe.infrastructure.config.loggers import LogLevel


class AppSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="MFSHE_",
        env_file=[BASE_DIR / ".env"],
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    # Overrides the master seed of every experiment config when set.
    SEED: int | None = Field(default=None, ge=0)
    WORKERS: int = Field(default=4, ge=1)

    OUTPUT_DIR: Path = BASE_DIR / "runs"

    LOG_LEVEL_CLI: LogLevel = "WARNING"
    LOG_HANDLERS_CLI: list[LogHandler] = ["cli", "cli_alert"]


app_settings = AppSettings()
