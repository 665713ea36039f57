import logging.config
from copy import deepcopy
from typing import Any
from typing import Final
from typing import Literal

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
# Names of the handlers of default_conf.
LogHandler = Literal["console", "cli", "cli_alert", "rich", "null"]

LOGGER_MFSHE: Final[str] = "mfshe"
LOGGER_WARNINGS: Final[str] = "py.warnings"


def _stderr(formatter: str, level: LogLevel = "DEBUG") -> dict[str, str]:
    # stdout is reserved for command results (CSV rows, tables).
    return {
        "class": "logging.StreamHandler",
        "level": level,
        "formatter": formatter,
        "stream": "ext://sys.stderr",
    }


def _quiet(level: LogLevel) -> dict[str, Any]:
    return {"level": level, "handlers": ["console"], "propagate": False}


default_conf: Final[dict[str, Any]] = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "default": {
            "format": "%(asctime)s %(levelname)-8s %(processName)s %(name)s: %(message)s",
            "datefmt": "%H:%M:%S",
        },
        "message": {"format": "%(message)s"},
        "rich": {"format": "%(message)s", "datefmt": "[%X]"},
    },
    "handlers": {
        "console": _stderr("default"),
        "cli": _stderr("message"),
        "cli_alert": _stderr("default", level="WARNING"),
        "rich": {
            "class": "rich.logging.RichHandler",
            "formatter": "rich",
            "level": "NOTSET",
            "markup": False,
            "rich_tracebacks": True,
            "show_path": False,
        },
        "null": {"class": "logging.NullHandler"},
    },
    "loggers": {
        LOGGER_MFSHE: _quiet("INFO"),
        # Overflow and variance warnings raised by numpy end up here.
        LOGGER_WARNINGS: _quiet("WARNING"),
    },
    "root": {"level": "WARNING", "handlers": ["console"]},
}


def configure_loggers(level: LogLevel, handlers: list[LogHandler], propagate: bool = False) -> None:
    """Sets the mfshe logger to ``level`` and routes every configured logger to ``handlers``.

    Python warnings are captured so they go to the same output as the log records.
    """
    conf = deepcopy(default_conf)

    mfshe_conf = conf["loggers"][LOGGER_MFSHE]
    mfshe_conf["level"] = level
    mfshe_conf["propagate"] = propagate

    for logger_conf in [*conf["loggers"].values(), conf["root"]]:
        logger_conf["handlers"] = list(handlers)

    logging.config.dictConfig(conf)
    logging.captureWarnings(True)
