from typing import get_args

import typer

from mfshe.domain.entities.model import ModelParams
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.infrastructure.config.loggers import LogHandler


def parse_log_handlers(values: list[str]) -> list[str]:
    for value in values:
        if value not in get_args(LogHandler):
            raise typer.BadParameter(f"Invalid handler: '{values}'. Allowed: {', '.join(get_args(LogHandler))}")

    return values


def parse_float_list(value: str) -> list[float]:
    try:
        values = [float(item) for item in value.split(",") if item.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"Expected comma-separated numbers, got '{value}'") from e

    if not values:
        raise typer.BadParameter("At least one number is required")
    return values


def parse_shape(value: str) -> tuple[int, ...]:
    try:
        shape = tuple(int(item) for item in value.split(","))
    except ValueError as e:
        raise typer.BadParameter(f"Expected comma-separated integers, got '{value}'") from e

    if any(n < 1 for n in shape):
        raise typer.BadParameter(f"Every axis needs at least one site, got '{value}'")
    return shape


def parse_model(alpha: float, beta: float, d: int, t: float) -> ModelParams:
    try:
        return ModelParams(alpha=alpha, beta=beta, d=d, t=t)
    except InvalidParametersError as e:
        raise typer.BadParameter(str(e)) from e
