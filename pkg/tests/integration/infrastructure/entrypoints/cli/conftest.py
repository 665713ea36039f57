from collections.abc import Iterable
from unittest import mock

import pytest
from typer.testing import CliRunner


@pytest.fixture(autouse=True)
def block_cli_configure_loggers() -> Iterable[mock.Mock]:
    with mock.patch("mfshe.infrastructure.entrypoints.cli.main.configure_loggers") as patched:
        yield patched


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()
