import tomllib
from pathlib import Path

PYPROJECT = Path(__file__).parents[2] / "pyproject.toml"


class TestPyproject:
    def test__coverage_threshold(self) -> None:
        report = tomllib.loads(PYPROJECT.read_text())["tool"]["coverage"]["report"]

        assert report["fail_under"] >= 80
