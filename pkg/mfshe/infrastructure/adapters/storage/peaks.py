"""MFPEAKS text files.

A header line ``MFPEAKS v1 d=<d> gauge=<tag> gamma=<g> source=<s>`` is followed by one point per
line: its d integer coordinates, then its shell index.
"""

from pathlib import Path
from typing import Final

import numpy as np

from mfshe.domain.entities.fractal import PeakSet
from mfshe.domain.exceptions import CorruptFileError
from mfshe.domain.exceptions import InvalidParametersError
from mfshe.domain.types import GaugeKind

MAGIC: Final[str] = "MFPEAKS"
VERSION: Final[str] = "v1"
NONE: Final[str] = "none"


def dumps_peaks(peaks: PeakSet) -> str:
    gauge = str(peaks.gauge) if peaks.gauge is not None else NONE
    gamma = repr(float(peaks.gamma)) if peaks.gamma is not None else NONE
    source = peaks.source.replace(" ", "_") or NONE
    lines = [f"{MAGIC} {VERSION} d={peaks.d} gauge={gauge} gamma={gamma} source={source}"]
    lines += [
        " ".join(str(int(c)) for c in point) + f" {int(shell)}"
        for point, shell in zip(peaks.points, peaks.shells, strict=True)
    ]
    return "\n".join(lines) + "\n"


def loads_peaks(text: str) -> PeakSet:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise CorruptFileError("empty peaks file")
    magic, version, *pairs = lines[0].split()
    if magic != MAGIC or version != VERSION:
        raise CorruptFileError(f"not an {MAGIC} {VERSION} file: {lines[0]!r}")
    header = dict(pair.partition("=")[::2] for pair in pairs)
    try:
        d = int(header["d"])
        gauge = GaugeKind(header["gauge"]) if header.get("gauge", NONE) != NONE else None
        gamma = float(header["gamma"]) if header.get("gamma", NONE) != NONE else None
    except (KeyError, ValueError) as e:
        raise CorruptFileError(f"bad {MAGIC} header: {lines[0]!r}") from e
    source = header.get("source", NONE)

    try:
        rows = np.array([[int(token) for token in line.split()] for line in lines[1:]], dtype=np.int64)
    except ValueError as e:
        raise CorruptFileError("peak lines must hold integers only") from e
    rows = rows.reshape(-1, d + 1)
    try:
        return PeakSet(
            d=d,
            points=rows[:, :d],
            shells=rows[:, d],
            gauge=gauge,
            gamma=gamma,
            source="" if source == NONE else source,
        )
    except InvalidParametersError as e:
        raise CorruptFileError(str(e)) from e


def write_peaks(path: Path, peaks: PeakSet) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_peaks(peaks), encoding="utf-8")


def read_peaks(path: Path) -> PeakSet:
    return loads_peaks(path.read_text(encoding="utf-8"))
