"""MFSHE1 binary field dumps.

Layout, little-endian and unpadded: magic ``MFSHE1``, version u16, d u16, shape u64 x d,
spacing f64, origin f64 x d, alpha f64, beta f64, t f64, seed u64, scheme u8, then the values as
f64 in row-major order.
"""

import logging
from pathlib import Path
from typing import Final

import numpy as np

from mfshe.domain.entities.field import FieldSample
from mfshe.domain.entities.field import LatticeSpec
from mfshe.domain.entities.model import ModelParams
from mfshe.domain.exceptions import CorruptFileError
from mfshe.domain.types import SamplerScheme

logger = logging.getLogger(__name__)

MAGIC: Final[bytes] = b"MFSHE1"
VERSION: Final[int] = 1

SCHEME_CODES: Final[dict[SamplerScheme, int]] = {
    SamplerScheme.CIRCULANT_EXACT: 0,
    SamplerScheme.SPECTRAL_TORUS: 1,
    SamplerScheme.BLOCK_INDEPENDENT: 2,
    SamplerScheme.IID_SURROGATE: 3,
}
SCHEMES_BY_CODE: Final[dict[int, SamplerScheme]] = {code: scheme for scheme, code in SCHEME_CODES.items()}

PREFIX_DTYPE: Final[np.dtype] = np.dtype([("magic", "S6"), ("version", "<u2"), ("d", "<u2")])


def header_dtype(d: int) -> np.dtype:
    return np.dtype(
        [
            ("magic", "S6"),
            ("version", "<u2"),
            ("d", "<u2"),
            ("shape", "<u8", (d,)),
            ("spacing", "<f8"),
            ("origin", "<f8", (d,)),
            ("alpha", "<f8"),
            ("beta", "<f8"),
            ("t", "<f8"),
            ("seed", "<u8"),
            ("scheme", "u1"),
        ]
    )


def encode_field(sample: FieldSample) -> bytes:
    lattice, params = sample.lattice, sample.params
    header = np.zeros(1, dtype=header_dtype(lattice.d))
    header["magic"] = MAGIC
    header["version"] = VERSION
    header["d"] = lattice.d
    header["shape"] = lattice.shape
    header["spacing"] = lattice.spacing
    header["origin"] = lattice.origin
    header["alpha"] = params.alpha
    header["beta"] = params.beta
    header["t"] = params.t
    header["seed"] = sample.seed
    header["scheme"] = SCHEME_CODES[sample.scheme]
    return header.tobytes() + np.ascontiguousarray(sample.values, dtype="<f8").tobytes()


def decode_field(data: bytes) -> FieldSample:
    if len(data) < PREFIX_DTYPE.itemsize:
        raise CorruptFileError("field dump shorter than its header")
    prefix = np.frombuffer(data, dtype=PREFIX_DTYPE, count=1)[0]
    if prefix["magic"] != MAGIC:
        raise CorruptFileError(f"not an MFSHE1 field dump (magic {prefix['magic']!r})")
    if prefix["version"] != VERSION:
        raise CorruptFileError(f"unsupported field dump version {prefix['version']}")

    d = int(prefix["d"])
    dtype = header_dtype(d)
    if len(data) < dtype.itemsize:
        raise CorruptFileError("field dump shorter than its header")
    header = np.frombuffer(data, dtype=dtype, count=1)[0]
    shape = tuple(int(n) for n in header["shape"])
    values = np.frombuffer(data, dtype="<f8", offset=dtype.itemsize)
    if values.size != int(np.prod(shape)):
        raise CorruptFileError(f"expected {int(np.prod(shape))} values for shape {shape}, found {values.size}")

    code = int(header["scheme"])
    if code not in SCHEMES_BY_CODE:
        raise CorruptFileError(f"unknown sampler scheme code {code}")

    lattice = LatticeSpec(
        d=d,
        origin=tuple(float(x) for x in header["origin"]),
        spacing=float(header["spacing"]),
        shape=shape,
    )
    params = ModelParams(alpha=float(header["alpha"]), beta=float(header["beta"]), d=d, t=float(header["t"]))
    return FieldSample(
        lattice=lattice,
        values=values.astype(np.float64),
        params=params,
        seed=int(header["seed"]),
        scheme=SCHEMES_BY_CODE[code],
    )


def write_field(path: Path, sample: FieldSample) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_field(sample))
    logger.debug("Field dump written", extra={"path": str(path), "sites": sample.lattice.size})


def read_field(path: Path) -> FieldSample:
    return decode_field(path.read_bytes())
