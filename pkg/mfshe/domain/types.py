from enum import StrEnum


class SamplerScheme(StrEnum):
    """Lattice samplers of the stationary linear solution."""

    CIRCULANT_EXACT = "circulant-exact"
    SPECTRAL_TORUS = "spectral-torus"
    BLOCK_INDEPENDENT = "block-independent"
    IID_SURROGATE = "iid-surrogate"


class CoverScheme(StrEnum):
    UNIT_LATTICE = "unit-lattice"
    GREEDY_DYADIC = "greedy-dyadic"


class GaugeKind(StrEnum):
    LINEAR_SHE = "linear-she"
    PAM = "pam"


class NoiseModel(StrEnum):
    """How the coloured noise increment is built from the white noise cells."""

    SPECTRAL = "spectral"
    FACTOR = "factor"


class ItoIncrement(StrEnum):
    EXPONENTIAL = "exponential"
    LINEAR = "linear"


class ExperimentKind(StrEnum):
    LINEAR_DIMENSION = "linear-dimension"
    LINEAR_LIMSUP = "linear-limsup"
    PAM_DIMENSION = "pam-dimension"
    VALIDATION = "validation"


class KernelFunction(StrEnum):
    LEVY = "levy"
    DENSITY = "density"
    RIESZ = "riesz"
    SPECTRAL = "spectral"
    COVARIANCE = "covariance"
    FACTOR = "factor"
