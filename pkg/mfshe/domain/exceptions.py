class InvalidParametersError(ValueError): ...


class SingularInputError(ValueError): ...


class QuadratureNonConvergenceError(ArithmeticError):
    def __init__(self, msg: str, abserr: float | None = None) -> None:
        self.abserr = abserr
        super().__init__(msg)


class EmbeddingFailureError(Exception): ...


class BlowupError(ArithmeticError): ...


class GeometryError(ValueError): ...


class ShellMembershipError(ValueError): ...


class InsufficientShellsError(Exception): ...


class CensoringError(Exception): ...


class SpacingError(ValueError): ...


class ConfigFileError(Exception): ...


class RunNotFoundError(Exception): ...


class VarianceExplosionWarning(RuntimeWarning): ...


class CorruptFileError(ValueError): ...
