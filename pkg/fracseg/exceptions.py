# fracseg/exceptions.py
import logging

import typer

logger = logging.getLogger(__name__)


class FracsegError(Exception):
    """
    Base exception for every error raised by fracseg.
    """
    def __init__(self, message="fracseg operation failed", detail=None):
        super().__init__(message)
        self.message = message
        self.detail = detail if detail is not None else message # Ensure detail is not None


class GridIOError(FracsegError):
    """Raised when a grid artifact cannot be read or written; carries the path."""
    def __init__(self, message="Grid I/O failed", path=None):
        super().__init__(message, detail=str(path) if path is not None else None)
        self.path = path


class GridFormatError(FracsegError):
    """Raised for bad magic bytes, malformed PGM headers or unsupported file formats."""
    def __init__(self, message="Malformed grid file", path=None):
        super().__init__(message, detail=str(path) if path is not None else None)
        self.path = path


class TruncatedPayloadError(GridFormatError):
    """Raised when a file header promises more values than the payload holds."""
    def __init__(self, message="Truncated payload", path=None):
        super().__init__(message, path=path)


class NonFiniteError(FracsegError):
    """Raised when NaN or Inf values cross a public API boundary."""
    def __init__(self, message="Non-finite values in field"):
        super().__init__(message)


class UnsupportedError(FracsegError):
    """Raised for inputs outside the supported domain (Q > 256, colour images)."""
    def __init__(self, message="Unsupported input"):
        super().__init__(message)


class GeometryError(FracsegError):
    """Raised when mask geometry does not lie within the grid."""
    def __init__(self, message="Geometry outside grid"):
        super().__init__(message)


class ParameterError(FracsegError, ValueError):
    """Raised for invalid numerical parameters (h outside (0,1), sigma <= 0, j2 <= j1, ...)."""
    def __init__(self, message="Invalid parameter"):
        super().__init__(message)


class ShapeMismatchError(FracsegError, ValueError):
    """Raised when grids, stacks or masks that must agree in shape do not."""
    def __init__(self, message="Shape mismatch"):
        super().__init__(message)


class DivergenceError(FracsegError):
    """Raised when a primal-dual iteration blows up; names the step sizes used."""
    def __init__(self, message="Solver diverged", tau=None, sigma=None):
        super().__init__(message, detail=f"tau={tau}, sigma={sigma}")
        self.tau = tau
        self.sigma = sigma


class SegmentationError(FracsegError):
    """Raised when a segmentation run fails for a reason not covered above."""
    def __init__(self, message="Segmentation failed"):
        super().__init__(message)


# 退出码映射，CLI 层使用 (most specific class first)
EXIT_CODE_MAP = [
    (TruncatedPayloadError, 65),
    (GridFormatError, 65),
    (NonFiniteError, 65),
    (GridIOError, 74),
    (UnsupportedError, 69),
    (ParameterError, 64),
    (ShapeMismatchError, 64),
    (GeometryError, 64),
    (DivergenceError, 70),
    (FracsegError, 1),
]


def exit_code_for(exc: Exception) -> int:
    for exc_type, code in EXIT_CODE_MAP:
        if isinstance(exc, exc_type):
            return code
    return 1


def fracseg_exception_handler(exc: FracsegError) -> None:
    # 捕获所有 fracseg 异常，记录日志后以对应退出码结束
    code = exit_code_for(exc)
    logger.error(f"{type(exc).__name__}: {exc.message} ({exc.detail})")
    typer.echo(f"error: {exc.message}", err=True)
    raise typer.Exit(code=code)


def generic_exception_handler(exc: Exception) -> None:
    # 捕获所有未被其他特定处理器捕获的通用异常
    logger.error(f"Unhandled exception: {type(exc).__name__} - {exc}", exc_info=True)
    typer.echo("error: internal failure, see log for details", err=True)
    raise typer.Exit(code=1)


def handle_exception(exc: Exception) -> None:
    """Dispatches an exception caught at the CLI boundary to its handler."""
    if isinstance(exc, FracsegError):
        fracseg_exception_handler(exc)
    generic_exception_handler(exc)
