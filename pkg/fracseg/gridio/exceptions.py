import struct

from fracseg.exceptions import FracsegError, GridFormatError, GridIOError, TruncatedPayloadError


def map_io_exception(e: Exception, path=None):
    """
    将底层 I/O 或解码异常映射为 fracseg 异常。
    Already-mapped fracseg errors are returned unchanged.
    """
    if isinstance(e, FracsegError):
        return e
    if isinstance(e, FileNotFoundError):
        return GridIOError(f"file not found: {path}", path=path)
    if isinstance(e, PermissionError):
        return GridIOError(f"permission denied: {path}", path=path)
    if isinstance(e, OSError):
        return GridIOError(f"I/O failure on {path}: {e}", path=path)
    if isinstance(e, struct.error):
        return TruncatedPayloadError(f"truncated header in {path}: {e}", path=path)
    if isinstance(e, (ValueError, UnicodeDecodeError)):
        return GridFormatError(f"malformed file {path}: {e}", path=path)
    return GridIOError(f"unexpected error on {path}: {e}", path=path)
