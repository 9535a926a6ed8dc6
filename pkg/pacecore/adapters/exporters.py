"""File adapters for writing artifacts and reading inputs."""

import logging
from pathlib import Path

from pacecore.application.export import ArtifactSink, ArtifactSource

__all__ = ["FileExporter", "FileLoader", "FileSizeLimitExceededError", "PathTraversalError"]

logger = logging.getLogger(__name__)

DEFAULT_MAX_FILE_SIZE_BYTES = 1024 * 1024 * 1024


class PathTraversalError(ValueError):
    """Raised when a path attempts to escape the allowed base directory."""

    def __init__(self, attempted_path: Path, allowed_base: Path) -> None:
        """Initialize the error with path details.

        Args:
            attempted_path: The path that was rejected.
            allowed_base: The base directory that paths must be within.
        """
        super().__init__(f"Path '{attempted_path}' is outside the output directory '{allowed_base}'")
        self.attempted_path = attempted_path
        self.allowed_base = allowed_base


class FileSizeLimitExceededError(ValueError):
    """Raised when an artifact to write or read exceeds the size limit."""

    def __init__(self, path: Path, content_size: int, max_size: int) -> None:
        """Initialize the error with size details.

        Args:
            path: The file concerned.
            content_size: Size of the content in bytes.
            max_size: Largest allowed size in bytes.
        """
        super().__init__(f"'{path}' holds {content_size:,} bytes, more than the {max_size:,} byte limit")
        self.path = path
        self.content_size = content_size
        self.max_size = max_size


class FileExporter(ArtifactSink):
    """Writes artifacts below one output directory.

    Paths must resolve inside ``allowed_base_dir``, content is size-limited,
    missing parent directories are created and every write goes through a
    temporary file that replaces the target, so readers never see a partial
    trace.
    """

    def __init__(self, allowed_base_dir: Path, max_file_size_bytes: int = DEFAULT_MAX_FILE_SIZE_BYTES) -> None:
        """Initialize the exporter.

        Args:
            allowed_base_dir: Directory every artifact must be written into.
            max_file_size_bytes: Largest artifact in bytes; traces of 10⁶ rounds fit in the default.
        """
        self.allowed_base_dir = allowed_base_dir.resolve()
        self.max_file_size_bytes = max_file_size_bytes

    def export(self, content: str, path: Path) -> Path:
        """Write content atomically.

        Returns:
            The absolute path written.

        Raises:
            PathTraversalError: If the path escapes the output directory.
            FileSizeLimitExceededError: If the content exceeds the size limit.
            OSError: If the file system rejects the write.
        """
        content_bytes = content.encode("utf-8")
        absolute_path = path.resolve()
        if len(content_bytes) > self.max_file_size_bytes:
            logger.warning("Refusing to write %d bytes to %s", len(content_bytes), absolute_path)
            raise FileSizeLimitExceededError(absolute_path, len(content_bytes), self.max_file_size_bytes)
        if not absolute_path.is_relative_to(self.allowed_base_dir):
            logger.warning("Path traversal attempt blocked: %s outside %s", absolute_path, self.allowed_base_dir)
            raise PathTraversalError(absolute_path, self.allowed_base_dir)

        absolute_path.parent.mkdir(parents=True, exist_ok=True)
        temp_path = absolute_path.with_suffix(absolute_path.suffix + ".tmp")
        try:
            temp_path.write_bytes(content_bytes)
            temp_path.replace(absolute_path)
        except OSError:
            logger.exception("Failed to write %s", absolute_path)
            temp_path.unlink(missing_ok=True)
            raise
        logger.info("Wrote %d bytes to %s", len(content_bytes), absolute_path)
        return absolute_path


class FileLoader(ArtifactSource):
    """Reads UTF-8 input files up to a size limit."""

    def __init__(self, max_file_size_bytes: int = DEFAULT_MAX_FILE_SIZE_BYTES) -> None:
        """Initialize the loader with its size limit."""
        self.max_file_size_bytes = max_file_size_bytes

    def load(self, path: Path) -> str:
        """Read a file.

        Raises:
            FileNotFoundError: If the file does not exist.
            FileSizeLimitExceededError: If the file exceeds the size limit.
        """
        absolute_path = path.resolve()
        size = absolute_path.stat().st_size
        if size > self.max_file_size_bytes:
            logger.warning("Refusing to read %d bytes from %s", size, absolute_path)
            raise FileSizeLimitExceededError(absolute_path, size, self.max_file_size_bytes)
        logger.debug("Reading %d bytes from %s", size, absolute_path)
        return absolute_path.read_text(encoding="utf-8")
