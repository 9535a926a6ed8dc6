"""Application layer for storing artifacts and loading inputs."""

from abc import ABC, abstractmethod
from pathlib import Path

__all__ = ["ArtifactSink", "ArtifactSource", "export_to", "load_from"]


class ArtifactSink(ABC):
    """Abstract base class for writing rendered artifacts."""

    @abstractmethod
    def export(self, content: str, path: Path) -> Path:
        """Write rendered content.

        Args:
            content: The rendered artifact.
            path: Where to write it.

        Returns:
            Path where the content was written.
        """


class ArtifactSource(ABC):
    """Abstract base class for reading instance, profile and trace files."""

    @abstractmethod
    def load(self, path: Path) -> str:
        """Read a text artifact.

        Args:
            path: Where to read from.

        Returns:
            The decoded text.
        """


def export_to(sink: ArtifactSink, path: Path, content: str) -> Path:
    """Write rendered content using the provided sink.

    Returns:
        Path where the content was written.
    """
    return sink.export(content, path)


def load_from(source: ArtifactSource, path: Path) -> str:
    """Read a text artifact using the provided source."""
    return source.load(path)
