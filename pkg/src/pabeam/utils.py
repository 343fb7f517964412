"""Utility functions for logging setup and atomic file output.

Provides the shared ``pabeam`` logger (file + console handlers per run) and
helpers that write files through a temporary sibling followed by a rename, so
readers never observe a partially written output.
"""

import logging
import os
import tempfile
from pathlib import Path

from pabeam.exceptions import FileError

LOGGER_NAME = "pabeam"


def setup_logger(
    run_name: str, logging_level: str, export_path: Path = Path("results")
) -> logging.Logger:
    """Configure logger with file and console handlers for a run.

    Creates a log file alongside the run's outputs and attaches both
    file (detailed) and console (INFO+) handlers.

    Args:
        run_name: Base name of the log file
        logging_level: Log level string (e.g., 'DEBUG', 'INFO')
        export_path: Directory for the log file (default: results/)

    Returns:
        Configured logger instance named 'pabeam'
    """
    export_path.mkdir(parents=True, exist_ok=True)
    log_file_path = export_path / f"{run_name}.log"
    logging_format = "%(asctime)s %(levelname)s %(name)s - %(message)s"

    logger = logging.getLogger(LOGGER_NAME)
    reset_logger()
    logger.setLevel(logging_level)

    formatter = logging.Formatter(logging_format)
    file_handler = logging.FileHandler(log_file_path, mode="w")
    file_handler.setFormatter(formatter)
    file_handler.setLevel(logging_level)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(formatter)

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)

    return logger


def get_logger() -> logging.Logger:
    """Get the shared toolkit logger.

    Returns:
        Logger instance named 'pabeam'
    """
    return logging.getLogger(LOGGER_NAME)


def reset_logger():
    """Remove and close all handlers from the toolkit logger.

    Used to clean up logging configuration between runs.
    """
    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.propagate = False


def _current_umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def atomic_write_bytes(path: Path, payload: bytes) -> Path:
    """Write bytes to a temporary sibling file, then rename it into place.

    Args:
        path: Destination file
        payload: File content

    Returns:
        The destination path

    Raises:
        FileError: If the directory cannot be created or written
    """
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        descriptor, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(descriptor, "wb") as handle:
                handle.write(payload)
            # mkstemp creates 0600; give the file the mode a plain open would
            os.chmod(temp_name, 0o666 & ~_current_umask())
            os.replace(temp_name, path)
        except BaseException:
            Path(temp_name).unlink(missing_ok=True)
            raise
    except OSError as e:
        raise FileError(f"Failed to write {path}: {e}") from e
    return path


def atomic_write_text(path: Path, text: str) -> Path:
    """Write UTF-8 text atomically (see ``atomic_write_bytes``)."""
    return atomic_write_bytes(path, text.encode("utf-8"))
