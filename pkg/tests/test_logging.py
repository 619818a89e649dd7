"""
Unit tests for the package logging setup.
"""

import logging
from pathlib import Path
from typing import Generator

import pytest

import isingnoise


@pytest.fixture
def clean_logger() -> Generator[logging.Logger, None, None]:
    logger = logging.getLogger("isingnoise")
    saved = list(logger.handlers)
    level = logger.level
    logger.handlers = []
    yield logger
    for handler in logger.handlers:
        handler.close()
    logger.handlers = saved
    logger.setLevel(level)


def test_setup_logging_adds_single_console_handler(clean_logger: logging.Logger) -> None:
    isingnoise.setup_logging(level=logging.DEBUG)
    isingnoise.setup_logging(level=logging.WARNING)
    stream = [h for h in clean_logger.handlers if isinstance(h, logging.StreamHandler) and not isinstance(h, logging.FileHandler)]
    assert len(stream) == 1
    assert stream[0].level == logging.WARNING
    assert clean_logger.level == logging.WARNING


def test_setup_logging_writes_file(clean_logger: logging.Logger, tmp_path: Path) -> None:
    log_file = tmp_path / "run.log"
    isingnoise.setup_logging(level=logging.INFO, log_file=str(log_file))
    isingnoise.setup_logging(level=logging.INFO, log_file=str(log_file))
    files = [h for h in clean_logger.handlers if isinstance(h, logging.FileHandler)]
    assert len(files) == 1
    logging.getLogger("isingnoise.noise").info("generated 3 records")
    files[0].flush()
    assert "generated 3 records" in log_file.read_text()


def test_version_is_exposed() -> None:
    assert isingnoise.__version__ == "0.1.0"
    assert "setup_logging" in isingnoise.__all__
