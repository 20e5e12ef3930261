import logging

from pas_npn_lab.core.config import runtime_config
from pas_npn_lab.core.logging import setup_logging


def test_setup_logging_writes_to_runtime_log_file(runtime_dirs):
    root_logger = setup_logging("debug")
    logging.getLogger("pas_npn_lab.test").info("sweep started")
    for handler in root_logger.handlers:
        handler.flush()

    expected_level = logging.DEBUG
    assert root_logger.level == expected_level
    assert len(root_logger.handlers) == 2
    with open(runtime_config.log_file) as f:
        assert "pas_npn_lab.test - INFO - sweep started" in f.read()


def test_setup_logging_replaces_previous_handlers(runtime_dirs):
    setup_logging()
    root_logger = setup_logging()

    expected_handlers = 2
    assert len(root_logger.handlers) == expected_handlers


def test_log_file_keeps_debug_below_console_level(runtime_dirs):
    root_logger = setup_logging("warning")
    logging.getLogger("pas_npn_lab.test").debug("trellis built")
    for handler in root_logger.handlers:
        handler.flush()

    expected_console_level = logging.WARNING
    console = next(h for h in root_logger.handlers if not isinstance(h, logging.FileHandler))
    assert console.level == expected_console_level
    with open(runtime_config.log_file) as f:
        assert "pas_npn_lab.test - DEBUG - trellis built" in f.read()
