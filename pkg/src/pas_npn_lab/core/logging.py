import logging
import sys
import os
from pas_npn_lab.core.config import runtime_config


def setup_logging(level: str | None = None) -> logging.Logger:
    """Configure logging for the entire application"""
    level = (level or runtime_config.log_level).upper()
    os.makedirs(runtime_config.log_dir, exist_ok=True)

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    # file keeps DEBUG detail of long sweeps; the console follows the configured level
    file_handler = logging.FileHandler(runtime_config.log_file)
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)
    root_logger.addHandler(file_handler)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    logging.getLogger("asyncio").setLevel(logging.WARNING)

    return root_logger
