import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from config import BASE_DIR, LOG_CONFIG


def setup_logging(
    log_level: str = "INFO",
    log_to_file: bool = True,
    log_dir: Optional[Path] = None,
) -> logging.Logger:
    level = getattr(logging, log_level.upper())
    logger = logging.getLogger()
    logger.setLevel(level)

    if logger.handlers:
        logger.handlers.clear()

    formatter = logging.Formatter(LOG_CONFIG["format"])

    # stdout carries result data when no --out is given
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_to_file:
        target_dir = Path(log_dir) if log_dir else BASE_DIR / LOG_CONFIG["dir_name"]
        target_dir.mkdir(parents=True, exist_ok=True)

        log_filename = f"{LOG_CONFIG['file_prefix']}_{datetime.now().strftime('%Y%m%d')}.log"
        file_handler = logging.FileHandler(target_dir / log_filename)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def log_run_settings(logger: logging.Logger, command: str, settings: Dict[str, Any]) -> None:
    """One INFO line per run so log files can be matched to result files."""
    rendered = ", ".join(f"{key}={value}" for key, value in settings.items())
    logger.info(f"{command}: {rendered}")
