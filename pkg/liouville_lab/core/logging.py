# core/logging.py
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import structlog
from pythonjsonlogger import jsonlogger

logger = structlog.get_logger()


class CustomJsonFormatter(jsonlogger.JsonFormatter):
    def add_fields(
        self,
        log_record: dict[str, Any],
        record: logging.LogRecord,
        message_dict: dict[str, Any],
    ) -> None:
        super().add_fields(log_record, record, message_dict)
        log_record["timestamp"] = datetime.now(timezone.utc).isoformat()
        log_record["level"] = record.levelname
        log_record["logger"] = record.name


def setup_logging(
    level: str = "INFO", json_path: Optional[str] = None, console: bool = True
) -> None:
    """Route structlog events through stdlib logging.

    Console output is human readable; when ``json_path`` is set every event
    is also appended to that file as one JSON object per line.
    """
    root = logging.getLogger("liouville_lab")
    root.setLevel(level.upper())
    root.handlers.clear()
    root.propagate = False

    if console:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(
            logging.Formatter("[%(asctime)s] %(levelname)s [%(name)s] %(message)s")
        )
        root.addHandler(console_handler)

    if json_path:
        Path(json_path).parent.mkdir(parents=True, exist_ok=True)
        json_handler = logging.FileHandler(json_path)
        json_handler.setFormatter(
            CustomJsonFormatter(
                "%(timestamp)s %(level)s %(name)s %(message)s", json_ensure_ascii=False
            )
        )
        root.addHandler(json_handler)

    structlog.configure(
        processors=[
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.JSONRenderer(sort_keys=True),
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )


def log_error(error: Exception, context: Optional[dict[str, Any]] = None):
    logger.error(
        "error_occurred",
        error_type=type(error).__name__,
        error_message=str(error),
        **context or {},
    )


def log_experiment(kind: str, **kwargs):
    logger.info("experiment", kind=kind, **kwargs)


def log_mc_diagnostic(name: str, **kwargs):
    logger.info("mc_diagnostic", check=name, **kwargs)


def log_any(message: str, **kwargs):
    logger.info(message, **kwargs)
