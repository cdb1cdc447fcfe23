# fracseg/main.py
import logging
import os
from logging.config import dictConfig
from typing import Optional

import orjson
import typer

from fracseg.config import settings
from fracseg.routers import bench, estimate, leaders, segment, sweep, synth

try:
    import rich.logging
except ImportError:
    rich = None # plain stream handler below

LOGGING_CONFIG = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "default": {
            "format": "%(message)s" if rich else "%(levelname)s %(asctime)s | %(name)s | %(message)s",
            "datefmt": "%Y-%m-%d %H:%M:%S",
        },
    },
    "handlers": {
        "default": {
            "formatter": "default",
            "class": "rich.logging.RichHandler" if rich else "logging.StreamHandler",
            **({"rich_tracebacks": True, "show_path": False} if rich else {"stream": "ext://sys.stderr"}),
        },
    },
    "loggers": {
        "": {
            "handlers": ["default"],
            "level": "INFO",
            "propagate": False,
        },
        "fracseg": { # package logger: solvers, services, I/O
            "handlers": ["default"],
            "level": "DEBUG",
            "propagate": False,
        },
    },
}

logger = logging.getLogger(__name__)


def configure_logging(level: Optional[str] = None) -> None:
    """
    Applies LOGGING_CONFIG, or the JSON file named by LOG_CONFIG_FILE when it
    exists, then sets both loggers to ``level`` (defaults to LOG_LEVEL).
    """
    config = LOGGING_CONFIG
    path = settings.LOG_CONFIG_FILE
    if path and os.path.isfile(path):
        try:
            with open(path, "rb") as fh:
                config = orjson.loads(fh.read())
        except (OSError, orjson.JSONDecodeError) as e:
            logging.getLogger(__name__).warning(f"ignoring logging config {path}: {e}")
    dictConfig(config)
    level = (level or settings.LOG_LEVEL).upper()
    logging.getLogger().setLevel(level)
    logging.getLogger("fracseg").setLevel(level)


app = typer.Typer(
    name="fracseg",
    help="Segmentation of scale-free textures by local regularity (wavelet leaders + total variation).",
    no_args_is_help=True,
    add_completion=False,
)


@app.callback()
def main(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING, ERROR"),
):
    configure_logging(log_level)
    logger.debug(f"fracseg starting, settings: {settings.model_dump()}")


# 注册命令模块
for module in (synth, leaders, estimate, segment, bench, sweep):
    app.registered_commands.extend(module.router.registered_commands)


def run() -> None:
    app()


if __name__ == "__main__":
    run()
