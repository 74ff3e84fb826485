"""Revblocks package composition.

- :term:`core`: blocks, segment metadata, configuration and errors

- ingest: streaming reader of revision-history XML dumps

- store: warehouse files and their metadata sidecars

- pipeline: the building and modifying processes (worker pools)

- profiles: built-in modifier profiles

- download: dump downloader

- shared: common tools

"""

# keep this at the top (simpler .bumpversion.cfg)
# and do not modify directly; use
# bump2version minor
# https://github.com/c4urself/bump2version
__version__ = "0.3"


import logging
import os

from revblocks.shared.logs import JsonFormatter

#: environment variable holding the log level name (DEBUG, INFO, ...)
LOG_LEVEL_ENV = "REVBLOCKS_LOG_LEVEL"

logger = logging.getLogger(__name__)   # noqa: E402
# this the toplevel file, hence the toplevel logger
# one JSON object per line, on stderr
logger_handler = logging.StreamHandler()
logger_handler.setFormatter(JsonFormatter())
logger.addHandler(logger_handler)
del logger_handler


def configure_logging(default="INFO"):
	"""Set the package log level.

	The ``REVBLOCKS_LOG_LEVEL`` environment variable wins over `default`.

	Args:
		default (str): level name used when the environment is silent

	"""
	level = os.environ.get(LOG_LEVEL_ENV, default).upper()
	try:
		logger.setLevel(level)
	except ValueError:
		logger.setLevel(logging.INFO)
		logger.warning("unknown log level {!r}, using INFO".format(level))


# library users get warnings only, unless the environment says otherwise;
# the command line raises this to INFO
configure_logging(default="WARNING")
