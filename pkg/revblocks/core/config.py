# -*- coding: utf-8 -*-

# Copyright (C) 2024 revblocks contributors
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with revblocks; see the file LICENSE.txt.  If not, see
# <http://www.gnu.org/licenses/>.


"""Run configurations.

Configurations are plain value objects.
Like every persisted object of the package, they expose a ``config``
dictionary and a ``from_config`` alternate constructor,
so that they can be stored in YAML files and in dataset manifests.

>>> cfg = BuildConfig(output_dir='./warehouses', num_workers=8)
>>> BuildConfig.from_config(cfg.config) == cfg
True
>>> BuildConfig(output_dir='out', num_workers=0)
Traceback (most recent call last):
...
ValueError: num_workers must be >= 1
"""


import logging
logger = logging.getLogger(__name__)   # noqa: E402

from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import yaml


#: default compressed size of a warehouse
DEFAULT_WAREHOUSE_SIZE = 2 ** 30
#: smallest allowed warehouse size limit
MIN_WAREHOUSE_SIZE = 2 ** 20
#: default cap on a single block line
DEFAULT_MAX_LINE_BYTES = 512 * 2 ** 20
#: concurrent transfers tolerated by the dump host
MAX_PARALLEL_DOWNLOADS = 3


class _ConfigMixin(object):
	"""config / from_config for dataclass configurations."""

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary."""
		return asdict(self)

	@classmethod
	def from_config(cls, config):
		"""Alternate constructor.

		Unknown keys are ignored with a warning.

		Args:
			config (dict): Configuration dictionary

		Returns:
			new instance

		"""
		known = {f.name for f in fields(cls)}
		for key in config:
			if key not in known:
				logger.warning("{}: unknown key {!r} ignored".format(
				               cls.__name__, key))
		return cls(**{key: value for key, value in config.items()
		              if key in known})

	def updated(self, **overrides):
		"""Return a copy with the non-None `overrides` applied."""
		config = self.config
		config.update({key: value for key, value in overrides.items()
		               if value is not None})
		return type(self).from_config(config)


def _positive(name, value):
	if not isinstance(value, int) or isinstance(value, bool) or value < 1:
		raise ValueError("{} must be >= 1".format(name))


@dataclass(frozen=True)
class BuildConfig(_ConfigMixin):
	"""Configuration of the building process.

	Args:
		output_dir (str): dataset directory to create
		num_workers (int): worker processes, one dump file each at a time
		warehouse_size_limit (int): compressed bytes after which a
			warehouse is sealed (checked at segment boundaries)
		memory_budget_per_worker (int): advisory, bytes
		compression_level (int): gzip level of segment frames
		namespaces (list): namespaces to keep, None keeps all
		max_inflight_input_bytes (int): cap on the summed size of the
			dump files being processed at once, None for no cap
		overwrite (bool): replace a non-empty output directory
		heartbeat_every (int): progress log line every N articles
		max_line_bytes (int): largest accepted block line
		start_method (str): multiprocessing start method, None for default
	"""

	output_dir: str = './warehouses'
	num_workers: int = 1
	warehouse_size_limit: int = DEFAULT_WAREHOUSE_SIZE
	memory_budget_per_worker: int = 2 ** 30
	compression_level: int = 6
	namespaces: Optional[List[int]] = field(default_factory=lambda: [0])
	max_inflight_input_bytes: Optional[int] = None
	overwrite: bool = False
	heartbeat_every: int = 1000
	max_line_bytes: int = DEFAULT_MAX_LINE_BYTES
	start_method: Optional[str] = None

	def __post_init__(self):
		_positive('num_workers', self.num_workers)
		_positive('memory_budget_per_worker', self.memory_budget_per_worker)
		_positive('heartbeat_every', self.heartbeat_every)
		_positive('max_line_bytes', self.max_line_bytes)
		if self.warehouse_size_limit < MIN_WAREHOUSE_SIZE:
			raise ValueError("warehouse_size_limit must be >= {}".format(
			                 MIN_WAREHOUSE_SIZE))
		if not 0 <= self.compression_level <= 9:
			raise ValueError("compression_level must be in [0, 9]")
		if self.max_inflight_input_bytes is not None:
			_positive('max_inflight_input_bytes',
			          self.max_inflight_input_bytes)


@dataclass(frozen=True)
class ModifyConfig(_ConfigMixin):
	"""Configuration of the modifying process.

	Args:
		output_dir (str): dataset directory to create
		num_workers (int): worker processes, one segment each at a time
		warehouse_size_limit (int): as :class:`BuildConfig`
		compression_level (int): gzip level of segment frames
		strict (bool): abort the run on the first failing block,
			instead of recording and dropping it
		omit_empty_segments (bool): do not write the metadata of segments
			whose blocks were all dropped
		overwrite (bool): replace a non-empty output directory
		max_line_bytes (int): largest accepted block line
		start_method (str): multiprocessing start method, None for default
	"""

	output_dir: str = './output'
	num_workers: int = 1
	warehouse_size_limit: int = DEFAULT_WAREHOUSE_SIZE
	compression_level: int = 6
	strict: bool = False
	omit_empty_segments: bool = False
	overwrite: bool = False
	max_line_bytes: int = DEFAULT_MAX_LINE_BYTES
	start_method: Optional[str] = None

	def __post_init__(self):
		_positive('num_workers', self.num_workers)
		_positive('max_line_bytes', self.max_line_bytes)
		if self.warehouse_size_limit < MIN_WAREHOUSE_SIZE:
			raise ValueError("warehouse_size_limit must be >= {}".format(
			                 MIN_WAREHOUSE_SIZE))
		if not 0 <= self.compression_level <= 9:
			raise ValueError("compression_level must be in [0, 9]")


@dataclass(frozen=True)
class DownloadConfig(_ConfigMixin):
	"""Configuration of the dump downloader.

	Args:
		base_url (str): dump host
		workers (int): requested parallel transfers, capped at 3
		retries_503 (int): retries of a "service unavailable" answer
		backoff_seconds (float): first delay of the exponential backoff
		resumes (int): interrupted transfers resumed before giving up
		timeout (float): socket timeout, seconds
		progress (bool): show progress bars on stderr
	"""

	base_url: str = 'https://dumps.wikimedia.org'
	workers: int = MAX_PARALLEL_DOWNLOADS
	retries_503: int = 5
	backoff_seconds: float = 2.0
	resumes: int = 5
	timeout: float = 60.0
	progress: bool = False

	def __post_init__(self):
		_positive('workers', self.workers)
		if self.resumes < 0:
			raise ValueError("resumes must not be negative")

	@property
	def effective_workers(self):
		"""Parallel transfers actually used."""
		return min(self.workers, MAX_PARALLEL_DOWNLOADS)


def load_config(filename):
	"""Read a configuration dictionary from a YAML file.

	Args:
		filename (str): path of the YAML file

	Returns:
		dict: empty if the file is empty

	Raises:
		ValueError: the document is not a mapping

	"""
	with open(filename, 'r') as f:
		config = yaml.safe_load(stream=f)
	if config is None:
		return {}
	if not isinstance(config, dict):
		raise ValueError("{}: expected a mapping".format(filename))
	return config


def save_config(config_obj, filename):
	"""Write a configuration object to a YAML file."""
	with open(filename, 'w') as stream:
		yaml.safe_dump(config_obj.config, stream=stream,
		               default_flow_style=False, sort_keys=False)
