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



"""Modifying process: dataset in, dataset out.

Every block of the input dataset goes through a chain of
:class:`ModifierProfile` objects; the blocks they return are written to a
new dataset.  Blocks are loaded one at a time, when requested, and are
handed to profiles as plain JSON objects, so that a profile may change
the schema (the output of a modification is a valid input of the next).

Profile state lives for one segment only: every segment is processed
by fresh copies of the registered profiles.

>>> class Upper(ModifierProfile):
...     def block(self, content, metadata):
...         content['title'] = metadata['title'].upper()
...         return content, metadata
>>> meta = {'title': 'Nine', 'custom': {}}
>>> apply_chain({'revision_id': '5'}, meta, [Upper()])[0]
{'revision_id': '5', 'title': 'NINE'}
"""


import logging
logger = logging.getLogger(__name__)   # noqa: E402

import copy
import os
import shutil
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional

from revblocks.core.block import dump_object_line, parse_object_line
from revblocks.core.config import ModifyConfig
from revblocks.core.errors import (
	BlockError,
	DatasetError,
	EmptyWorklistError,
	ProfileError,
	SegmentCorruptError,
	StrictModeAbort,
)
from revblocks.pipeline.pool import FifoScheduler, Job, Task, WorkerPool
from revblocks.shared.tools import is_timestamp
from revblocks.store.dataset import (
	prepare_output_dir,
	read_metadata,
	write_manifest,
)
from revblocks.store.warehouse import (
	WarehouseWriter,
	open_segment,
	rollback,
)


#: errors kept in a report, the others are only counted
MAX_RECORDED_ERRORS = 1000


class ModifierProfile(object):
	"""Base class of user transformations.

	Subclasses implement :meth:`block`, and optionally the segment hooks.
	Instances are copied for every segment: attributes set in
	``__init__`` are the initial state of each article,
	attributes changed while processing are forgotten at the segment end.
	Profiles must be picklable (they are sent to the workers).

	The `metadata` argument is a dictionary view of the input segment
	metadata (see :class:`~revblocks.core.metadata.SegmentMetadata`);
	only its ``custom`` entry is carried to the output.
	"""

	#: name on the command line, None for library-only profiles
	cli_name = None

	@classmethod
	def from_argument(cls, argument=None):
		"""Alternate constructor, from the ``NAME:ARG`` command line form."""
		if argument is not None:
			raise ValueError("profile {} takes no argument".format(
			                 cls.cli_name))
		return cls()

	@property
	def name(self):
		"""Name used in reports."""
		return self.cli_name or type(self).__name__

	def on_segment_start(self, metadata):
		"""Called before the first block of a segment.

		Returns:
			dict: the metadata, possibly updated
		"""
		return metadata

	def block(self, content, metadata):
		"""Transform one block.

		Args:
			content (dict): decoded block line
			metadata (dict): segment metadata view

		Returns:
			tuple: ``(content, metadata)``; content None drops the block,
			metadata is still needed

		"""
		raise NotImplementedError

	def on_segment_end(self, metadata):
		"""Called after the last block of a segment.

		Returns:
			dict: the metadata, possibly updated
		"""
		return metadata


def _timed(profile, timings, method, *args):
	start = time.perf_counter()
	try:
		return method(*args)
	except Exception as error:
		raise ProfileError(profile.name, "{}: {}".format(
		                   type(error).__name__, error)) from error
	finally:
		if timings is not None:
			timings[profile.name] += time.perf_counter() - start


def apply_chain(content, metadata, profiles, timings=None):
	"""Run one block through the profiles, in order.

	Once a profile drops the block, the next ones do not see it.

	Args:
		content (dict): decoded block
		metadata (dict): segment metadata view
		profiles (list of ModifierProfile): chain, non empty
		timings (Counter): profile name -> seconds, updated when given

	Returns:
		tuple: ``(content or None, metadata)``

	Raises:
		ProfileError: a profile raised, or returned something invalid

	"""
	if not profiles:
		raise ValueError("at least one profile is needed")
	for profile in profiles:
		if content is None:
			break
		result = _timed(profile, timings, profile.block, content, metadata)
		if not isinstance(result, tuple) or len(result) != 2:
			raise ProfileError(profile.name,
			                   "block() must return (content, metadata)")
		content, metadata = result
		if not isinstance(metadata, dict):
			raise ProfileError(profile.name, "metadata must stay a dict")
		if content is not None and not isinstance(content, dict):
			raise ProfileError(profile.name,
			                   "content must be a dict or None")
	return content, metadata


def _segment_hook(profiles, hook_name, metadata, timings):
	for profile in profiles:
		metadata = _timed(profile, timings, getattr(profile, hook_name),
		                  metadata)
		if not isinstance(metadata, dict):
			raise ProfileError(profile.name, "{}() must return a dict".format(
			                   hook_name))
	return metadata


@dataclass
class ModifyReport(object):
	"""Outcome of a modifying process."""

	segments_in: int = 0
	segments_out: int = 0
	segments_failed: int = 0
	blocks_in: int = 0
	blocks_out: int = 0
	blocks_dropped: int = 0
	block_errors: int = 0
	#: profile name -> seconds
	profile_seconds: dict = field(default_factory=dict)
	warehouses_written: int = 0
	wall_time: float = 0.0
	#: list of {"segment", "error", "message"}, truncated
	errors: List[dict] = field(default_factory=list)
	fatal: Optional[dict] = None

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary."""
		return {
		    'segments_in': self.segments_in,
		    'segments_out': self.segments_out,
		    'segments_failed': self.segments_failed,
		    'blocks_in': self.blocks_in,
		    'blocks_out': self.blocks_out,
		    'blocks_dropped': self.blocks_dropped,
		    'block_errors': self.block_errors,
		    'profile_seconds': {name: round(seconds, 6) for name, seconds
		                        in sorted(self.profile_seconds.items())},
		    'warehouses_written': self.warehouses_written,
		    'wall_time': round(self.wall_time, 3),
		    'errors': list(self.errors),
		    'fatal': self.fatal,
		}

	@property
	def totals(self):
		"""Counters only, as stored in the manifest."""
		return {key: value for key, value in self.config.items()
		        if isinstance(value, int)}


class ModifyJob(Job):
	"""Modify one segment per task, in a worker process."""

	def __init__(self, config, dataset_dir, profiles):
		self.config = config
		self.dataset_dir = dataset_dir
		#: pristine profiles, copied for every segment
		self.profiles = list(profiles)

	def setup(self, worker_id):
		super().setup(worker_id)
		self.writer = WarehouseWriter.from_config(self.config,
		                                          worker=worker_id)
		self.timings = Counter()

	def run(self, task, progress):
		meta = task.payload
		checkpoint = self.writer.checkpoint()
		progress(checkpoint=checkpoint)
		try:
			return self._modify_segment(meta)
		except SegmentCorruptError as error:
			self.writer.rollback(checkpoint)
			logger.warning(str(error))
			return {'segment': task.key, 'corrupt': str(error),
			        'blocks_in': 0, 'blocks_out': 0, 'blocks_dropped': 0,
			        'errors': [], 'error_count': 0, 'written': False}
		except BaseException:
			self.writer.rollback(checkpoint)
			raise

	def _modify_segment(self, meta):
		key = '{}@{}'.format(meta.warehouse, meta.byte_start)
		profiles = copy.deepcopy(self.profiles)
		counts = Counter()
		errors = []

		def record(error, dropped=True):
			if self.config.strict:
				raise StrictModeAbort("segment {}: {}".format(key, error)) \
				    from error
			counts['errors'] += 1
			if dropped:
				counts['dropped'] += 1
			if len(errors) < MAX_RECORDED_ERRORS:
				errors.append({'segment': key,
				               'article_id': meta.article_id,
				               'error': type(error).__name__,
				               'message': str(error)})

		metadata = meta.view()
		try:
			metadata = _segment_hook(profiles, 'on_segment_start', metadata,
			                         self.timings)
		except ProfileError as error:
			record(error, dropped=False)
		self.writer.begin_segment(meta.article_id, meta.title, meta.namespace)
		path = os.path.join(self.dataset_dir, meta.warehouse)
		for line in open_segment(path, meta.byte_start, meta.byte_length):
			counts['in'] += 1
			try:
				content = parse_object_line(line)
				content, metadata = apply_chain(content, metadata, profiles,
				                                self.timings)
				if content is None:
					counts['dropped'] += 1
					continue
				out_line = dump_object_line(content)
			except (BlockError, ProfileError) as error:
				record(error)
				continue
			timestamp = content.get('timestamp')
			if not is_timestamp(timestamp):
				timestamp = None
			self.writer.append_block(out_line, timestamp=timestamp)
			counts['out'] += 1
		try:
			metadata = _segment_hook(profiles, 'on_segment_end', metadata,
			                         self.timings)
		except ProfileError as error:
			record(error, dropped=False)
		custom = metadata.get('custom') or {}
		if not isinstance(custom, dict):
			record(ProfileError('(chain)', 'custom metadata must be a dict'),
			       dropped=False)
			custom = {}

		written = True
		if counts['out'] == 0 and self.config.omit_empty_segments:
			self.writer.abort_segment()
			written = False
		else:
			self.writer.end_segment(custom=custom)
		return {'segment': key,
		        'blocks_in': counts['in'],
		        'blocks_out': counts['out'],
		        'blocks_dropped': counts['dropped'],
		        'error_count': counts['errors'],
		        'errors': errors,
		        'written': written,
		        }

	def teardown(self):
		self.writer.seal()
		return {'worker': self.worker_id,
		        'warehouses': list(self.writer.warehouses),
		        'profile_seconds': dict(self.timings)}

	def recover(self, worker_id, checkpoint):
		if checkpoint is not None:
			rollback(self.config.output_dir, checkpoint)


def preload(dataset_dir):
	"""List the segments of a dataset, as modify tasks.

	Args:
		dataset_dir (str): dataset directory

	Returns:
		list of Task: one per segment, payload is its SegmentMetadata

	Raises:
		DatasetError: unreadable or inconsistent dataset

	"""
	index = read_metadata(dataset_dir)
	if index.violations:
		raise DatasetError("inconsistent dataset {}".format(dataset_dir),
		                   index.violations)
	return [Task(key='{}@{}'.format(meta.warehouse, meta.byte_start),
	             size=meta.byte_length, payload=meta)
	        for meta in index.segments]


def start(worklist, profiles, config, dataset_dir):
	"""Run the modifying process.

	Args:
		worklist (list of Task): as returned by :func:`preload`
		profiles (list of ModifierProfile): chain, in order
		config (ModifyConfig): run configuration
		dataset_dir (str): input dataset

	Returns:
		ModifyReport

	Raises:
		ValueError: no profile
		EmptyWorklistError: empty dataset
		OutputExistsError: the output directory is not empty

	"""
	if not profiles:
		raise ValueError("at least one profile is needed")
	if not worklist:
		raise EmptyWorklistError("no segments in {}".format(dataset_dir))
	prepare_output_dir(config.output_dir, config.overwrite)
	started = time.monotonic()
	job = ModifyJob(config, dataset_dir, profiles)
	pool = WorkerPool(job, num_workers=config.num_workers,
	                  start_method=config.start_method)
	logger.info("modifying {} segments with {} workers".format(
	            len(worklist), config.num_workers))
	outcome = pool.run(worklist, scheduler=FifoScheduler(worklist))

	report = ModifyReport(segments_in=len(worklist))
	timings = Counter()
	warehouses = set()
	for _task, result in outcome.results:
		report.blocks_in += result['blocks_in']
		report.blocks_out += result['blocks_out']
		report.blocks_dropped += result['blocks_dropped']
		report.block_errors += result['error_count']
		if result.get('corrupt'):
			report.segments_failed += 1
			report.errors.append({'segment': result['segment'],
			                      'error': 'SegmentCorruptError',
			                      'message': result['corrupt']})
		elif result['written']:
			report.segments_out += 1
		room = MAX_RECORDED_ERRORS - len(report.errors)
		report.errors.extend(result['errors'][:max(room, 0)])
	for task, error in outcome.failures:
		report.segments_failed += 1
		report.errors.append(dict(error, segment=task.key))
	for task in outcome.unstarted:
		report.segments_failed += 1
	for summary in outcome.summaries.values():
		timings.update(summary.get('profile_seconds', {}))
		warehouses.update(summary.get('warehouses', []))
	report.profile_seconds = dict(timings)
	report.warehouses_written = len(warehouses)
	report.fatal = outcome.fatal
	report.wall_time = time.monotonic() - started

	if outcome.fatal is not None:
		logger.error("modify stopped: {}".format(outcome.fatal['message']))
		# strict runs leave nothing behind
		shutil.rmtree(config.output_dir, ignore_errors=True)
	else:
		write_manifest(config.output_dir, 'modify', dict(
		               config.config, profiles=[p.name for p in profiles]),
		               inputs=[dataset_dir], totals=report.totals)
	return report


class Modifier(object):
	"""Object interface of the modifying process.

	Args:
		config (ModifyConfig): run configuration
		**kwargs: ModifyConfig fields, when `config` is None
	"""

	def __init__(self, config=None, **kwargs):
		self.config = config if config is not None else ModifyConfig(**kwargs)
		self.dataset_dir = None
		#: segments to modify
		self.worklist = []
		#: registered profiles, applied in this order
		self.profiles = []

	def preload(self, dataset_dir):
		"""Index the input dataset.

		Returns:
			list of Task
		"""
		self.worklist = preload(dataset_dir)
		self.dataset_dir = dataset_dir
		return self.worklist

	def add_profile(self, profile):
		"""Append a profile (an instance, or a class without arguments)."""
		if isinstance(profile, type):
			profile = profile()
		if not isinstance(profile, ModifierProfile):
			raise TypeError("expected a ModifierProfile, got {}".format(
			                type(profile).__name__))
		self.profiles.append(profile)

	def start(self):
		"""Run the chain over the preloaded dataset.

		Returns:
			ModifyReport
		"""
		if self.dataset_dir is None:
			raise EmptyWorklistError("call preload() first")
		return start(self.worklist, self.profiles, self.config,
		             self.dataset_dir)
