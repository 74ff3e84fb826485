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



"""Building process: dump files in, dataset out.

One worker reads one dump file at a time, from the first byte to the
last, and writes its own warehouses; warehouses never mix articles of
different dump files.
Files are handed out largest first.

>>> builder = Builder(BuildConfig(output_dir='./warehouses', num_workers=8))
>>> builder.files
[]

The usual sequence is::

	builder.preload('./input')
	builder.files = builder.files[:10]   # test with the first 10
	report = builder.build()
"""


import logging
logger = logging.getLogger(__name__)   # noqa: E402

import os
import time
from dataclasses import dataclass, field
from typing import List, Optional

from revblocks.core.block import serialize_block
from revblocks.core.config import BuildConfig
from revblocks.core.errors import (
	EmptyWorklistError,
	OversizeBlockError,
)
from revblocks.ingest.dump import (
	ArticleEnd,
	ArticleStart,
	Revision,
	open_dump,
)
from revblocks.pipeline.pool import (
	Job,
	LargestFirstScheduler,
	Task,
	WorkerPool,
)
from revblocks.store.dataset import (
	mark_partial,
	prepare_output_dir,
	write_manifest,
)
from revblocks.store.warehouse import WarehouseWriter, rollback


#: extensions of the files picked up from an input directory
DUMP_EXTENSIONS = ('.xml', '.xml.bz2', '.xml.gz', '.bz2', '.gz')


@dataclass(frozen=True)
class DumpFile(object):
	"""A dump file waiting to be built."""

	path: str
	size: int


def preload(source):
	"""List the dump files to build, largest first.

	No file content is read.

	Args:
		source (str or list): a directory, or a list of file paths

	Returns:
		list of DumpFile

	Raises:
		FileNotFoundError: a listed path does not exist
		EmptyWorklistError: no dump file found

	"""
	if isinstance(source, (str, os.PathLike)):
		source = os.fspath(source)
		if os.path.isdir(source):
			paths = [os.path.join(source, name)
			         for name in sorted(os.listdir(source))
			         if name.lower().endswith(DUMP_EXTENSIONS)]
			paths = [path for path in paths if os.path.isfile(path)]
		else:
			paths = [source]
	else:
		paths = [os.fspath(path) for path in source]
	files = []
	for path in paths:
		if not os.path.isfile(path):
			raise FileNotFoundError("no such dump file: {}".format(path))
		files.append(DumpFile(path=path, size=os.path.getsize(path)))
	if not files:
		raise EmptyWorklistError("no dump files in {}".format(source))
	files.sort(key=lambda dump: dump.size, reverse=True)
	return files


@dataclass
class BuildReport(object):
	"""Outcome of a building process."""

	files_processed: int = 0
	#: list of {"file", "error", "message"}
	files_failed: List[dict] = field(default_factory=list)
	articles_written: int = 0
	revisions_written: int = 0
	warehouses_written: int = 0
	bytes_in_compressed: int = 0
	bytes_out_compressed: int = 0
	wall_time: float = 0.0
	#: worker id -> summary
	workers: dict = field(default_factory=dict)
	#: problems skipped inside otherwise successful files
	errors: List[dict] = field(default_factory=list)
	#: description of the error that stopped the run
	fatal: Optional[dict] = None

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary."""
		return {
		    'files_processed': self.files_processed,
		    'files_failed': list(self.files_failed),
		    'articles_written': self.articles_written,
		    'revisions_written': self.revisions_written,
		    'warehouses_written': self.warehouses_written,
		    'bytes_in_compressed': self.bytes_in_compressed,
		    'bytes_out_compressed': self.bytes_out_compressed,
		    'wall_time': round(self.wall_time, 3),
		    'workers': {str(key): value
		                for key, value in sorted(self.workers.items())},
		    'errors': list(self.errors),
		    'fatal': self.fatal,
		}

	@property
	def totals(self):
		"""Counters only, as stored in the manifest."""
		return {key: value for key, value in self.config.items()
		        if isinstance(value, int)}


class BuildJob(Job):
	"""Build one dump file per task, in a worker process."""

	def __init__(self, config):
		self.config = config

	def setup(self, worker_id):
		super().setup(worker_id)
		self.next_seq = 0
		self.summary = {'files': 0, 'articles': 0, 'revisions': 0}

	def run(self, task, progress):
		path = task.payload
		writer = WarehouseWriter.from_config(self.config,
		                                     worker=self.worker_id,
		                                     first_seq=self.next_seq)
		checkpoint = writer.checkpoint()
		progress(checkpoint=checkpoint)
		logger.info("worker {} starts {}".format(self.worker_id, path),
		            extra={'fields': {'event': 'file_start',
		                              'worker': self.worker_id,
		                              'file': path}})
		try:
			result = self._build_file(path, writer, progress)
			writer.seal()
		except BaseException:
			writer.rollback(checkpoint)
			raise
		self.next_seq = writer.next_seq
		self.summary['files'] += 1
		self.summary['articles'] += result['articles']
		self.summary['revisions'] += result['revisions']
		logger.info("worker {} finished {}".format(self.worker_id, path),
		            extra={'fields': {'event': 'file_done',
		                              'worker': self.worker_id,
		                              'file': path,
		                              'articles': result['articles'],
		                              'revisions': result['revisions']}})
		return result

	def _build_file(self, path, writer, progress):
		articles = revisions = bytes_out = 0
		errors = []
		heartbeat = self.config.heartbeat_every
		with open_dump(path, namespaces=self.config.namespaces,
		               on_error='skip') as reader:
			for event in reader:
				if isinstance(event, Revision):
					block = event.block
					try:
						writer.append_block(serialize_block(block),
						                    timestamp=block.timestamp)
					except OversizeBlockError as error:
						logger.warning(str(error))
						errors.append({'file': path,
						               'error': 'OversizeBlockError',
						               'message': str(error)})
						continue
					revisions += 1
				elif isinstance(event, ArticleStart):
					writer.begin_segment(event.article_id, event.title,
					                     event.namespace)
				elif isinstance(event, ArticleEnd):
					meta = writer.end_segment()
					bytes_out += meta.byte_length
					articles += 1
					if articles % heartbeat == 0:
						logger.info("heartbeat", extra={'fields': {
						    'event': 'heartbeat', 'worker': self.worker_id,
						    'file': path, 'articles': articles,
						    'revisions': revisions}})
						progress(articles=articles, revisions=revisions)
			for issue in reader.issues:
				errors.append(dict(issue.config, file=path,
				                   error='Dump' + issue.kind.capitalize()))
		return {'file': path,
		        'articles': articles,
		        'revisions': revisions,
		        'bytes_out': bytes_out,
		        'warehouses': list(writer.warehouses),
		        'errors': errors,
		        }

	def teardown(self):
		return dict(self.summary, worker=self.worker_id)

	def recover(self, worker_id, checkpoint):
		if checkpoint is not None:
			rollback(self.config.output_dir, checkpoint)


def build(files, config):
	"""Run the building process.

	Args:
		files (list of DumpFile): as returned by :func:`preload`
		config (BuildConfig): run configuration

	Returns:
		BuildReport

	Raises:
		EmptyWorklistError: `files` is empty
		OutputExistsError: the output directory is not empty

	"""
	if not files:
		raise EmptyWorklistError("nothing to build")
	prepare_output_dir(config.output_dir, config.overwrite)
	start = time.monotonic()
	tasks = [Task(key=dump.path, size=dump.size, payload=dump.path)
	         for dump in files]
	scheduler = LargestFirstScheduler(tasks,
	                                  cap=config.max_inflight_input_bytes)
	pool = WorkerPool(BuildJob(config), num_workers=config.num_workers,
	                  start_method=config.start_method)
	logger.info("building {} files with {} workers".format(
	            len(tasks), config.num_workers))
	outcome = pool.run(tasks, scheduler=scheduler)

	report = BuildReport()
	warehouses = set()
	for task, result in outcome.results:
		report.files_processed += 1
		report.articles_written += result['articles']
		report.revisions_written += result['revisions']
		report.bytes_in_compressed += task.size
		report.bytes_out_compressed += result['bytes_out']
		report.errors.extend(result['errors'])
		warehouses.update(result['warehouses'])
	for task, error in outcome.failures:
		report.files_failed.append(dict(error, file=task.key))
	for task in outcome.unstarted:
		report.files_failed.append({'file': task.key, 'error': 'NotStarted',
		                            'message': 'run stopped before this file'})
	report.warehouses_written = len(warehouses)
	report.workers = outcome.summaries
	report.fatal = outcome.fatal
	report.wall_time = time.monotonic() - start

	if outcome.fatal is not None:
		logger.error("build stopped: {}".format(outcome.fatal['message']))
		mark_partial(config.output_dir, outcome.fatal['message'])
	else:
		write_manifest(config.output_dir, 'build', config.config,
		               inputs=[dump.path for dump in files],
		               totals=report.totals)
	return report


class Builder(object):
	"""Object interface of the building process.

	Args:
		config (BuildConfig): run configuration
		**kwargs: BuildConfig fields, when `config` is None
	"""

	def __init__(self, config=None, **kwargs):
		self.config = config if config is not None else BuildConfig(**kwargs)
		#: files to build, may be truncated before :meth:`build`
		self.files = []

	def preload(self, source):
		"""Set :attr:`files` from a directory or a file list.

		Returns:
			list of DumpFile
		"""
		self.files = preload(source)
		return self.files

	def build(self):
		"""Build :attr:`files` into the output directory.

		Returns:
			BuildReport
		"""
		return build(self.files, self.config)
