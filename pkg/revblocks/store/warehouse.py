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



"""Warehouse files and their metadata sidecars.

A warehouse is a concatenation of gzip members, one per :term:`segment`.
Each member decodes to the JSONL lines of one article,
so that any article can be read back from its ``(byte_start, byte_length)``
coordinates alone, without touching the articles stored before it.

The sidecar lists one :class:`~revblocks.core.metadata.SegmentMetadata`
per line, in frame order; it is never compressed.

Warehouses are named after the worker that writes them
(``block_{worker:03d}_{seq:05d}.jsonl.gz``),
so that no two processes ever write the same file.
"""


import logging
logger = logging.getLogger(__name__)   # noqa: E402

import errno
import os
import re
import zlib
from collections import namedtuple

from revblocks.core.block import dump_object_line, parse_object_line
from revblocks.core.config import (
	DEFAULT_MAX_LINE_BYTES,
	DEFAULT_WAREHOUSE_SIZE,
)
from revblocks.core.errors import (
	OutOfSpaceError,
	OversizeBlockError,
	SegmentCorruptError,
	SegmentRangeError,
	SegmentStateError,
)
from revblocks.core.metadata import SegmentMetadata


WAREHOUSE_SUFFIX = '.jsonl.gz'
SIDECAR_SUFFIX = '.metadata.jsonl'
#: gzip container around raw deflate, for zlib
GZIP_WBITS = 31
READ_CHUNK = 1 << 16

_NAME = re.compile(r'block_(\d{3,})_(\d{5,})' + re.escape(WAREHOUSE_SUFFIX)
                   + r'\Z')


def warehouse_name(worker, seq):
	"""Return the file name of a warehouse.

	>>> warehouse_name(3, 12)
	'block_003_00012.jsonl.gz'
	"""
	return 'block_{:03d}_{:05d}{}'.format(worker, seq, WAREHOUSE_SUFFIX)


def parse_warehouse_name(name):
	"""Return ``(worker, seq)`` from a warehouse file name, or None.

	>>> parse_warehouse_name('block_003_00012.jsonl.gz')
	(3, 12)
	"""
	match = _NAME.match(os.path.basename(name))
	if match is None:
		return None
	return int(match.group(1)), int(match.group(2))


def sidecar_path(warehouse_path):
	"""Return the sidecar path paired with a warehouse path.

	>>> sidecar_path('out/block_000_00001.jsonl.gz')
	'out/block_000_00001.metadata.jsonl'
	"""
	if not warehouse_path.endswith(WAREHOUSE_SUFFIX):
		raise ValueError("not a warehouse name: {}".format(warehouse_path))
	return warehouse_path[:-len(WAREHOUSE_SUFFIX)] + SIDECAR_SUFFIX


#: state of a writer, everything written at or after it can be discarded
Checkpoint = namedtuple('Checkpoint', 'worker seq offset')


class _OpenSegment(object):
	"""Running state of the segment being written."""

	__slots__ = ('article_id', 'title', 'namespace', 'byte_start',
	             'compressor', 'uncompressed', 'num_revisions',
	             'first_timestamp', 'last_timestamp', 'custom')

	def __init__(self, article_id, title, namespace, byte_start,
	             compressor, custom):
		self.article_id = article_id
		self.title = title
		self.namespace = namespace
		self.byte_start = byte_start
		self.compressor = compressor
		self.uncompressed = 0
		self.num_revisions = 0
		self.first_timestamp = None
		self.last_timestamp = None
		self.custom = custom


class WarehouseWriter(object):
	"""Writes the warehouses of one worker.

	Files are opened lazily, at the first :meth:`begin_segment`.
	A warehouse is sealed at :meth:`end_segment` once it holds at least
	`size_limit` compressed bytes, so that segments are never split;
	a single huge article therefore yields one oversized warehouse.

	The writer is owned by a single process; it is not thread-safe.

	Args:
		output_dir (str): dataset directory
		worker (int): worker tag, part of the file names
		size_limit (int): compressed bytes after which a warehouse is sealed
		compression_level (int): gzip level
		max_line_bytes (int): largest accepted block line
		first_seq (int): sequence number of the first warehouse
	"""

	def __init__(self, output_dir, worker=0,
	             size_limit=DEFAULT_WAREHOUSE_SIZE, compression_level=6,
	             max_line_bytes=DEFAULT_MAX_LINE_BYTES, first_seq=0):
		self.output_dir = output_dir
		self.worker = worker
		self.size_limit = size_limit
		self.compression_level = compression_level
		self.max_line_bytes = max_line_bytes
		#: sequence number of the next warehouse to open
		self.next_seq = first_seq
		#: name of the warehouse being written, None when sealed
		self.name = None
		self.bytes_written = 0
		#: names of every warehouse this writer touched
		self.warehouses = []
		self._file = None
		self._sidecar = None
		self._segment = None

	@classmethod
	def from_config(cls, config, worker=0, first_seq=0):
		"""Alternate constructor, from a Build/ModifyConfig."""
		return cls(config.output_dir, worker=worker,
		           size_limit=config.warehouse_size_limit,
		           compression_level=config.compression_level,
		           max_line_bytes=config.max_line_bytes,
		           first_seq=first_seq)

	def __enter__(self):
		return self

	def __exit__(self, exc_type, exc_val, exc_tb):
		if self._segment is not None:
			self.abort_segment()
		self.seal()

	@property
	def segment_open(self):
		"""True between begin_segment and end_segment."""
		return self._segment is not None

	@property
	def path(self):
		"""Full path of the current warehouse, or None."""
		if self.name is None:
			return None
		return os.path.join(self.output_dir, self.name)

	def _open_warehouse(self):
		self.name = warehouse_name(self.worker, self.next_seq)
		path = self.path
		try:
			# append: a rolled back warehouse is continued
			self._file = open(path, 'ab')
			self._sidecar = open(sidecar_path(path), 'ab')
		except OSError as error:
			self._raise_os_error(error)
		self.bytes_written = self._file.tell()
		if self.name not in self.warehouses:
			self.warehouses.append(self.name)
		logger.debug("opened warehouse {}".format(self.name))

	def _write(self, data):
		if not data:
			return
		try:
			self._file.write(data)
		except OSError as error:
			self._raise_os_error(error)
		self.bytes_written += len(data)

	@staticmethod
	def _raise_os_error(error):
		if error.errno == errno.ENOSPC:
			raise OutOfSpaceError(str(error)) from error
		raise error

	def begin_segment(self, article_id, title, namespace=None, custom=None):
		"""Start the segment of one article.

		Nothing is written to disk until the first block.

		Raises:
			SegmentStateError: a segment is already open

		"""
		if self._segment is not None:
			raise SegmentStateError("segment {} still open".format(
			                        self._segment.article_id))
		if self._file is None:
			self._open_warehouse()
		compressor = zlib.compressobj(self.compression_level, zlib.DEFLATED,
		                              GZIP_WBITS)
		self._segment = _OpenSegment(article_id, title, namespace,
		                             self.bytes_written, compressor,
		                             dict(custom or {}))

	def append_block(self, line, timestamp=None):
		"""Add one block line to the open segment.

		Args:
			line (bytes): one canonical line, LF-terminated
			timestamp (str): block timestamp, for the first/last trackers

		Raises:
			SegmentStateError: no segment open
			OversizeBlockError: the line exceeds `max_line_bytes`
			ValueError: `line` is not a single LF-terminated line

		"""
		segment = self._segment
		if segment is None:
			raise SegmentStateError("no segment open")
		if len(line) > self.max_line_bytes:
			raise OversizeBlockError(
			    "block of {} bytes in article {} exceeds {} bytes".format(
			        len(line), segment.article_id, self.max_line_bytes))
		if not line.endswith(b'\n') or line.find(b'\n') != len(line) - 1:
			raise ValueError("a block must be one LF-terminated line")
		self._write(segment.compressor.compress(line))
		segment.uncompressed += len(line)
		segment.num_revisions += 1
		if timestamp is not None:
			if segment.first_timestamp is None:
				segment.first_timestamp = timestamp
			segment.last_timestamp = timestamp

	def end_segment(self, custom=None):
		"""Finish the open segment.

		The frame is completed, its metadata appended to the sidecar,
		and the warehouse sealed if it reached the size limit.

		Args:
			custom (dict): article-level data, replaces the one given
				to :meth:`begin_segment` when not None

		Returns:
			SegmentMetadata

		Raises:
			SegmentStateError: no segment open

		"""
		segment = self._segment
		if segment is None:
			raise SegmentStateError("no segment open")
		self._write(segment.compressor.flush())
		self._segment = None
		meta = SegmentMetadata(
		    warehouse=self.name,
		    article_id=segment.article_id,
		    title=segment.title,
		    namespace=segment.namespace,
		    byte_start=segment.byte_start,
		    byte_length=self.bytes_written - segment.byte_start,
		    uncompressed_bytes=segment.uncompressed,
		    num_revisions=segment.num_revisions,
		    first_timestamp=segment.first_timestamp,
		    last_timestamp=segment.last_timestamp,
		    custom=segment.custom if custom is None else dict(custom),
		)
		try:
			self._file.flush()
			self._sidecar.write(dump_object_line(meta.config))
			self._sidecar.flush()
		except OSError as error:
			self._raise_os_error(error)
		if self.bytes_written >= self.size_limit:
			self.seal()
		return meta

	def abort_segment(self):
		"""Discard the open segment, as if it was never begun."""
		segment = self._segment
		if segment is None:
			return
		self._segment = None
		self._file.flush()
		self._file.truncate(segment.byte_start)
		self.bytes_written = segment.byte_start

	def seal(self):
		"""Close the current warehouse; the next segment opens a new one.

		Raises:
			SegmentStateError: a segment is open

		"""
		if self._segment is not None:
			raise SegmentStateError("can not seal while segment {} is "
			                        "open".format(self._segment.article_id))
		if self._file is None:
			return
		self._file.close()
		self._sidecar.close()
		self._file = self._sidecar = None
		if self.bytes_written == 0:
			# every segment was aborted: leave no empty file behind
			path = self.path
			os.remove(path)
			os.remove(sidecar_path(path))
			self.warehouses.remove(self.name)
			self.name = None
			return
		logger.debug("sealed warehouse {} ({} bytes)".format(
		             self.name, self.bytes_written))
		self.name = None
		self.bytes_written = 0
		self.next_seq += 1

	close = seal

	def checkpoint(self):
		"""Return the current position, for :func:`rollback`.

		Must be called between segments.
		"""
		if self._segment is not None:
			raise SegmentStateError("checkpoint inside a segment")
		if self._file is None:
			return Checkpoint(self.worker, self.next_seq, 0)
		return Checkpoint(self.worker, self.next_seq, self.bytes_written)

	def rollback(self, checkpoint):
		"""Discard everything written since `checkpoint`."""
		self._segment = None
		if self._file is not None:
			self._file.close()
			self._sidecar.close()
			self._file = self._sidecar = None
		rollback(self.output_dir, checkpoint)
		self.name = None
		self.bytes_written = 0
		self.next_seq = checkpoint.seq


def rollback(output_dir, checkpoint):
	"""Remove what a worker wrote at or after `checkpoint`.

	Used on failures, and by the coordinator on behalf of a dead worker.
	The warehouse at the checkpoint is truncated and its sidecar
	filtered; later warehouses of the same worker are deleted.

	Args:
		output_dir (str): dataset directory
		checkpoint (Checkpoint): as returned by
			:meth:`WarehouseWriter.checkpoint`

	"""
	worker, seq, offset = checkpoint
	for name in os.listdir(output_dir):
		parsed = parse_warehouse_name(name)
		if parsed is None or parsed[0] != worker or parsed[1] < seq:
			continue
		path = os.path.join(output_dir, name)
		sidecar = sidecar_path(path)
		if parsed[1] > seq or offset == 0:
			logger.info("rollback: removing {}".format(name))
			os.remove(path)
			if os.path.exists(sidecar):
				os.remove(sidecar)
			continue
		logger.info("rollback: truncating {} at {}".format(name, offset))
		with open(path, 'r+b') as f:
			f.truncate(offset)
		if os.path.exists(sidecar):
			_truncate_sidecar(sidecar, offset)


def _truncate_sidecar(sidecar, offset):
	kept = []
	with open(sidecar, 'rb') as f:
		for line in f:
			if not line.endswith(b'\n'):
				# torn write
				break
			if parse_object_line(line).get('byte_start', 0) < offset:
				kept.append(line)
	with open(sidecar, 'wb') as f:
		f.writelines(kept)


def _check_range(path, byte_start, byte_length):
	try:
		size = os.path.getsize(path)
	except OSError as error:
		raise SegmentRangeError("can not stat {}: {}".format(path, error)) \
		    from error
	if byte_start < 0 or byte_length <= 0 or byte_start + byte_length > size:
		raise SegmentRangeError(
		    "segment [{}, {}) out of {} ({} bytes)".format(
		        byte_start, byte_start + byte_length, path, size))


def open_segment(path, byte_start, byte_length, chunk_size=READ_CHUNK):
	"""Iterate over the block lines of one segment.

	Only ``byte_length`` bytes are read, starting at ``byte_start``.
	The coordinates are checked immediately. The frame is decoded twice:
	once to verify it, once to hand out its lines, so that a corrupt
	frame yields nothing. Memory stays bounded by one line plus the
	decoder state.

	Args:
		path (str): warehouse file
		byte_start (int): frame offset, from the sidecar
		byte_length (int): frame length, from the sidecar
		chunk_size (int): read size

	Returns:
		iterator of bytes: LF-terminated lines

	Raises:
		SegmentRangeError: coordinates outside of the file (immediately)
		SegmentCorruptError: the frame does not decode (while iterating)

	"""
	_check_range(path, byte_start, byte_length)
	return _iter_frame(path, byte_start, byte_length, chunk_size)


class _LineSplitter(object):
	"""Accumulate decoded bytes, hand out complete lines."""

	def __init__(self):
		self._pending = bytearray()
		self._scanned = 0

	def feed(self, data):
		self._pending.extend(data)
		start = 0
		position = self._scanned
		while True:
			end = self._pending.find(b'\n', position)
			if end < 0:
				break
			yield bytes(self._pending[start:end + 1])
			start = position = end + 1
		del self._pending[:start]
		self._scanned = len(self._pending)

	@property
	def leftover(self):
		return len(self._pending)


def _decode_frame(path, byte_start, byte_length, chunk_size):
	"""Yield the decoded chunks of one frame, checking it on the way."""
	where = "{} at {}".format(os.path.basename(path), byte_start)
	decompressor = zlib.decompressobj(GZIP_WBITS)
	last = b''
	with open(path, 'rb') as f:
		f.seek(byte_start)
		remaining = byte_length
		while remaining > 0:
			data = f.read(min(chunk_size, remaining))
			if not data:
				raise SegmentCorruptError("segment {}: file truncated".format(
				                          where))
			remaining -= len(data)
			while data:
				if decompressor.eof:
					raise SegmentCorruptError(
					    "segment {}: trailing bytes after the frame".format(
					        where))
				try:
					out = decompressor.decompress(data, chunk_size)
				except zlib.error as error:
					raise SegmentCorruptError("segment {}: {}".format(
					                          where, error)) from error
				data = decompressor.unconsumed_tail
				if decompressor.unused_data:
					raise SegmentCorruptError(
					    "segment {}: trailing bytes after the frame".format(
					        where))
				if out:
					last = out[-1:]
					yield out
	if not decompressor.eof:
		raise SegmentCorruptError("segment {}: incomplete frame".format(where))
	if last and last != b'\n':
		raise SegmentCorruptError("segment {}: last line without LF".format(
		                          where))


def _iter_frame(path, byte_start, byte_length, chunk_size):
	# the CRC is only known at the end of the frame:
	# nothing is handed out before a full verifying pass
	for _ in _decode_frame(path, byte_start, byte_length, chunk_size):
		pass
	lines = _LineSplitter()
	for out in _decode_frame(path, byte_start, byte_length, chunk_size):
		yield from lines.feed(out)


def scan_warehouse(path, chunk_size=READ_CHUNK):
	"""Read a whole warehouse sequentially, ignoring the sidecar.

	>>> import tempfile
	>>> with tempfile.TemporaryDirectory() as tmp:
	...     with WarehouseWriter(tmp) as writer:
	...         writer.begin_segment('1', 'One')
	...         writer.append_block(b'{}\\n')
	...         meta = writer.end_segment()
	...     list(scan_warehouse(os.path.join(tmp, meta.warehouse)))
	[(0, b'{}\\n')]

	Args:
		path (str): warehouse file

	Yields:
		tuple: ``(segment_index, line)``

	Raises:
		SegmentCorruptError: a frame does not decode

	"""
	index = 0
	decompressor = zlib.decompressobj(GZIP_WBITS)
	lines = _LineSplitter()
	started = False
	with open(path, 'rb') as f:
		while True:
			data = f.read(chunk_size)
			if not data:
				break
			while data:
				started = True
				try:
					out = decompressor.decompress(data, chunk_size)
				except zlib.error as error:
					raise SegmentCorruptError("{}, segment {}: {}".format(
					                          path, index, error)) from error
				data = decompressor.unconsumed_tail
				for line in lines.feed(out):
					yield index, line
				if decompressor.eof:
					if lines.leftover:
						raise SegmentCorruptError(
						    "{}, segment {}: last line without LF".format(
						        path, index))
					data = decompressor.unused_data + data
					decompressor = zlib.decompressobj(GZIP_WBITS)
					index += 1
					started = False
	if started:
		raise SegmentCorruptError("{}, segment {}: incomplete frame".format(
		                          path, index))
