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


"""Streaming reader of MediaWiki revision-history dumps.

The reader is pull based: :meth:`DumpReader.next_event` returns the next
:class:`ArticleStart`, :class:`Revision`, :class:`ArticleEnd` or
:class:`DumpEnd` event, in document order.

Compressed dumps (bz2, gzip) are decompressed on the fly, chunk by chunk;
no decompressed copy is written anywhere.
Each ``<revision>`` subtree is released as soon as its block is built,
so that memory does not grow with the number of revisions of an article.

Malformed XML is handled according to ``on_error``:

-	``'skip'`` (default): the problem is recorded in
	:attr:`DumpReader.issues`, the current article is closed
	and reading resumes at the next ``<page>``.
-	``'raise'``: :class:`~revblocks.core.errors.DumpSyntaxError` is raised;
	the caller may then call :meth:`DumpReader.skip_article` and go on,
	or give up.

Only namespace 0 (articles) is kept by default; pass ``namespaces=None``
to keep every page.
"""


import logging
logger = logging.getLogger(__name__)   # noqa: E402

import bz2
import gzip
import os
import re
from collections import deque
from dataclasses import dataclass
from typing import Optional

from lxml import etree

from revblocks.core.block import Block, Contributor, TextPayload
from revblocks.core.errors import (
	DumpError,
	DumpFormatError,
	DumpOpenError,
	DumpSyntaxError,
	MalformedRevisionError,
)


PLAIN = 'plain-xml'
BZ2 = 'bz2-stream'
GZIP = 'gzip-stream'

#: decompressed bytes fed to the XML parser at once
CHUNK_SIZE = 1 << 16

_MAGIC = ((b'BZh', BZ2), (b'\x1f\x8b', GZIP))
_EXTENSIONS = (('.bz2', BZ2), ('.gz', GZIP), ('.xml', PLAIN))
_PAGE_START = re.compile(rb'<page[\s>]')
_BARE_ROOT = b'<mediawiki>'


def _local(tag):
	"""Strip the namespace from an element tag."""
	if not isinstance(tag, str):
		return None
	return tag.rsplit('}', 1)[-1]


@dataclass(frozen=True)
class DumpSource(object):
	"""A dump file and the codec it is compressed with.

	Use :meth:`detect` rather than the constructor.
	"""

	path: str
	codec: str
	#: disagreements between extension and magic bytes
	warnings: tuple = ()

	@classmethod
	def detect(cls, path):
		"""Alternate constructor, guessing the codec.

		The codec is taken from the magic bytes; the file extension
		is only checked against them (a warning is recorded when they
		disagree).

		Args:
			path (str): dump file

		Returns:
			DumpSource

		Raises:
			DumpOpenError: unreadable file, or neither bz2, gzip nor XML

		"""
		path = os.fspath(path)
		try:
			with open(path, 'rb') as f:
				head = f.read(64)
		except OSError as error:
			raise DumpOpenError("can not read {}: {}".format(path, error)) \
			    from error

		magic_codec = None
		for magic, codec in _MAGIC:
			if head.startswith(magic):
				magic_codec = codec
		if magic_codec is None:
			stripped = head.lstrip(b'\xef\xbb\xbf \t\r\n')
			if stripped and not stripped.startswith(b'<'):
				raise DumpOpenError("unrecognized codec for {}".format(path))
			magic_codec = PLAIN

		warnings = []
		lowered = path.lower()
		for extension, codec in _EXTENSIONS:
			if lowered.endswith(extension):
				if codec != magic_codec:
					message = "{}: extension says {}, content is {}".format(
					          path, codec, magic_codec)
					logger.warning(message)
					warnings.append(message)
				break
		return cls(path=path, codec=magic_codec, warnings=tuple(warnings))

	def open(self):
		"""Return a binary stream of the decompressed XML."""
		if self.codec == BZ2:
			return bz2.open(self.path, 'rb')
		elif self.codec == GZIP:
			return gzip.open(self.path, 'rb')
		elif self.codec == PLAIN:
			return open(self.path, 'rb')
		raise DumpOpenError("unknown codec {}".format(self.codec))


# events

@dataclass(frozen=True)
class ArticleStart(object):
	"""A page begins; its revisions follow."""

	article_id: str
	title: str
	namespace: Optional[int] = None


@dataclass(frozen=True)
class Revision(object):
	"""One revision of the current page."""

	block: Block


@dataclass(frozen=True)
class ArticleEnd(object):
	"""The current page is complete."""

	article_id: str


@dataclass(frozen=True)
class DumpEnd(object):
	"""Last event of a dump, returned once."""


@dataclass(frozen=True)
class ParseIssue(object):
	"""Problem met and skipped while reading a dump."""

	kind: str
	message: str
	offset: Optional[int] = None
	article_id: Optional[str] = None

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary."""
		return {'kind': self.kind, 'message': self.message,
		        'offset': self.offset, 'article_id': self.article_id}


class _PageState(object):
	"""What is known about the page being read."""

	__slots__ = ('article_id', 'title', 'namespace', 'accepted', 'started')

	def __init__(self):
		self.article_id = None
		self.title = ''
		self.namespace = None
		#: None until decided (at the first revision, or at the page end)
		self.accepted = None
		#: ArticleStart emitted
		self.started = False


def map_revision(revision, article_id):
	"""Build a block from a ``<revision>`` element.

	>>> xml = ('<revision><id>5</id><timestamp>2020-01-01T00:00:00Z'
	...        '</timestamp><text bytes="2">hi</text></revision>')
	>>> block = map_revision(etree.fromstring(xml), '9')
	>>> block.article_id, block.revision_id, block.text.text
	('9', '5', 'hi')

	Args:
		revision: lxml element of the revision
		article_id (str): id of the enclosing page

	Returns:
		Block

	Raises:
		MalformedRevisionError: ``<id>`` or ``<timestamp>`` is missing

	"""
	values = {}
	contributor = None
	text = TextPayload()
	for child in revision:
		name = _local(child.tag)
		if name in ('id', 'timestamp', 'format', 'sha1'):
			values[name] = (child.text or '').strip()
		elif name == 'comment':
			if not child.get('deleted'):
				values['comment'] = child.text or ''
		elif name == 'contributor':
			contributor = _map_contributor(child)
		elif name == 'text':
			deleted = bool(child.get('deleted'))
			text = TextPayload(bytes=child.get('bytes'),
			                   text='' if deleted else (child.text or ''),
			                   deleted=deleted)
		# parentid, minor, model, origin... are not part of a block

	for required in ('id', 'timestamp'):
		if not values.get(required):
			raise MalformedRevisionError(
			    "revision without <{}> in article {}".format(required,
			                                                 article_id),
			    article_id=article_id)
	return Block(article_id=article_id,
	             revision_id=values['id'],
	             timestamp=values['timestamp'],
	             contributor=contributor,
	             comment=values.get('comment'),
	             format=values.get('format') or None,
	             text=text,
	             sha1=values.get('sha1') or None,
	             )


def _map_contributor(element):
	if element.get('deleted'):
		return Contributor(extras={'deleted': True})
	values = {}
	for child in element:
		name = _local(child.tag)
		if name in ('username', 'id', 'ip'):
			values[name] = child.text or ''
	return Contributor(**values)


def _release(element):
	"""Free an element and the siblings before it."""
	element.clear()
	parent = element.getparent()
	if parent is not None:
		while element.getprevious() is not None:
			del parent[0]


class DumpReader(object):
	"""Pull-based event stream over one dump file.

	A reader is single-consumer; use one reader per file.

	Args:
		source (DumpSource or str): dump to read
		namespaces (iterable of int): namespaces to keep, None for all
		on_error (str): ``'skip'`` or ``'raise'`` (see module doc)
		chunk_size (int): decompressed bytes fed to the parser at once

	Raises:
		DumpOpenError: unreadable file or unknown codec
		DumpFormatError: the root element is not ``<mediawiki>``

	"""

	def __init__(self, source, namespaces=(0,), on_error='skip',
	             chunk_size=CHUNK_SIZE):
		if not isinstance(source, DumpSource):
			source = DumpSource.detect(source)
		if on_error not in ('skip', 'raise'):
			raise ValueError("on_error must be 'skip' or 'raise'")
		self.source = source
		self.namespaces = None if namespaces is None else frozenset(namespaces)
		self.on_error = on_error
		self.chunk_size = chunk_size
		#: list of :class:`ParseIssue`
		self.issues = []
		#: decompressed bytes read so far
		self.offset = 0

		self._pending = deque()
		self._stack = []
		self._page = None
		self._root_seen = False
		self._eof = False
		self._ended = False
		self._broken = False
		self._resync = False
		self._carry = b''
		self._remainder = b''
		# newlines fed to the current parser, for error positions
		self._lines = 0
		self._floor = 0
		self._tail = b''
		try:
			self._stream = source.open()
		except OSError as error:
			raise DumpOpenError("can not open {}: {}".format(source.path,
			                                                 error)) from error
		self._parser = self._new_parser()
		try:
			self._expect_root()
		except Exception:
			self.close()
			raise

	def __enter__(self):
		return self

	def __exit__(self, exc_type, exc_val, exc_tb):
		self.close()

	def __iter__(self):
		while not self._ended:
			yield self.next_event()

	def close(self):
		"""Release the underlying file."""
		if self._stream is not None:
			self._stream.close()
			self._stream = None

	@staticmethod
	def _new_parser():
		return etree.XMLPullParser(events=('start', 'end'),
		                           huge_tree=True,
		                           remove_comments=True,
		                           remove_pis=True,
		                           resolve_entities=False,
		                           no_network=True)

	def _expect_root(self):
		while not self._root_seen and not self._eof:
			self._pump()
		if not self._root_seen:
			raise DumpFormatError("{}: no <mediawiki> root element".format(
			                      self.source.path))

	def next_event(self):
		"""Return the next event.

		Returns:
			one of :class:`ArticleStart`, :class:`Revision`,
			:class:`ArticleEnd`, :class:`DumpEnd`

		Raises:
			DumpSyntaxError: malformed XML (``on_error='raise'`` only)
			MalformedRevisionError: revision without id or timestamp
				(``on_error='raise'`` only)
			DumpError: called again after :class:`DumpEnd`

		"""
		if self._ended:
			raise DumpError("{}: dump already ended".format(self.source.path))
		while not self._pending:
			if self._broken:
				raise DumpSyntaxError("parser stopped, call skip_article()",
				                      offset=self.offset)
			self._pump()
		event = self._pending.popleft()
		if isinstance(event, Exception):
			# queued in document order, after the events parsed before it
			raise event
		if isinstance(event, DumpEnd):
			self._ended = True
			self.close()
		return event

	def skip_article(self):
		"""Resume after a syntax error, at the next ``<page>``."""
		if self._broken:
			self._broken = False
			self._start_resync()

	# feeding

	def _pump(self):
		"""Feed one chunk to the parser, or finish at end of stream."""
		if not self._eof:
			chunk = self._stream.read(self.chunk_size)
			if chunk:
				chunk_offset = self.offset
				self.offset += len(chunk)
				if self._resync:
					chunk = self._find_page(chunk)
					if chunk is None:
						return
				self._feed(chunk, chunk_offset)
				return
			self._eof = True
			if self._resync and self._carry:
				# the chunk that failed may still hold later pages
				chunk = self._find_page(b'')
				if chunk is not None:
					self._feed(chunk, self.offset)
					return
		self._finish()

	def _feed(self, data, offset):
		try:
			self._parser.feed(data)
		except etree.XMLSyntaxError as error:
			position = self._error_position(error, data)
			if position is None:
				# reported in an earlier chunk
				self._remainder = self._tail + data[self._floor:]
			else:
				self._remainder = data[max(position, self._floor):]
			# events parsed before the error are still valid
			try:
				self._drain()
			except etree.XMLSyntaxError:
				pass
			self._syntax_error(error, offset)
			return
		self._lines += data.count(b'\n')
		self._tail = data[-8:]
		self._floor = 0
		try:
			self._drain()
		except etree.XMLSyntaxError as error:
			self._remainder = b''
			self._syntax_error(error, offset)

	def _error_position(self, error, data):
		"""Byte position of `error` in ``data``, None if before ``data``."""
		line, column = getattr(error, 'position', None) or (0, 0)
		relative = line - self._lines - 1
		if line <= 0 or relative < 0:
			return None
		position = 0
		for _ in range(relative):
			position = data.find(b'\n', position) + 1
			if position == 0:
				return None
		return position + max(column - 1, 0)

	def _finish(self):
		self._eof = True
		if not self._resync:
			try:
				self._parser.close()
				self._drain()
			except etree.XMLSyntaxError as error:
				if self._root_seen or self.on_error == 'raise':
					self._syntax_error(error, self.offset, resume=False)
		self._close_page()
		if self._root_seen:
			self._pending.append(DumpEnd())
		self._resync = False

	def _drain(self):
		for action, element in self._parser.read_events():
			self._handle(action, element)

	def _find_page(self, chunk):
		data = self._carry + chunk
		match = _PAGE_START.search(data)
		if match is None:
			self._carry = data[-8:]
			return None
		self._resync = False
		self._carry = b''
		self._parser = self._new_parser()
		self._stack = []
		self._lines = 0
		self._tail = b''
		# the original root tag is gone, open a bare one
		self._floor = len(_BARE_ROOT) + 1
		return _BARE_ROOT + data[match.start():]

	def _start_resync(self):
		self._close_page()
		self._stack = []
		self._carry, self._remainder = self._remainder, b''
		if self._eof and not self._carry:
			self._pending.append(DumpEnd())
		else:
			self._resync = True

	def _syntax_error(self, error, offset, resume=True):
		article_id = self._page.article_id if self._page else None
		if not self._root_seen:
			raise DumpFormatError("{}: not a MediaWiki dump ({})".format(
			                      self.source.path, error)) from error
		if self.on_error == 'raise':
			self._broken = resume
			failure = DumpSyntaxError(str(error), offset=offset,
			                          article_id=article_id,
			                          line=getattr(error, 'lineno', None))
			failure.__cause__ = error
			self._pending.append(failure)
			return
		issue = ParseIssue('syntax', str(error), offset, article_id)
		self.issues.append(issue)
		logger.warning("{}: malformed XML skipped".format(self.source.path),
		               extra={'fields': issue.config})
		if resume:
			self._start_resync()

	# events

	def _handle(self, action, element):
		name = _local(element.tag)
		if name is None:
			return
		if action == 'start':
			depth = len(self._stack)
			self._stack.append(name)
			if depth == 0:
				if name != 'mediawiki':
					raise DumpFormatError(
					    "{}: root element is <{}>, not <mediawiki>".format(
					        self.source.path, name))
				self._root_seen = True
			elif depth == 1 and name == 'page':
				self._page = _PageState()
			elif depth == 2 and name == 'revision' and self._page is not None:
				self._open_article()
			return

		self._stack.pop()
		depth = len(self._stack)
		if depth == 1:
			if name == 'page':
				self._end_page(element)
			else:
				# siteinfo and friends: nothing needed from them
				_release(element)
		elif (depth == 2 and self._page is not None
		      and self._stack[-1] == 'page'):
			if name == 'revision':
				self._end_revision(element)
			elif name == 'title':
				self._page.title = element.text or ''
			elif name == 'id':
				self._page.article_id = (element.text or '').strip() or None
			elif name == 'ns':
				try:
					self._page.namespace = int(element.text)
				except (TypeError, ValueError):
					self._page.namespace = None

	def _open_article(self):
		page = self._page
		if page.accepted is not None:
			return
		if not page.article_id:
			page.accepted = False
			self._record(MalformedRevisionError(
			    "page without <id> before its revisions ({!r})".format(
			        page.title)))
			return
		namespace = page.namespace if page.namespace is not None else 0
		page.accepted = (self.namespaces is None
		                 or namespace in self.namespaces)
		if page.accepted:
			page.started = True
			self._pending.append(ArticleStart(article_id=page.article_id,
			                                  title=page.title,
			                                  namespace=page.namespace))

	def _end_revision(self, element):
		page = self._page
		self._open_article()
		if page.accepted:
			try:
				block = map_revision(element, page.article_id)
			except MalformedRevisionError as error:
				_release(element)
				self._record(error)
				return
			self._pending.append(Revision(block))
		_release(element)

	def _end_page(self, element):
		self._open_article()
		self._close_page()
		_release(element)

	def _close_page(self):
		if self._page is not None and self._page.started:
			self._pending.append(ArticleEnd(self._page.article_id))
		self._page = None

	def _record(self, error):
		if self.on_error == 'raise':
			self._pending.append(error)
			return
		issue = ParseIssue('revision', str(error), self.offset,
		                   getattr(error, 'article_id', None))
		self.issues.append(issue)
		logger.warning("{}: malformed revision skipped".format(
		               self.source.path), extra={'fields': issue.config})


def open_dump(source, **kwargs):
	"""Open a dump for reading.

	Args:
		source (DumpSource or str): dump file
		**kwargs: see :class:`DumpReader`

	Returns:
		DumpReader

	"""
	return DumpReader(source, **kwargs)


def next_event(reader):
	"""Return the next event of an open dump (see :class:`DumpReader`)."""
	return reader.next_event()
