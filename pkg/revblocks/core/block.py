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


"""Blocks: one revision of one article, as one JSON line.

The canonical line has its keys in a fixed order::

	{"article_id": "...", "revision_id": "...", "timestamp": "...",
	 "contributor": {"username": "...", "id": "..."},
	 "comment": "...", "format": "...",
	 "text": {"@bytes": "...", "#text": "..."}, "sha1": "..."}

Absent optional values omit their key entirely.
Identifiers are kept as strings, verbatim from the dump.

>>> block = Block(article_id='9', revision_id='5',
...               timestamp='2020-01-01T00:00:00Z',
...               text=TextPayload(bytes='2', text='hi'))
>>> serialize_block(block)
b'{"article_id":"9","revision_id":"5","timestamp":"2020-01-01T00:00:00Z","text":{"@bytes":"2","#text":"hi"}}\\n'
>>> parse_block_line(serialize_block(block)) == block
True
"""


import json
import re
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Optional

from revblocks.core.errors import (
	BlockParseError,
	BlockSerializationError,
	BlockValidationError,
)
from revblocks.shared.tools import is_timestamp


#: key order of a serialized block
BLOCK_KEYS = ('article_id', 'revision_id', 'timestamp', 'contributor',
              'comment', 'format', 'text', 'sha1')
#: keys without which a line is not a block
REQUIRED_KEYS = ('article_id', 'revision_id', 'timestamp', 'text')

_POSITIVE_INT = re.compile(r'[0-9]+\Z')
_BASE36 = re.compile(r'[0-9a-z]+\Z')


class Violation(namedtuple('Violation', 'field rule')):
	"""One broken rule, as reported by :func:`validate_block`.

	>>> str(Violation('timestamp', 'not ISO-8601'))
	'timestamp: not ISO-8601'
	"""

	__slots__ = ()

	def __str__(self):
		return '{}: {}'.format(self.field, self.rule)


def _optional_str(config, key, field_name, violations):
	value = config.get(key)
	if value is not None and not isinstance(value, str):
		violations.append(Violation(field_name, 'not a string'))
		return None
	return value


@dataclass(frozen=True)
class Contributor(object):
	"""Author of a revision.

	Registered users have `username` and `id`, anonymous edits an `ip`.
	"""

	username: Optional[str] = None
	id: Optional[str] = None
	ip: Optional[str] = None
	#: unknown keys, kept for forward compatibility
	extras: dict = field(default_factory=dict)

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary."""
		config = {}
		for key in ('username', 'id', 'ip'):
			value = getattr(self, key)
			if value is not None:
				config[key] = value
		config.update(self.extras)
		return config

	@classmethod
	def from_config(cls, config):
		"""Alternate constructor.

		Args:
			config (dict): Configuration dictionary

		Returns:
			Contributor: new Contributor instance

		Raises:
			BlockValidationError: wrong value types

		"""
		if not isinstance(config, dict):
			raise BlockValidationError([Violation('contributor',
			                                      'not an object')])
		violations = []
		values = {key: _optional_str(config, key, 'contributor.' + key,
		                             violations)
		          for key in ('username', 'id', 'ip')}
		if violations:
			raise BlockValidationError(violations)
		extras = {key: value for key, value in config.items()
		          if key not in values}
		return cls(extras=extras, **values)


@dataclass(frozen=True)
class TextPayload(object):
	"""Revision text and its declared size.

	`bytes` is recorded verbatim from the dump,
	even when it disagrees with the actual length of `text`.
	Suppressed texts have ``deleted=True`` and an empty `text`.
	"""

	bytes: Optional[str] = None
	text: str = ''
	deleted: bool = False
	extras: dict = field(default_factory=dict)

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary."""
		config = {}
		if self.bytes is not None:
			config['@bytes'] = self.bytes
		config['#text'] = self.text
		if self.deleted:
			config['deleted'] = True
		config.update(self.extras)
		return config

	@classmethod
	def from_config(cls, config):
		"""Alternate constructor.

		Args:
			config (dict): Configuration dictionary

		Returns:
			TextPayload: new TextPayload instance

		Raises:
			BlockValidationError: wrong value types

		"""
		if not isinstance(config, dict):
			raise BlockValidationError([Violation('text', 'not an object')])
		violations = []
		size = _optional_str(config, '@bytes', 'text.@bytes', violations)
		text = config.get('#text', '')
		if not isinstance(text, str):
			violations.append(Violation('text.#text', 'not a string'))
		deleted = config.get('deleted', False)
		if not isinstance(deleted, bool):
			violations.append(Violation('text.deleted', 'not a boolean'))
		if violations:
			raise BlockValidationError(violations)
		extras = {key: value for key, value in config.items()
		          if key not in ('@bytes', '#text', 'deleted')}
		return cls(bytes=size, text=text, deleted=deleted, extras=extras)


@dataclass(frozen=True)
class Block(object):
	"""One revision of one article.

	Blocks are immutable values; they are safe to share between workers.
	"""

	article_id: str
	revision_id: str
	timestamp: str
	text: TextPayload = field(default_factory=TextPayload)
	contributor: Optional[Contributor] = None
	comment: Optional[str] = None
	format: Optional[str] = None
	sha1: Optional[str] = None
	#: unknown top-level keys, serialized after the known ones
	extras: dict = field(default_factory=dict)

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary, keys in canonical order."""
		config = {'article_id': self.article_id,
		          'revision_id': self.revision_id,
		          'timestamp': self.timestamp,
		          }
		if self.contributor is not None:
			config['contributor'] = self.contributor.config
		if self.comment is not None:
			config['comment'] = self.comment
		if self.format is not None:
			config['format'] = self.format
		config['text'] = self.text.config
		if self.sha1 is not None:
			config['sha1'] = self.sha1
		for key, value in self.extras.items():
			config.setdefault(key, value)
		return config

	@classmethod
	def from_config(cls, config):
		"""Alternate constructor.

		Args:
			config (dict): Configuration dictionary (a decoded block line)

		Returns:
			Block: new Block instance

		Raises:
			BlockValidationError: missing keys or wrong value types

		"""
		violations = [Violation(key, 'missing') for key in REQUIRED_KEYS
		              if key not in config]
		for key in ('article_id', 'revision_id', 'timestamp'):
			if key in config and not isinstance(config[key], str):
				violations.append(Violation(key, 'not a string'))
		for key in ('comment', 'format', 'sha1'):
			_optional_str(config, key, key, violations)
		if violations:
			raise BlockValidationError(violations)

		contributor = config.get('contributor')
		if contributor is not None:
			contributor = Contributor.from_config(contributor)
		extras = {key: value for key, value in config.items()
		          if key not in BLOCK_KEYS}
		return cls(article_id=config['article_id'],
		           revision_id=config['revision_id'],
		           timestamp=config['timestamp'],
		           text=TextPayload.from_config(config['text']),
		           contributor=contributor,
		           comment=config.get('comment'),
		           format=config.get('format'),
		           sha1=config.get('sha1'),
		           extras=extras,
		           )


def serialize_block(block):
	"""Return the canonical JSON line of a block.

	The line is UTF-8, ends with a single LF and holds no other LF
	(newlines inside strings are escaped by JSON).

	Args:
		block (Block): block to encode

	Returns:
		bytes: one line

	Raises:
		BlockSerializationError: a string holds invalid unicode
			(lone surrogates), which points to a parser bug upstream

	"""
	return dump_object_line(block.config)


def dump_object_line(obj):
	"""Encode any JSON object as one canonical line.

	Blocks that no longer follow the block schema
	(after a modification) go through this function.

	Args:
		obj (dict): JSON-compatible object

	Returns:
		bytes: one LF-terminated line

	Raises:
		BlockSerializationError: invalid unicode, or not JSON-compatible

	"""
	try:
		text = json.dumps(obj, ensure_ascii=False, separators=(',', ':'))
		return text.encode('utf-8') + b'\n'
	except (UnicodeEncodeError, TypeError, ValueError) as error:
		raise BlockSerializationError(str(error)) from error


def parse_object_line(line):
	"""Decode one JSONL line into a generic JSON object.

	Args:
		line (bytes or str): one line, with or without its LF

	Returns:
		dict

	Raises:
		BlockParseError: malformed JSON, with the byte position
		BlockValidationError: the line is valid JSON but not an object

	"""
	if isinstance(line, bytes):
		try:
			line = line.decode('utf-8')
		except UnicodeDecodeError as error:
			raise BlockParseError('invalid UTF-8', error.start) from error
	try:
		obj = json.loads(line)
	except json.JSONDecodeError as error:
		position = len(line[:error.pos].encode('utf-8'))
		raise BlockParseError(error.msg, position) from error
	if not isinstance(obj, dict):
		raise BlockValidationError([Violation('(line)', 'not an object')])
	return obj


def parse_block_line(line):
	"""Decode one line that follows the block schema.

	Unknown keys are kept in :attr:`Block.extras`.

	>>> parse_block_line(b"{}")  # doctest: +ELLIPSIS
	Traceback (most recent call last):
	...
	revblocks.core.errors.BlockValidationError: invalid block: article_id: ...

	The error lists ``revision_id``, ``timestamp`` and ``text`` as well.

	Args:
		line (bytes or str): one line

	Returns:
		Block

	Raises:
		BlockParseError: malformed JSON
		BlockValidationError: schema violation (missing keys, wrong types)

	"""
	return Block.from_config(parse_object_line(line))


def _is_positive_int(value):
	return (isinstance(value, str) and bool(_POSITIVE_INT.match(value))
	        and int(value) > 0)


def validate_block(block):
	"""Check the block invariants.

	This is a total function: it reports, it never raises.

	>>> block = Block(article_id='9', revision_id='5',
	...               timestamp='yesterday')
	>>> [str(v) for v in validate_block(block)]
	['timestamp: not ISO-8601']

	Args:
		block (Block): block to check

	Returns:
		list of :class:`Violation`: empty if all invariants hold

	"""
	violations = []
	for key in ('article_id', 'revision_id'):
		if not _is_positive_int(getattr(block, key)):
			violations.append(Violation(key, 'not a positive integer'))
	if not is_timestamp(block.timestamp):
		violations.append(Violation('timestamp', 'not ISO-8601'))

	contributor = block.contributor
	if contributor is not None and not contributor.extras.get('deleted'):
		registered = (contributor.username is not None
		              or contributor.id is not None)
		if registered and contributor.ip is not None:
			violations.append(Violation('contributor', 'ambiguous identity'))
		elif registered and (contributor.username is None
		                     or contributor.id is None):
			violations.append(Violation('contributor', 'incomplete identity'))
		elif not registered and contributor.ip is None:
			violations.append(Violation('contributor', 'missing identity'))
		if (contributor.id is not None
		        and not _POSITIVE_INT.match(contributor.id)):
			violations.append(Violation('contributor.id',
			                            'not a decimal string'))

	size = block.text.bytes
	if size is not None and not _POSITIVE_INT.match(size):
		violations.append(Violation('text.@bytes',
		                            'not a non-negative integer'))
	if block.sha1 is not None and not _BASE36.match(block.sha1):
		violations.append(Violation('sha1', 'not lowercase base-36'))
	return violations


def block_text(content):
	"""Return the revision text of a decoded block object.

	>>> block_text({'text': {'#text': 'hi'}})
	'hi'

	Raises:
		KeyError: the object carries no ``text.#text``

	"""
	text = content.get('text')
	if not isinstance(text, dict) or not isinstance(text.get('#text'), str):
		raise KeyError('text.#text')
	return text['#text']
