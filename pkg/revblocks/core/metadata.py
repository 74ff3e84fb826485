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


"""Segment metadata, one sidecar line per article."""


from dataclasses import dataclass, field, replace
from typing import Optional


#: key order of a sidecar line
METADATA_KEYS = ('warehouse', 'article_id', 'title', 'namespace',
                 'byte_start', 'byte_length', 'uncompressed_bytes',
                 'num_revisions', 'first_timestamp', 'last_timestamp',
                 'custom')


@dataclass(frozen=True)
class SegmentMetadata(object):
	"""Identity, counters and frame coordinates of one segment.

	The frame of the segment is the byte range
	``[byte_start, byte_start + byte_length)`` of the `warehouse` file.

	>>> meta = SegmentMetadata(warehouse='block_000_00000.jsonl.gz',
	...                        article_id='9', title='Nine',
	...                        byte_start=0, byte_length=20)
	>>> meta.byte_end
	20
	>>> 'first_timestamp' in meta.config
	False
	"""

	warehouse: str
	article_id: str
	title: str
	byte_start: int
	byte_length: int
	namespace: Optional[int] = None
	uncompressed_bytes: int = 0
	num_revisions: int = 0
	first_timestamp: Optional[str] = None
	last_timestamp: Optional[str] = None
	#: article-level data attached by profiles (word counts, ...)
	custom: dict = field(default_factory=dict)

	@property
	def byte_end(self):
		"""Offset just past the frame."""
		return self.byte_start + self.byte_length

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary, keys in sidecar order."""
		config = {'warehouse': self.warehouse,
		          'article_id': self.article_id,
		          'title': self.title,
		          'namespace': self.namespace,
		          'byte_start': self.byte_start,
		          'byte_length': self.byte_length,
		          'uncompressed_bytes': self.uncompressed_bytes,
		          'num_revisions': self.num_revisions,
		          }
		if self.first_timestamp is not None:
			config['first_timestamp'] = self.first_timestamp
		if self.last_timestamp is not None:
			config['last_timestamp'] = self.last_timestamp
		config['custom'] = dict(self.custom)
		return config

	@classmethod
	def from_config(cls, config):
		"""Alternate constructor.

		Args:
			config (dict): Configuration dictionary (a decoded sidecar line)

		Returns:
			SegmentMetadata: new instance

		Raises:
			KeyError: missing key
			ValueError: wrong value

		"""
		for key in ('byte_start', 'byte_length', 'uncompressed_bytes',
		            'num_revisions'):
			value = config.get(key, 0)
			if not isinstance(value, int) or isinstance(value, bool) \
			        or value < 0:
				raise ValueError("{} must be a non-negative integer".format(key))
		namespace = config.get('namespace')
		if namespace is not None and not isinstance(namespace, int):
			raise ValueError("namespace must be an integer")
		custom = config.get('custom') or {}
		if not isinstance(custom, dict):
			raise ValueError("custom must be an object")
		return cls(warehouse=config['warehouse'],
		           article_id=str(config['article_id']),
		           title=config.get('title', ''),
		           namespace=namespace,
		           byte_start=config['byte_start'],
		           byte_length=config['byte_length'],
		           uncompressed_bytes=config.get('uncompressed_bytes', 0),
		           num_revisions=config.get('num_revisions', 0),
		           first_timestamp=config.get('first_timestamp'),
		           last_timestamp=config.get('last_timestamp'),
		           custom=dict(custom),
		           )

	def view(self):
		"""Return a mutable dictionary copy, as handed to profiles."""
		return self.config

	def replace(self, **changes):
		"""Return a copy with some fields changed."""
		return replace(self, **changes)
