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



"""Differences between consecutive revisions of an article."""


from difflib import SequenceMatcher

from revblocks.core.block import block_text
from revblocks.pipeline.modifier import ModifierProfile
from revblocks.profiles.links import extract_links


def line_changes(previous, current):
	"""Return the line changes turning `previous` into `current`.

	Each change is ``{"type": "remove"|"add", "content": line, "line": n}``
	where `n` is the line index in `previous` for removals
	and in `current` for additions.

	>>> line_changes('a\\nb', 'a\\nc')
	[{'type': 'remove', 'content': 'b', 'line': 1}, \
{'type': 'add', 'content': 'c', 'line': 1}]
	>>> line_changes('same', 'same')
	[]
	"""
	old = previous.split('\n')
	new = current.split('\n')
	matcher = SequenceMatcher(None, old, new, autojunk=False)
	changes = []
	for tag, i1, i2, j1, j2 in matcher.get_opcodes():
		if tag in ('replace', 'delete'):
			changes.extend({'type': 'remove', 'content': old[i], 'line': i}
			               for i in range(i1, i2))
		if tag in ('replace', 'insert'):
			changes.extend({'type': 'add', 'content': new[j], 'line': j}
			               for j in range(j1, j2))
	return changes


def apply_changes(previous, changes):
	"""Replay :func:`line_changes` output on the previous text.

	>>> apply_changes('a\\nb', line_changes('a\\nb', 'x\\na\\nc'))
	'x\\na\\nc'

	Raises:
		ValueError: unknown change type

	"""
	lines = previous.split('\n')
	removed = set()
	added = []
	for change in changes:
		if change['type'] == 'remove':
			removed.add(change['line'])
		elif change['type'] == 'add':
			added.append(change)
		else:
			raise ValueError("unknown change type {!r}".format(change['type']))
	result = [line for index, line in enumerate(lines) if index not in removed]
	for change in sorted(added, key=lambda change: change['line']):
		result.insert(change['line'], change['content'])
	return '\n'.join(result)


class UrlDiffProfile(ModifierProfile):
	"""Replace each block by the URLs it added and removed.

	URLs are the external links and the internal link targets.
	The first revision of an article is compared to an empty one.
	"""

	cli_name = 'urldiff'

	def __init__(self):
		self.previous = []

	def block(self, content, metadata):
		urls = extract_links(block_text(content)).urls
		current = set(urls)
		before = set(self.previous)
		result = {'article_id': content.get('article_id'),
		          'revision_id': content.get('revision_id'),
		          'timestamp': content.get('timestamp'),
		          'added_urls': [url for url in urls if url not in before],
		          'removed_urls': [url for url in self.previous
		                           if url not in current],
		          }
		self.previous = urls
		return result, metadata


class EditDiffProfile(ModifierProfile):
	"""Replace each block by its line changes against the previous one.

	The first revision of an article only sets the reference text,
	it is dropped.  ``summary`` is left empty for later processing.
	"""

	cli_name = 'editdiff'

	def __init__(self):
		self.previous = None

	def block(self, content, metadata):
		text = block_text(content)
		previous, self.previous = self.previous, text
		if previous is None:
			return None, metadata
		return {'changes': line_changes(previous, text),
		        'summary': None,
		        'timestamp': content.get('timestamp'),
		        }, metadata
