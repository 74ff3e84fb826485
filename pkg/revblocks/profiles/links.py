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



"""Clean text and links of every revision.

The wikitext is parsed with mwparserfromhell and flattened with a
small rule set:

-	``[[Target|label]]`` renders as its label (or target), and Target
	goes to the internal links;
-	``[[File:...]]`` and ``[[Image:...]]`` render as nothing, and go to
	the images;
-	``[http://... title]`` and bare URLs render as their title
	(or URL); http and https ones go to the external links;
-	templates, ``<ref>`` tags and comments render as nothing;
-	other tags and headings render as their content.

Templates are never expanded, and links nested in link labels are not
collected.
"""


from dataclasses import dataclass, field
from typing import List

import mwparserfromhell
from mwparserfromhell.nodes import (
	Comment,
	ExternalLink,
	Heading,
	HTMLEntity,
	Tag,
	Template,
	Text,
	Wikilink,
)

from revblocks.core.block import block_text
from revblocks.pipeline.modifier import ModifierProfile


IMAGE_NAMESPACES = ('file', 'image')
#: tags whose content is not part of the text
SKIPPED_TAGS = ('ref', 'references', 'gallery', 'math', 'nowiki')
#: only these links are collected, mailto: ftp: and others are just text
WEB_SCHEMES = ('http://', 'https://')


@dataclass
class LinkExtraction(object):
	"""Clean text and links of one revision."""

	clean_text: str = ''
	external_links: List[str] = field(default_factory=list)
	internal_links: List[str] = field(default_factory=list)
	images: List[str] = field(default_factory=list)

	@property
	def urls(self):
		"""External links then internal link targets."""
		return self.external_links + self.internal_links


class _Collector(object):
	"""Ordered, duplicate-free link lists."""

	def __init__(self):
		self.external = {}
		self.internal = {}
		self.images = {}

	def render(self, wikicode):
		if wikicode is None:
			return ''
		return ''.join(self._render_node(node) for node in wikicode.nodes)

	def _render_node(self, node):
		if isinstance(node, Text):
			return str(node)
		if isinstance(node, Wikilink):
			target = str(node.title).strip()
			namespace, colon, _ = target.partition(':')
			if colon and namespace.strip().lower() in IMAGE_NAMESPACES:
				self.images.setdefault(target, None)
				return ''
			self.internal.setdefault(target, None)
			if node.text is None:
				return target
			return self.render(node.text)
		if isinstance(node, ExternalLink):
			url = str(node.url).strip()
			if url.lower().startswith(WEB_SCHEMES):
				self.external.setdefault(url, None)
			if node.title is None:
				return url
			return self.render(node.title).strip()
		if isinstance(node, (Template, Comment)):
			return ''
		if isinstance(node, Tag):
			if str(node.tag).strip().lower() in SKIPPED_TAGS:
				return ''
			return self.render(node.contents)
		if isinstance(node, Heading):
			return self.render(node.title).strip()
		if isinstance(node, HTMLEntity):
			return node.normalize()
		# arguments, wikicode leftovers
		return ''


def extract_links(text):
	"""Flatten wikitext and collect its links.

	>>> found = extract_links('See [[Apple]] and [https://x.org X].')
	>>> found.clean_text, found.internal_links, found.external_links
	('See Apple and X.', ['Apple'], ['https://x.org'])
	>>> extract_links('[[File:Cat.jpg|thumb]]').images
	['File:Cat.jpg']

	Args:
		text (str): wikitext

	Returns:
		LinkExtraction

	"""
	if not text:
		return LinkExtraction()
	collector = _Collector()
	clean_text = collector.render(mwparserfromhell.parse(text))
	return LinkExtraction(clean_text=clean_text,
	                      external_links=list(collector.external),
	                      internal_links=list(collector.internal),
	                      images=list(collector.images))


class LinkExtractProfile(ModifierProfile):
	"""Replace each block by its clean text and links."""

	cli_name = 'links'

	def block(self, content, metadata):
		found = extract_links(block_text(content))
		return {'revision_id': content.get('revision_id'),
		        'clean_text': found.clean_text,
		        'external_links': found.external_links,
		        'internal_links': found.internal_links,
		        'images': found.images,
		        }, metadata
