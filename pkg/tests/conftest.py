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

import bz2
import gzip
import os
from xml.sax.saxutils import escape

import pytest

from revblocks.core.config import BuildConfig, MIN_WAREHOUSE_SIZE
from revblocks.pipeline.builder import Builder


EXPORT_NS = "http://www.mediawiki.org/xml/export-0.11/"


def revision_xml(rev):
	"""Return the <revision> element of a revision dictionary."""
	parts = ["<revision>"]
	if 'id' in rev:
		parts.append("<id>{}</id>".format(rev['id']))
	parts.append("<parentid>1</parentid>")
	if 'timestamp' in rev:
		parts.append("<timestamp>{}</timestamp>".format(rev['timestamp']))
	if 'ip' in rev:
		parts.append("<contributor><ip>{}</ip></contributor>".format(
		             rev['ip']))
	elif 'username' in rev:
		parts.append("<contributor><username>{}</username><id>{}</id>"
		             "</contributor>".format(escape(rev['username']),
		                                     rev.get('user_id', '1')))
	if 'comment' in rev:
		parts.append("<comment>{}</comment>".format(escape(rev['comment'])))
	parts.append("<model>wikitext</model><format>text/x-wiki</format>")
	text = rev.get('text', '')
	parts.append('<text bytes="{}" xml:space="preserve">{}</text>'.format(
	             len(text.encode('utf-8')), escape(text)))
	parts.append("<sha1>{}</sha1>".format(rev.get('sha1', 'abc123')))
	parts.append("</revision>")
	return "".join(parts)


def page_xml(page):
	"""Return the <page> element of a page dictionary."""
	parts = ["<page>",
	         "<title>{}</title>".format(escape(page['title'])),
	         "<ns>{}</ns>".format(page.get('ns', 0)),
	         "<id>{}</id>".format(page['id'])]
	parts.extend(revision_xml(rev) for rev in page['revisions'])
	parts.append("</page>")
	return "\n".join(parts)


def dump_xml(pages):
	"""Return a complete dump document."""
	return "\n".join([
	    '<mediawiki xmlns="{}" version="0.11" xml:lang="en">'.format(
	        EXPORT_NS),
	    "<siteinfo><sitename>Test</sitename></siteinfo>",
	] + [page_xml(page) for page in pages] + ["</mediawiki>\n"])


def write_dump(path, pages=None, text=None):
	"""Write a dump, compressed according to the extension.

	Returns:
		str: path
	"""
	data = (text if text is not None else dump_xml(pages)).encode('utf-8')
	path = str(path)
	if path.endswith('.bz2'):
		with bz2.open(path, 'wb') as f:
			f.write(data)
	elif path.endswith('.gz'):
		with gzip.open(path, 'wb') as f:
			f.write(data)
	else:
		with open(path, 'wb') as f:
			f.write(data)
	return path


def rev(rev_id, day, text='', username='Alice'):
	"""Shorthand for a revision dictionary, `day` of January 2020."""
	return {'id': str(rev_id),
	        'timestamp': '2020-01-{:02d}T00:00:00Z'.format(day),
	        'username': username,
	        'text': text}


#: 3 articles, 7 revisions, split over 2 dump files
PAGES_A = [
    {'id': '9', 'title': 'Nine', 'revisions': [
        rev(91, 1, 'See [[Apple]].'),
        rev(92, 2, 'See [[Apple]] and [https://x.org X].'),
        rev(93, 3, 'See [https://x.org X].\nNew line.'),
    ]},
    {'id': '10', 'title': 'Ten', 'revisions': [
        rev(101, 4, 'ten'),
        rev(102, 5, 'ten\nmore'),
    ]},
]
PAGES_B = [
    {'id': '11', 'title': 'Eleven', 'revisions': [
        rev(111, 6, 'eleven'),
        rev(112, 7, 'eleven [[Pear]]'),
    ]},
    {'id': '12', 'title': 'Talk:Eleven', 'ns': 1, 'revisions': [
        rev(121, 8, 'talk'),
    ]},
]


@pytest.fixture
def dump_dir(tmp_path):
	"""Return a directory with two dump files (bz2 and gzip)."""
	directory = tmp_path / 'input'
	directory.mkdir()
	write_dump(directory / 'a-pages-meta-history1.xml.bz2', PAGES_A)
	write_dump(directory / 'b-pages-meta-history2.xml.gz', PAGES_B)
	return str(directory)


def build_dataset(input_dir, output_dir, **kwargs):
	"""Build a dataset and return its report."""
	kwargs.setdefault('num_workers', 1)
	kwargs.setdefault('warehouse_size_limit', MIN_WAREHOUSE_SIZE)
	builder = Builder(BuildConfig(output_dir=str(output_dir), **kwargs))
	builder.preload(input_dir)
	return builder.build()


@pytest.fixture
def dataset(dump_dir, tmp_path):
	"""Return the directory of a dataset built from `dump_dir`."""
	output = tmp_path / 'warehouses'
	report = build_dataset(dump_dir, output)
	assert report.fatal is None
	return str(output)


def dataset_lines(directory):
	"""Return every block line of a dataset, by article id."""
	from revblocks.store.dataset import iter_segment, read_metadata
	index = read_metadata(directory)
	return {meta.article_id: list(iter_segment(index, meta))
	        for meta in index.segments}


def listdir(directory):
	return sorted(os.listdir(str(directory)))
