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



"""Dataset directories: warehouses, sidecars and the run manifest.

A dataset is a flat directory of warehouse/sidecar pairs plus a
``manifest.json`` describing the run that produced it.
"""


import logging
logger = logging.getLogger(__name__)   # noqa: E402

import json
import os
import shutil
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import List

from revblocks import __version__
from revblocks.core.block import parse_object_line
from revblocks.core.errors import (
	BlockError,
	DatasetError,
	OutputExistsError,
)
from revblocks.core.metadata import SegmentMetadata
from revblocks.shared.tools import key_paths
from revblocks.store.warehouse import (
	WAREHOUSE_SUFFIX,
	open_segment,
	sidecar_path,
)


MANIFEST_NAME = 'manifest.json'
PARTIAL_MARKER = '_PARTIAL'


@dataclass
class WarehouseIndex(object):
	"""Sidecar content of one warehouse."""

	name: str
	path: str
	size: int
	segments: List[SegmentMetadata] = field(default_factory=list)


@dataclass
class DatasetIndex(object):
	"""Every segment of a dataset, grouped by warehouse.

	`violations` lists the consistency problems found while reading
	(gaps or overlaps between frames, size mismatches).
	"""

	directory: str
	warehouses: List[WarehouseIndex] = field(default_factory=list)
	violations: List[str] = field(default_factory=list)

	@property
	def segments(self):
		"""All segments, warehouse after warehouse, in frame order."""
		return [meta for warehouse in self.warehouses
		        for meta in warehouse.segments]

	def __len__(self):
		return sum(len(warehouse.segments) for warehouse in self.warehouses)

	def grouped(self):
		"""Return a dictionary warehouse name -> list of segments."""
		return {warehouse.name: list(warehouse.segments)
		        for warehouse in self.warehouses}

	def path_of(self, meta):
		"""Full path of the warehouse holding `meta`."""
		return os.path.join(self.directory, meta.warehouse)


def list_warehouses(directory):
	"""Return the sorted warehouse file names of a directory."""
	return sorted(name for name in os.listdir(directory)
	              if name.endswith(WAREHOUSE_SUFFIX))


def read_sidecar(path):
	"""Parse a sidecar file.

	Raises:
		DatasetError: unreadable file or unparseable line

	"""
	segments = []
	try:
		with open(path, 'rb') as f:
			for number, line in enumerate(f, start=1):
				if not line.strip():
					continue
				try:
					meta = SegmentMetadata.from_config(parse_object_line(line))
				except (BlockError, KeyError, ValueError, TypeError) as error:
					raise DatasetError("{}, line {}: unparseable metadata "
					                   "({})".format(path, number, error)) \
					    from error
				segments.append(meta)
	except OSError as error:
		raise DatasetError("can not read {}: {}".format(path, error)) \
		    from error
	return segments


def check_contiguity(name, segments, size):
	"""Check that the frames of a warehouse tile the whole file.

	>>> a = SegmentMetadata('w', '1', 'A', byte_start=0, byte_length=10)
	>>> b = SegmentMetadata('w', '2', 'B', byte_start=12, byte_length=8)
	>>> check_contiguity('w', [a, b], 20)[0]
	'w: segment of article 2 starts at 12, segment of article 1 ends at 10'

	Args:
		name (str): warehouse name, for the messages
		segments (list): SegmentMetadata in sidecar order
		size (int): warehouse file size

	Returns:
		list of str: violations, empty when consistent

	"""
	violations = []
	previous = None
	for meta in segments:
		if meta.warehouse != name:
			violations.append("{}: segment of article {} names warehouse "
			                  "{}".format(name, meta.article_id,
			                              meta.warehouse))
		if previous is None:
			if meta.byte_start != 0:
				violations.append("{}: first segment (article {}) starts at "
				                  "{}".format(name, meta.article_id,
				                              meta.byte_start))
		elif meta.byte_start != previous.byte_end:
			violations.append("{}: segment of article {} starts at {}, "
			                  "segment of article {} ends at {}".format(
			                      name, meta.article_id, meta.byte_start,
			                      previous.article_id, previous.byte_end))
		previous = meta
	end = previous.byte_end if previous is not None else 0
	if end != size:
		violations.append("{}: frames end at {}, file size is {}".format(
		                  name, end, size))
	return violations


def read_metadata(directory, strict=False):
	"""Read every sidecar of a dataset.

	Args:
		directory (str): dataset directory
		strict (bool): raise on consistency violations
			instead of reporting them

	Returns:
		DatasetIndex

	Raises:
		DatasetError: not a directory, no warehouses, missing sidecar,
			unparseable line; or violations when `strict`

	"""
	if not os.path.isdir(directory):
		raise DatasetError("{} is not a directory".format(directory))
	names = list_warehouses(directory)
	if not names:
		raise DatasetError("no warehouses found in {}".format(directory))
	index = DatasetIndex(directory=directory)
	for name in names:
		path = os.path.join(directory, name)
		sidecar = sidecar_path(path)
		if not os.path.exists(sidecar):
			raise DatasetError("missing sidecar for {}".format(name))
		warehouse = WarehouseIndex(name=name, path=path,
		                           size=os.path.getsize(path),
		                           segments=read_sidecar(sidecar))
		index.warehouses.append(warehouse)
		index.violations.extend(check_contiguity(name, warehouse.segments,
		                                         warehouse.size))
	if index.violations:
		logger.warning("{}: {} consistency violations".format(
		               directory, len(index.violations)))
		if strict:
			raise DatasetError("inconsistent dataset", index.violations)
	return index


def find_segment(index, article_id):
	"""Return the segment of an article, or None.

	Args:
		index (DatasetIndex): as returned by :func:`read_metadata`
		article_id (str or int): article to look for

	"""
	article_id = str(article_id)
	for meta in index.segments:
		if meta.article_id == article_id:
			return meta
	return None


def iter_segment(index, meta):
	"""Iterate over the lines of one segment of an indexed dataset."""
	return open_segment(index.path_of(meta), meta.byte_start,
	                    meta.byte_length)


def inspect_structure(directory, sample_n=10):
	"""Summarize a dataset without decoding it all.

	Only the first `sample_n` blocks are decoded, to collect the key
	paths of their JSON objects.

	Args:
		directory (str): dataset directory
		sample_n (int): blocks to sample, 0 for counts only

	Returns:
		dict: structure report

	Raises:
		DatasetError: as :func:`read_metadata`

	"""
	index = read_metadata(directory)
	segments = index.segments
	report = {
	    'dataset': directory,
	    'warehouses': len(index.warehouses),
	    'segments': len(segments),
	    'revisions': sum(meta.num_revisions for meta in segments),
	    'compressed_bytes': sum(w.size for w in index.warehouses),
	    'uncompressed_bytes': sum(meta.uncompressed_bytes
	                              for meta in segments),
	    'violations': list(index.violations),
	}
	paths = set()
	custom = set()
	sampled = 0
	for meta in segments:
		custom.update(meta.custom)
		if sampled >= sample_n or meta.num_revisions == 0:
			continue
		for line in iter_segment(index, meta):
			paths.update(key_paths(parse_object_line(line)))
			sampled += 1
			if sampled >= sample_n:
				break
	report['sampled_blocks'] = sampled
	report['key_paths'] = sorted(paths)
	report['custom_keys'] = sorted(custom)
	manifest = read_manifest(directory)
	if manifest is not None:
		report['manifest'] = {key: manifest.get(key)
		                      for key in ('kind', 'version', 'created')}
	return report


def write_manifest(directory, kind, config, inputs=(), totals=None):
	"""Write the manifest of a run.

	Args:
		directory (str): dataset directory
		kind (str): ``'build'`` or ``'modify'``
		config (dict): run configuration
		inputs (iterable): input files or dataset
		totals (dict): counters of the run report

	Returns:
		dict: the manifest

	"""
	manifest = {
	    'kind': kind,
	    'version': __version__,
	    'config': config,
	    'inputs': list(inputs),
	    'totals': dict(totals or {}),
	    'created': datetime.now(timezone.utc).isoformat(timespec='seconds'),
	}
	with open(os.path.join(directory, MANIFEST_NAME), 'w',
	          encoding='utf-8') as f:
		json.dump(manifest, f, indent=2, ensure_ascii=False)
		f.write('\n')
	return manifest


def read_manifest(directory):
	"""Return the manifest of a dataset, or None if there is none."""
	path = os.path.join(directory, MANIFEST_NAME)
	if not os.path.exists(path):
		return None
	with open(path, 'r', encoding='utf-8') as f:
		return json.load(f)


def prepare_output_dir(directory, overwrite=False):
	"""Make sure `directory` exists and is empty.

	Raises:
		OutputExistsError: not empty, and `overwrite` is False

	"""
	if os.path.isdir(directory) and os.listdir(directory):
		if not overwrite:
			raise OutputExistsError("{} is not empty (use overwrite)".format(
			                        directory))
		logger.info("removing previous content of {}".format(directory))
		shutil.rmtree(directory)
	os.makedirs(directory, exist_ok=True)


def mark_partial(directory, reason):
	"""Flag an output directory as incomplete."""
	try:
		with open(os.path.join(directory, PARTIAL_MARKER), 'w') as f:
			f.write(reason + '\n')
	except OSError:
		logger.exception("can not write the partial marker")
