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



import json
import os

import pytest

from conftest import dataset_lines, listdir
from revblocks import __version__
from revblocks.core.block import parse_block_line
from revblocks.core.errors import DatasetError, OutputExistsError
from revblocks.store.dataset import (
	MANIFEST_NAME,
	PARTIAL_MARKER,
	find_segment,
	inspect_structure,
	iter_segment,
	mark_partial,
	prepare_output_dir,
	read_manifest,
	read_metadata,
	write_manifest,
)
from revblocks.store.warehouse import WarehouseWriter, sidecar_path


def test_read_metadata(dataset):
	index = read_metadata(dataset)
	assert len(index) == 3
	assert index.violations == []
	grouped = index.grouped()
	assert sorted(grouped) == ['block_000_00000.jsonl.gz',
	                           'block_000_00001.jsonl.gz']
	articles = sorted(meta.article_id for meta in index.segments)
	assert articles == ['10', '11', '9']
	for name, segments in grouped.items():
		assert all(meta.warehouse == name for meta in segments)
		assert [meta.byte_start for meta in segments] == sorted(
		    meta.byte_start for meta in segments)


def test_find_and_iter(dataset):
	index = read_metadata(dataset)
	meta = find_segment(index, 9)
	assert meta.title == 'Nine'
	assert meta.num_revisions == 3
	blocks = [parse_block_line(data) for data in iter_segment(index, meta)]
	assert [block.revision_id for block in blocks] == ['91', '92', '93']
	assert meta.first_timestamp == blocks[0].timestamp
	assert meta.last_timestamp == blocks[-1].timestamp
	assert find_segment(index, '404') is None


def test_not_a_directory(tmp_path):
	with pytest.raises(DatasetError):
		read_metadata(str(tmp_path / 'nothing'))


def test_no_warehouses(tmp_path):
	with pytest.raises(DatasetError, match='no warehouses found'):
		read_metadata(str(tmp_path))


def test_missing_sidecar(dataset):
	index = read_metadata(dataset)
	os.remove(sidecar_path(index.warehouses[0].path))
	with pytest.raises(DatasetError, match='missing sidecar'):
		read_metadata(dataset)


def test_unparseable_sidecar(dataset):
	index = read_metadata(dataset)
	with open(sidecar_path(index.warehouses[0].path), 'ab') as f:
		f.write(b'{"warehouse": \n')
	with pytest.raises(DatasetError, match='line'):
		read_metadata(dataset)


def test_gap_violation(tmp_path):
	with WarehouseWriter(str(tmp_path)) as writer:
		writer.begin_segment('1', 'One')
		writer.append_block(b'{"a":1}\n')
		writer.end_segment()
		path = writer.path
	# garbage between the frame and the end of the file
	with open(path, 'ab') as f:
		f.write(b'\0' * 5)
	index = read_metadata(str(tmp_path))
	assert len(index.violations) == 1
	assert 'file size' in index.violations[0]
	with pytest.raises(DatasetError) as info:
		read_metadata(str(tmp_path), strict=True)
	assert info.value.violations == index.violations


def test_inspect_structure(dataset):
	report = inspect_structure(dataset, sample_n=10)
	assert report['warehouses'] == 2
	assert report['segments'] == 3
	assert report['revisions'] == 6
	assert report['sampled_blocks'] == 6
	assert report['violations'] == []
	for path in ('article_id', 'revision_id', 'timestamp',
	             'contributor.username', 'text.#text', 'text.@bytes'):
		assert path in report['key_paths']
	assert report['compressed_bytes'] == sum(
	    os.path.getsize(os.path.join(dataset, name))
	    for name in listdir(dataset) if name.endswith('.jsonl.gz'))
	total = sum(len(data) for lines in dataset_lines(dataset).values()
	            for data in lines)
	assert report['uncompressed_bytes'] == total
	assert report['manifest']['kind'] == 'build'
	# serializable as is
	json.dumps(report)


def test_inspect_counts_only(dataset):
	report = inspect_structure(dataset, sample_n=0)
	assert report['sampled_blocks'] == 0
	assert report['key_paths'] == []
	assert report['revisions'] == 6


def test_inspect_sample(dataset):
	assert inspect_structure(dataset, sample_n=2)['sampled_blocks'] == 2


def test_manifest(tmp_path):
	written = write_manifest(str(tmp_path), 'modify', {'strict': False},
	                         inputs=['in'], totals={'segments_out': 3})
	assert listdir(tmp_path) == [MANIFEST_NAME]
	manifest = read_manifest(str(tmp_path))
	assert manifest == written
	assert manifest['version'] == __version__
	assert manifest['inputs'] == ['in']
	assert read_manifest(str(tmp_path / 'none')) is None


def test_prepare_output_dir(tmp_path):
	target = tmp_path / 'out'
	prepare_output_dir(str(target))
	assert listdir(target) == []
	(target / 'old.txt').write_text('x')
	with pytest.raises(OutputExistsError):
		prepare_output_dir(str(target))
	prepare_output_dir(str(target), overwrite=True)
	assert listdir(target) == []


def test_mark_partial(tmp_path):
	mark_partial(str(tmp_path), 'disk full')
	assert (tmp_path / PARTIAL_MARKER).read_text() == 'disk full\n'
