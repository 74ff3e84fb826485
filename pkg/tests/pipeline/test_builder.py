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
import os
import subprocess
import sys
from datetime import datetime, timedelta

import pytest

import revblocks
from conftest import (
	EXPORT_NS,
	PAGES_A,
	PAGES_B,
	build_dataset,
	dataset_lines,
	dump_xml,
	listdir,
	rev,
	revision_xml,
	write_dump,
)
from revblocks.core.block import parse_block_line
from revblocks.core.errors import EmptyWorklistError, OutputExistsError
from revblocks.pipeline.builder import Builder, build, preload
from revblocks.core.config import BuildConfig
from revblocks.store.dataset import (
	PARTIAL_MARKER,
	read_manifest,
	read_metadata,
)


def revision_ids(directory):
	return {article_id: [parse_block_line(data).revision_id
	                     for data in lines]
	        for article_id, lines in dataset_lines(directory).items()}


EXPECTED = {'9': ['91', '92', '93'], '10': ['101', '102'],
            '11': ['111', '112']}


def test_build(dump_dir, tmp_path):
	output = tmp_path / 'out'
	report = build_dataset(dump_dir, output)
	assert report.fatal is None
	assert report.files_processed == 2
	assert report.files_failed == []
	assert report.errors == []
	assert report.articles_written == 3
	assert report.revisions_written == 6
	assert report.warehouses_written == 2
	assert report.bytes_in_compressed == sum(
	    os.path.getsize(os.path.join(dump_dir, name))
	    for name in os.listdir(dump_dir))
	assert revision_ids(str(output)) == EXPECTED
	# warehouses never mix dump files
	index = read_metadata(str(output))
	grouped = {name: sorted(meta.article_id for meta in segments)
	           for name, segments in index.grouped().items()}
	assert sorted(grouped.values()) == [['10', '9'], ['11']]
	assert index.violations == []
	assert report.bytes_out_compressed == sum(w.size
	                                          for w in index.warehouses)


def test_block_content(dataset):
	[line] = dataset_lines(dataset)['11'][:1]
	block = parse_block_line(line)
	assert block.timestamp == '2020-01-06T00:00:00Z'
	assert block.contributor.username == 'Alice'
	assert block.text.text == 'eleven'
	index = read_metadata(dataset)
	meta = [m for m in index.segments if m.article_id == '11'][0]
	assert meta.title == 'Eleven'
	assert meta.namespace == 0
	assert meta.first_timestamp == '2020-01-06T00:00:00Z'
	assert meta.last_timestamp == '2020-01-07T00:00:00Z'


def test_manifest(dataset, dump_dir):
	manifest = read_manifest(dataset)
	assert manifest['kind'] == 'build'
	assert sorted(os.path.basename(path) for path in manifest['inputs']) \
	    == sorted(os.listdir(dump_dir))
	assert manifest['totals']['articles_written'] == 3
	assert manifest['config']['num_workers'] == 1


@pytest.mark.parametrize('num_workers', [1, 4])
def test_workers_do_not_change_content(tmp_path, num_workers):
	input_dir = tmp_path / 'input'
	input_dir.mkdir()
	for n in range(6):
		pages = [{'id': str(100 * n + k), 'title': 'P{}-{}'.format(n, k),
		          'revisions': [rev(1000 * n + 10 * k + r, r + 1,
		                            'text {} {} {}'.format(n, k, r))
		                        for r in range(k + 1)]}
		         for k in range(5)]
		write_dump(input_dir / 'part{}.xml.bz2'.format(n), pages)
	output = tmp_path / 'out'
	report = build_dataset(str(input_dir), output, num_workers=num_workers)
	assert report.files_processed == 6
	assert report.articles_written == 30
	assert report.revisions_written == 6 * 15
	lines = dataset_lines(str(output))
	assert len(lines) == 30
	assert [parse_block_line(data).revision_id for data in lines['203']] \
	    == ['2030', '2031', '2032', '2033']
	assert read_metadata(str(output)).violations == []


def test_same_dataset_whatever_the_workers(dump_dir, tmp_path):
	one = build_dataset(dump_dir, tmp_path / 'one', num_workers=1)
	three = build_dataset(dump_dir, tmp_path / 'three', num_workers=3)
	assert one.revisions_written == three.revisions_written
	assert dataset_lines(str(tmp_path / 'one')) == \
	    dataset_lines(str(tmp_path / 'three'))


def test_all_namespaces(dump_dir, tmp_path):
	output = tmp_path / 'out'
	report = build_dataset(dump_dir, output, namespaces=None)
	assert report.articles_written == 4
	assert revision_ids(str(output))['12'] == ['121']


def test_preload(dump_dir, tmp_path):
	(tmp_path / 'input' / 'notes.txt').write_text('not a dump')
	files = preload(dump_dir)
	assert [os.path.basename(f.path) for f in files] == sorted(
	    (name for name in os.listdir(dump_dir) if name != 'notes.txt'),
	    key=lambda name: -os.path.getsize(os.path.join(dump_dir, name)))
	assert files[0].size >= files[1].size
	# a list is taken as is
	paths = [f.path for f in files]
	assert [f.path for f in preload(paths[::-1])] == paths
	assert [f.path for f in preload(paths[0])] == paths[:1]


def test_preload_errors(tmp_path):
	with pytest.raises(FileNotFoundError):
		preload([str(tmp_path / 'missing.xml.bz2')])
	with pytest.raises(EmptyWorklistError):
		preload(str(tmp_path))
	with pytest.raises(EmptyWorklistError):
		build([], BuildConfig(output_dir=str(tmp_path / 'out')))


def test_builder_object(dump_dir, tmp_path):
	builder = Builder(output_dir=str(tmp_path / 'out'),
	                  warehouse_size_limit=2 ** 20)
	assert builder.files == []
	builder.preload(dump_dir)
	builder.files = builder.files[:1]
	report = builder.build()
	assert report.files_processed == 1


def test_output_exists(dump_dir, tmp_path):
	output = tmp_path / 'out'
	build_dataset(dump_dir, output)
	with pytest.raises(OutputExistsError):
		build_dataset(dump_dir, output)
	report = build_dataset(dump_dir, output, overwrite=True)
	assert report.articles_written == 3
	assert len(read_metadata(str(output))) == 3


def test_failed_file(dump_dir, tmp_path):
	bad = os.path.join(dump_dir, 'c-pages-meta-history3.xml')
	write_dump(bad, text='<html><body>' + 'x' * 5000 + '</body></html>')
	output = tmp_path / 'out'
	report = build_dataset(dump_dir, output)
	assert report.fatal is None
	assert report.files_processed == 2
	[failure] = report.files_failed
	assert failure['file'] == bad
	assert failure['error'] == 'DumpFormatError'
	assert revision_ids(str(output)) == EXPECTED
	assert read_metadata(str(output)).violations == []
	assert PARTIAL_MARKER not in listdir(output)


def test_malformed_xml_is_reported(tmp_path):
	input_dir = tmp_path / 'input'
	input_dir.mkdir()
	text = dump_xml(PAGES_A + PAGES_B)
	text = text.replace('ten\nmore</text>', 'ten\nmore</txt>')
	write_dump(input_dir / 'broken.xml.gz', text=text)
	output = tmp_path / 'out'
	report = build_dataset(str(input_dir), output)
	assert report.files_failed == []
	assert [error['error'] for error in report.errors] == ['DumpSyntax']
	assert report.errors[0]['article_id'] == '10'
	ids = revision_ids(str(output))
	assert ids['9'] == EXPECTED['9']
	assert ids['10'] == ['101']
	assert ids['11'] == EXPECTED['11']


def test_oversized_block_is_skipped(tmp_path):
	input_dir = tmp_path / 'input'
	input_dir.mkdir()
	pages = [{'id': '1', 'title': 'One', 'revisions': [
	    rev(1, 1, 'short'), rev(2, 2, 'long ' * 400), rev(3, 3, 'short')]}]
	write_dump(input_dir / 'dump.xml', pages)
	output = tmp_path / 'out'
	report = build_dataset(str(input_dir), output, max_line_bytes=1000)
	assert report.revisions_written == 2
	assert [error['error'] for error in report.errors] == \
	    ['OversizeBlockError']
	assert revision_ids(str(output)) == {'1': ['1', '3']}


@pytest.mark.slow
def test_rotation_in_a_real_build(tmp_path):
	import random
	rng = random.Random(5)
	alphabet = 'abcdefghijklmnopqrstuvwxyz0123456789 \n'
	input_dir = tmp_path / 'input'
	input_dir.mkdir()
	for n in range(3):
		pages = [{'id': str(100 * n + k), 'title': 'Big {} {}'.format(n, k),
		          'revisions': [rev(10000 * n + 10 * k + r, r + 1,
		                            ''.join(rng.choice(alphabet)
		                                    for _ in range(40000)))
		                        for r in range(3)]}
		         for k in range(20)]
		write_dump(input_dir / 'big{}.xml.gz'.format(n), pages)
	output = tmp_path / 'out'
	report = build_dataset(str(input_dir), output, num_workers=4)
	assert report.files_failed == []
	assert report.revisions_written == 3 * 20 * 3
	assert report.warehouses_written > 3
	index = read_metadata(str(output))
	assert index.violations == []
	for warehouse in index.warehouses[:-1]:
		assert len(warehouse.segments) > 0
	assert all(len(lines) == 3 for lines in dataset_lines(str(output))
	           .values())


#: measured in a fresh interpreter, peaks of this build only
MEASURE_BUILD = """
import resource, sys
from revblocks.core.config import BuildConfig
from revblocks.ingest.dump import Revision, open_dump
from revblocks.pipeline.builder import Builder

path, output = sys.argv[1:]
with open_dump(path) as reader:
    revisions = sum(isinstance(event, Revision) for event in reader)
ingest_peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
builder = Builder(BuildConfig(output_dir=output, num_workers=1))
builder.preload(path)
report = builder.build()
assert report.fatal is None and not report.files_failed
worker_peak = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss
print(revisions, report.revisions_written, ingest_peak, worker_peak)
"""


def write_long_history(path, revisions, text_bytes):
	"""Write one article with many revisions, without holding the dump."""
	filler = ''.join(chr(ord('a') + n % 26) for n in range(text_bytes))
	start = datetime(2001, 1, 1)
	with bz2.open(str(path), 'wt', encoding='utf-8') as f:
		f.write('<mediawiki xmlns="{}" version="0.11">\n'.format(EXPORT_NS))
		f.write('<page><title>Long</title><ns>0</ns><id>1</id>\n')
		for n in range(revisions):
			moment = start + timedelta(hours=n)
			f.write(revision_xml({
			    'id': str(n + 1),
			    'timestamp': moment.strftime('%Y-%m-%dT%H:%M:%SZ'),
			    'username': 'Alice',
			    'text': '{} {}'.format(n, filler)[:text_bytes]}))
			f.write('\n')
		f.write('</page>\n</mediawiki>\n')


@pytest.mark.slow
@pytest.mark.skipif(not sys.platform.startswith('linux'),
                    reason="ru_maxrss is in KiB on Linux only")
def test_memory_does_not_grow_with_history(tmp_path):
	path = tmp_path / 'long-pages-meta-history.xml.bz2'
	write_long_history(path, 10000, 10 * 1024)
	root = os.path.dirname(os.path.dirname(os.path.abspath(
	    revblocks.__file__)))
	env = dict(os.environ, PYTHONPATH=root)
	finished = subprocess.run(
	    [sys.executable, '-c', MEASURE_BUILD, str(path),
	     str(tmp_path / 'out')],
	    env=env, stdout=subprocess.PIPE, check=True)
	revisions, written, ingest_peak, worker_peak = \
	    (int(value) for value in finished.stdout.split())
	assert revisions == written == 10000
	limit = 256 * 1024
	assert ingest_peak < limit
	assert worker_peak < limit
