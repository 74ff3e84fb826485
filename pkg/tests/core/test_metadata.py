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


import pytest

from revblocks.core.metadata import METADATA_KEYS, SegmentMetadata


@pytest.fixture()
def meta():
	return SegmentMetadata(warehouse='block_000_00000.jsonl.gz',
	                       article_id='9', title='Nine', namespace=0,
	                       byte_start=40, byte_length=60,
	                       uncompressed_bytes=300, num_revisions=3,
	                       first_timestamp='2020-01-01T00:00:00Z',
	                       last_timestamp='2020-01-03T00:00:00Z',
	                       custom={'words': 12})


def test_config(meta):
	assert list(meta.config) == list(METADATA_KEYS)
	assert SegmentMetadata.from_config(meta.config) == meta


def test_byte_end(meta):
	assert meta.byte_end == 100


def test_view_is_a_copy(meta):
	view = meta.view()
	view['custom']['words'] = 0
	assert meta.custom == {'words': 12}


@pytest.mark.parametrize('key, value', [
    ('byte_start', -1),
    ('byte_length', '3'),
    ('num_revisions', True),
    ('namespace', 'main'),
    ('custom', []),
])
def test_invalid_values(meta, key, value):
	config = meta.config
	config[key] = value
	with pytest.raises(ValueError):
		SegmentMetadata.from_config(config)


def test_missing_warehouse(meta):
	config = meta.config
	del config['warehouse']
	with pytest.raises(KeyError):
		SegmentMetadata.from_config(config)
