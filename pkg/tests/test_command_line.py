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

import revblocks
from conftest import listdir, write_dump
from revblocks.__main__ import (
	EXIT_FATAL,
	EXIT_INVALID,
	EXIT_OK,
	EXIT_PARTIAL,
	EXIT_USAGE,
	main,
)
from revblocks.core.config import BuildConfig, save_config
from revblocks.core.errors import HTTPStatusError, JobNotFinishedError
from revblocks.download import dumps
from revblocks.store.dataset import find_segment, read_metadata


@pytest.fixture(autouse=True)
def quiet(monkeypatch):
	# main() exports the level for the workers, keep it local to a test
	monkeypatch.setenv(revblocks.LOG_LEVEL_ENV, 'WARNING')


def run(capsys, *argv):
	"""Run the command line, return (status, stdout)."""
	status = main([str(arg) for arg in argv])
	return status, capsys.readouterr().out


def test_version(capsys):
	status, out = run(capsys, '--version')
	assert status == EXIT_OK
	assert out == 'revblocks {}\n'.format(revblocks.__version__)


@pytest.mark.parametrize('argv', [
    [],
    ['build'],
    ['frobnicate'],
    ['build', '--input', 'x', '--workers', 'two'],
    ['build', '--input', 'x', '--namespaces', 'main'],
])
def test_usage_errors(argv):
	with pytest.raises(SystemExit) as info:
		main(argv)
	assert info.value.code == EXIT_USAGE


def build_args(input_dir, output, *extra):
	return ('build', '--input', input_dir, '--output', output,
	        '--warehouse-size', 2 ** 20) + extra


def test_build(capsys, dump_dir, tmp_path):
	output = tmp_path / 'out'
	status, out = run(capsys, *build_args(dump_dir, output))
	assert status == EXIT_OK
	report = json.loads(out)
	assert report['articles_written'] == 3
	assert report['files_failed'] == []
	assert 'manifest.json' in listdir(output)


def test_build_all_namespaces(capsys, dump_dir, tmp_path):
	status, out = run(capsys, *build_args(dump_dir, tmp_path / 'out',
	                                      '--namespaces', 'all'))
	assert status == EXIT_OK
	assert json.loads(out)['articles_written'] == 4


def test_build_limit_files(capsys, dump_dir, tmp_path):
	status, out = run(capsys, *build_args(dump_dir, tmp_path / 'out',
	                                      '--limit-files', 1))
	assert json.loads(out)['files_processed'] == 1


def test_build_invalid(capsys, dump_dir, tmp_path):
	output = tmp_path / 'out'
	assert run(capsys, *build_args(tmp_path / 'none', output))[0] == \
	    EXIT_INVALID
	assert run(capsys, *build_args(dump_dir, output))[0] == EXIT_OK
	# not empty any more
	assert run(capsys, *build_args(dump_dir, output))[0] == EXIT_INVALID
	assert run(capsys, *build_args(dump_dir, output,
	                               '--overwrite'))[0] == EXIT_OK
	# below the minimal warehouse size
	status, _ = run(capsys, 'build', '--input', dump_dir, '--output',
	                tmp_path / 'other', '--warehouse-size', 10)
	assert status == EXIT_INVALID


def test_build_config_and_report(capsys, dump_dir, tmp_path):
	config_path = str(tmp_path / 'build.yml')
	save_config(BuildConfig(output_dir=str(tmp_path / 'from-config'),
	                        warehouse_size_limit=2 ** 20,
	                        namespaces=[1]), config_path)
	report_path = tmp_path / 'report.json'
	status, out = run(capsys, 'build', '--input', dump_dir,
	                  '--config', config_path, '--report', report_path)
	assert status == EXIT_OK
	assert out == ''
	report = json.loads(report_path.read_text())
	# only the talk page
	assert report['articles_written'] == 1
	assert 'manifest.json' in listdir(tmp_path / 'from-config')


def test_build_partial(capsys, dump_dir, tmp_path):
	write_dump(os.path.join(dump_dir, 'c-pages-meta-history3.xml'),
	           text='<html/>')
	status, out = run(capsys, *build_args(dump_dir, tmp_path / 'out'))
	assert status == EXIT_PARTIAL
	assert len(json.loads(out)['files_failed']) == 1


def test_build_nothing_written(capsys, tmp_path):
	input_dir = tmp_path / 'input'
	input_dir.mkdir()
	for name in ('a-pages-meta-history1.xml', 'b-pages-meta-history2.xml'):
		write_dump(input_dir / name, text='<html/>')
	status, out = run(capsys, *build_args(str(input_dir), tmp_path / 'out'))
	assert status == EXIT_FATAL
	report = json.loads(out)
	assert report['files_processed'] == 0
	assert len(report['files_failed']) == 2


def test_modify(capsys, dataset, tmp_path):
	output = tmp_path / 'modified'
	status, out = run(capsys, 'modify', '--input', dataset, '--output',
	                  output, '--profile', 'snapshot:2', '--profile',
	                  'links')
	assert status == EXIT_OK
	report = json.loads(out)
	assert report['blocks_in'] == 6
	assert report['blocks_out'] + report['blocks_dropped'] == 6
	assert sorted(report['profile_seconds']) == ['links', 'snapshot']


@pytest.mark.parametrize('profiles', [[], ['nothing'], ['snapshot:soon']])
def test_modify_bad_profiles(dataset, tmp_path, profiles):
	argv = ['modify', '--input', dataset, '--output', str(tmp_path / 'o')]
	for profile in profiles:
		argv += ['--profile', profile]
	with pytest.raises(SystemExit) as info:
		main(argv)
	assert info.value.code == EXIT_USAGE


def test_modify_failures(capsys, dataset, tmp_path):
	# the second extraction finds no text any more
	chain = ('--profile', 'links', '--profile', 'links')
	status, out = run(capsys, 'modify', '--input', dataset, '--output',
	                  tmp_path / 'lenient', *chain)
	assert status == EXIT_PARTIAL
	assert json.loads(out)['block_errors'] == 6
	status, out = run(capsys, 'modify', '--input', dataset, '--output',
	                  tmp_path / 'strict', '--strict', *chain)
	assert status == EXIT_FATAL
	assert json.loads(out)['fatal']['error'] == 'StrictModeAbort'
	assert not os.path.exists(str(tmp_path / 'strict'))


def test_modify_not_a_dataset(capsys, tmp_path):
	status, _ = run(capsys, 'modify', '--input', tmp_path, '--output',
	                tmp_path / 'out', '--profile', 'links')
	assert status == EXIT_INVALID


def test_inspect(capsys, dataset):
	status, out = run(capsys, 'inspect', '--input', dataset)
	assert status == EXIT_OK
	assert 'warehouses' in out
	assert 'text.#text' in out
	status, out = run(capsys, 'inspect', '--input', dataset, '--json',
	                  '--sample', 0)
	report = json.loads(out)
	assert report['segments'] == 3
	assert report['key_paths'] == []


def test_inspect_article(capsys, dataset):
	status, out = run(capsys, 'inspect', '--input', dataset, '--article', 10)
	assert status == EXIT_OK
	lines = out.splitlines()
	assert [json.loads(line)['revision_id'] for line in lines] == \
	    ['101', '102']
	status, out = run(capsys, 'inspect', '--input', dataset, '--article', 10,
	                  '--json')
	document = json.loads(out)
	assert document['metadata']['title'] == 'Ten'
	assert len(document['blocks']) == 2
	status, _ = run(capsys, 'inspect', '--input', dataset, '--article', 404)
	assert status == EXIT_INVALID


def test_inspect_corrupt_article(capsys, dataset):
	index = read_metadata(dataset)
	meta = find_segment(index, 10)
	with open(index.path_of(meta), 'r+b') as f:
		f.seek(meta.byte_start + meta.byte_length - 6)
		byte = f.read(1)
		f.seek(-1, os.SEEK_CUR)
		f.write(bytes([byte[0] ^ 0xff]))
	status, out = run(capsys, 'inspect', '--input', dataset, '--article', 10)
	assert status == EXIT_INVALID
	assert out == ''


def test_inspect_not_a_dataset(capsys, tmp_path):
	assert run(capsys, 'inspect', '--input', tmp_path)[0] == EXIT_INVALID


def download_args(tmp_path, *extra):
	return ('download', '--wiki', 'testwiki', '--date', '20240801',
	        '--output', tmp_path / 'input') + extra


def test_download_errors(capsys, tmp_path, monkeypatch):
	assert run(capsys, *download_args(tmp_path, '--pattern', 'xyz'))[0] \
	    == EXIT_INVALID

	def not_finished(*args, **kwargs):
		raise JobNotFinishedError('still running')

	monkeypatch.setattr(dumps, 'list_files', not_finished)
	assert run(capsys, *download_args(tmp_path))[0] == EXIT_INVALID

	def unreachable(*args, **kwargs):
		raise HTTPStatusError(500, 'https://host/dumpstatus.json')

	monkeypatch.setattr(dumps, 'list_files', unreachable)
	assert run(capsys, *download_args(tmp_path))[0] == EXIT_FATAL


def test_download_nothing(capsys, tmp_path, monkeypatch):
	monkeypatch.setattr(dumps, 'list_files', lambda *a, **k: [])
	status, out = run(capsys, *download_args(tmp_path, '--workers', 8))
	assert status == EXIT_OK
	assert json.loads(out)['files_downloaded'] == 0
