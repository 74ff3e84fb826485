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


"""Main module.

This file is called by the command line

.. code::

	python -m revblocks build --input ./input --output ./warehouses

or through the ``revblocks`` console script.

Exit status:

0.	success
1.	usage error
2.	invalid input (missing files, inconsistent dataset, existing output)
3.	partial failure, some files or segments failed (report written)
4.	fatal error, the run stopped

Reports are JSON documents written on standard output
(or to the ``--report`` file); logs go to standard error.
"""

import argparse
import json
import os
import sys

import revblocks
from revblocks.core.block import parse_object_line
from revblocks.core.config import (
	BuildConfig,
	DownloadConfig,
	ModifyConfig,
	load_config,
)
from revblocks.core.errors import (
	DatasetError,
	DownloadError,
	EmptyWorklistError,
	HTTPStatusError,
	OutputExistsError,
	RevblocksError,
	StoreError,
)
from revblocks.store.dataset import (
	find_segment,
	inspect_structure,
	iter_segment,
	read_metadata,
)


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_PARTIAL = 3
EXIT_FATAL = 4

logger = revblocks.logger


class ArgumentParser(argparse.ArgumentParser):
	"""Parser exiting with :data:`EXIT_USAGE` on usage errors."""

	def error(self, message):
		self.print_usage(sys.stderr)
		self.exit(EXIT_USAGE, '{}: error: {}\n'.format(self.prog, message))


def parse_namespaces(text):
	"""Parse ``--namespaces``: ``all`` or comma separated integers.

	>>> parse_namespaces('0,14')
	[0, 14]
	>>> parse_namespaces('all') is None
	True
	"""
	if text.strip().lower() == 'all':
		return None
	try:
		return [int(item) for item in text.split(',') if item.strip()]
	except ValueError:
		raise argparse.ArgumentTypeError(
		    "expected 'all' or comma separated integers, not {!r}".format(
		        text)) from None


def _file_config(args, cls):
	if getattr(args, 'config', None):
		return cls.from_config(load_config(args.config))
	return cls()


def _emit(document, report_path=None):
	text = json.dumps(document, indent=2, ensure_ascii=False)
	if report_path:
		with open(report_path, 'w', encoding='utf-8') as f:
			f.write(text + '\n')
	else:
		sys.stdout.write(text + '\n')
		sys.stdout.flush()


def cmd_download(args, parser):
	"""List then download dump files."""
	from revblocks.download.dumps import download, list_files

	config = _file_config(args, DownloadConfig).updated(
	    base_url=args.base_url, workers=args.workers,
	    progress=args.progress or None)
	try:
		descriptors = list_files(config.base_url, args.wiki, args.date,
		                         args.pattern, timeout=config.timeout)
	except (ValueError, DownloadError) as error:
		logger.error(str(error))
		if isinstance(error, HTTPStatusError):
			return EXIT_FATAL
		return EXIT_INVALID
	report = download(descriptors, args.output, config=config)
	_emit(report.config, args.report)
	if report.failed:
		return EXIT_PARTIAL
	return EXIT_OK


def cmd_build(args, parser):
	"""Build a dataset from dump files."""
	from revblocks.pipeline.builder import Builder

	config = _file_config(args, BuildConfig).updated(
	    output_dir=args.output, num_workers=args.workers,
	    warehouse_size_limit=args.warehouse_size,
	    compression_level=args.compression_level,
	    max_inflight_input_bytes=args.max_inflight_bytes,
	    overwrite=args.overwrite or None)
	if args.namespaces is not False:
		# None (all namespaces) is a value here, not a missing flag
		config = BuildConfig.from_config(dict(config.config,
		                                      namespaces=args.namespaces))
	builder = Builder(config)
	try:
		builder.preload(args.input)
		if args.limit_files is not None:
			builder.files = builder.files[:args.limit_files]
		report = builder.build()
	except (FileNotFoundError, EmptyWorklistError, OutputExistsError) as error:
		logger.error(str(error))
		return EXIT_INVALID
	_emit(report.config, args.report)
	if report.fatal is not None:
		return EXIT_FATAL
	if report.files_processed == 0:
		# every file failed, nothing was written
		return EXIT_FATAL
	if report.files_failed:
		return EXIT_PARTIAL
	return EXIT_OK


def cmd_modify(args, parser):
	"""Apply profiles to a dataset."""
	from revblocks.pipeline.modifier import Modifier
	from revblocks.profiles import make_profile

	if not args.profile:
		parser.error("at least one --profile is needed")
	profiles = []
	for text in args.profile:
		try:
			profiles.append(make_profile(text))
		except (KeyError, ValueError) as error:
			parser.error(error.args[0])
	config = _file_config(args, ModifyConfig).updated(
	    output_dir=args.output, num_workers=args.workers,
	    warehouse_size_limit=args.warehouse_size,
	    strict=args.strict or None,
	    omit_empty_segments=args.omit_empty or None,
	    overwrite=args.overwrite or None)
	modifier = Modifier(config)
	for profile in profiles:
		modifier.add_profile(profile)
	try:
		modifier.preload(args.input)
		report = modifier.start()
	except (DatasetError, EmptyWorklistError, OutputExistsError) as error:
		logger.error(str(error))
		return EXIT_INVALID
	_emit(report.config, args.report)
	if report.fatal is not None:
		return EXIT_FATAL
	if report.segments_failed or report.block_errors:
		return EXIT_PARTIAL
	return EXIT_OK


def _print_table(report):
	width = max(len(key) for key in report)
	for key, value in report.items():
		if isinstance(value, list):
			value = ', '.join(str(item) for item in value) or '-'
		elif isinstance(value, dict):
			value = json.dumps(value)
		sys.stdout.write('{:<{}}  {}\n'.format(key, width, value))


def cmd_inspect(args, parser):
	"""Show the structure of a dataset, or the blocks of one article."""
	try:
		if args.article is None:
			report = inspect_structure(args.input, sample_n=args.sample)
			if args.json:
				_emit(report)
			else:
				_print_table(report)
			return EXIT_OK
		index = read_metadata(args.input)
		meta = find_segment(index, args.article)
		if meta is None:
			logger.error("no article {} in {}".format(args.article,
			                                          args.input))
			return EXIT_INVALID
		if args.json:
			_emit({'metadata': meta.config,
			       'blocks': [parse_object_line(line)
			                  for line in iter_segment(index, meta)]})
		else:
			for line in iter_segment(index, meta):
				sys.stdout.write(line.decode('utf-8'))
	except StoreError as error:
		logger.error(str(error))
		return EXIT_INVALID
	return EXIT_OK


def make_parser():
	"""Return the command line parser."""
	parser = ArgumentParser(prog='revblocks',
	                        description="Revision-history dumps to "
	                                    "randomly accessible JSONL "
	                                    "warehouses.")
	parser.add_argument("--version", help="revblocks version",
	                    action="store_true")
	subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')

	sub = subparsers.add_parser('download', help="download dump files")
	sub.add_argument('--wiki', required=True, help="wiki name, like enwiki")
	sub.add_argument('--date', required=True, help="snapshot date, YYYYMMDD")
	sub.add_argument('--pattern', default='ehd',
	                 help="file selection (default: ehd, edit history)")
	sub.add_argument('--output', default='./input', help="destination")
	sub.add_argument('--workers', type=int,
	                 help="parallel transfers (at most 3)")
	sub.add_argument('--base-url', help="dump host")
	sub.add_argument('--progress', action='store_true',
	                 help="show progress bars")
	sub.set_defaults(func=cmd_download)

	sub = subparsers.add_parser('build', help="build a dataset from dumps")
	sub.add_argument('--input', required=True,
	                 help="dump directory or file")
	sub.add_argument('--output', help="dataset directory")
	sub.add_argument('--workers', type=int, help="worker processes")
	sub.add_argument('--warehouse-size', type=int,
	                 help="compressed bytes per warehouse")
	sub.add_argument('--compression-level', type=int, help="gzip level")
	sub.add_argument('--max-inflight-bytes', type=int,
	                 help="cap on the size of the files built at once")
	sub.add_argument('--limit-files', type=int,
	                 help="build only the N largest files (testing)")
	sub.add_argument('--namespaces', type=parse_namespaces, default=False,
	                 help="'all' or comma separated namespaces "
	                      "(default: 0)")
	sub.add_argument('--overwrite', action='store_true',
	                 help="replace a non-empty output directory")
	sub.set_defaults(func=cmd_build)

	sub = subparsers.add_parser('modify', help="apply profiles to a dataset")
	sub.add_argument('--input', required=True, help="input dataset")
	sub.add_argument('--output', help="output dataset")
	sub.add_argument('--workers', type=int, help="worker processes")
	sub.add_argument('--warehouse-size', type=int,
	                 help="compressed bytes per warehouse")
	sub.add_argument('--profile', action='append', metavar='NAME[:ARG]',
	                 help="profile to apply, repeat to chain")
	sub.add_argument('--strict', action='store_true',
	                 help="stop at the first failing block")
	sub.add_argument('--omit-empty', action='store_true',
	                 help="drop the metadata of emptied segments")
	sub.add_argument('--overwrite', action='store_true',
	                 help="replace a non-empty output directory")
	sub.set_defaults(func=cmd_modify)

	for name in ('download', 'build', 'modify'):
		sub = subparsers.choices[name]
		sub.add_argument('--config', help="YAML configuration file")
		sub.add_argument('--report', help="write the report to this file")

	sub = subparsers.add_parser('inspect', help="show a dataset structure")
	sub.add_argument('--input', required=True, help="dataset directory")
	sub.add_argument('--sample', type=int, default=10,
	                 help="blocks sampled for the key paths")
	sub.add_argument('--article', help="print the blocks of this article")
	sub.add_argument('--json', action='store_true', help="JSON output")
	sub.set_defaults(func=cmd_inspect)
	return parser


# separate main function
# for the console_scripts entry_point in setup.py
def main(argv=None):
	"""Run the command line."""
	parser = make_parser()
	args = parser.parse_args(argv)
	if args.version:
		print("revblocks {}".format(revblocks.__version__))
		return EXIT_OK
	if args.command is None:
		parser.error("a command is required")

	# worker processes read the level from the environment
	os.environ.setdefault(revblocks.LOG_LEVEL_ENV, 'INFO')
	revblocks.configure_logging(default='INFO')
	try:
		return args.func(args, parser)
	except (ValueError, TypeError) as error:
		# invalid configuration values
		logger.error(str(error))
		return EXIT_INVALID
	except RevblocksError as error:
		logger.exception(str(error))
		return EXIT_FATAL


if __name__ == "__main__":
	sys.exit(main())
