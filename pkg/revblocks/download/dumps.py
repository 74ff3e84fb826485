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



"""Listing and downloading revision-history dump files.

Files are listed from the ``dumpstatus.json`` index of a dump snapshot,
downloaded to a ``.part`` name, checked against the advertised size and
sha1, then renamed.  A final file name therefore always denotes a
complete file, and an interrupted run resumes where it stopped.

The dump host tolerates three parallel transfers per client;
more get HTTP 503.  At most three transfers are ever in flight from
one process, whatever the number of workers requested.
"""


import logging
logger = logging.getLogger(__name__)   # noqa: E402

import hashlib
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional
from urllib.parse import urljoin

import requests
from tqdm import tqdm

from revblocks.core.config import MAX_PARALLEL_DOWNLOADS, DownloadConfig
from revblocks.core.errors import (
	ChecksumError,
	DownloadError,
	HTTPStatusError,
	JobNotFinishedError,
	UnknownPatternError,
)


STATUS_INDEX = 'dumpstatus.json'
PART_SUFFIX = '.part'
CHUNK_SIZE = 1 << 16

_DATE = re.compile(r'\d{8}\Z')

# shared by every download() call of the process
_transfer_slots = threading.BoundedSemaphore(MAX_PARALLEL_DOWNLOADS)
_local = threading.local()


@dataclass(frozen=True)
class DumpPattern(object):
	"""Selection of the files of one dump job."""

	job: str
	contains: str


#: name -> pattern, "ehd" is the full edit history dump
PATTERNS = {
    'ehd': DumpPattern(job='metahistorybz2dump', contains='pages-meta-history'),
}


@dataclass(frozen=True)
class DumpFileDescriptor(object):
	"""A downloadable dump file.

	>>> DumpFileDescriptor(url='ftp://x/y', file_name='y')
	Traceback (most recent call last):
	...
	ValueError: url must be absolute http(s): ftp://x/y
	"""

	url: str
	file_name: str
	size: Optional[int] = None
	sha1: Optional[str] = None
	job_name: Optional[str] = None

	def __post_init__(self):
		if not self.url.startswith(('http://', 'https://')):
			raise ValueError("url must be absolute http(s): {}".format(
			                 self.url))
		if not self.file_name or '/' in self.file_name \
		        or os.sep in self.file_name:
			raise ValueError("bad file name: {!r}".format(self.file_name))

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary."""
		return {'url': self.url, 'file_name': self.file_name,
		        'size': self.size, 'sha1': self.sha1,
		        'job_name': self.job_name}

	@classmethod
	def from_config(cls, config):
		"""Alternate constructor."""
		return cls(**config)


def _session():
	"""Return the requests session of the current thread."""
	session = getattr(_local, 'session', None)
	if session is None:
		session = _local.session = requests.Session()
	return session


def status_url(base_url, wiki, date):
	"""Return the url of the status index of a snapshot.

	>>> status_url('https://dumps.wikimedia.org', 'enwiki', '20240801')
	'https://dumps.wikimedia.org/enwiki/20240801/dumpstatus.json'
	"""
	return '{}/{}/{}/{}'.format(base_url.rstrip('/'), wiki, date,
	                            STATUS_INDEX)


def list_files(base_url, wiki, date, pattern='ehd', timeout=60.0):
	"""List the dump files of a snapshot.

	Args:
		base_url (str): dump host
		wiki (str): wiki database name, like ``enwiki``
		date (str): snapshot date, YYYYMMDD
		pattern (str): selection pattern name, see :data:`PATTERNS`
		timeout (float): socket timeout, seconds

	Returns:
		list of DumpFileDescriptor, sorted by file name

	Raises:
		ValueError: malformed date
		UnknownPatternError: `pattern` is not registered
		HTTPStatusError: the index can not be fetched
		JobNotFinishedError: the selected job is not done
		DownloadError: malformed index

	"""
	if not _DATE.match(date):
		raise ValueError("date must be YYYYMMDD, not {!r}".format(date))
	if pattern not in PATTERNS:
		raise UnknownPatternError("unknown pattern {!r}, supported: {}".format(
		                          pattern, ", ".join(sorted(PATTERNS))))
	selection = PATTERNS[pattern]
	url = status_url(base_url, wiki, date)
	try:
		response = _session().get(url, timeout=timeout)
	except requests.RequestException as error:
		raise DownloadError("can not fetch {}: {}".format(url, error)) \
		    from error
	if response.status_code != 200:
		raise HTTPStatusError(response.status_code, url)
	try:
		job = response.json()['jobs'][selection.job]
	except (ValueError, KeyError, TypeError) as error:
		raise DownloadError("{}: no job {}".format(url, selection.job)) \
		    from error
	status = job.get('status')
	if status != 'done':
		raise JobNotFinishedError("job {} of {} {} is {!r}".format(
		                          selection.job, wiki, date, status))

	descriptors = []
	for name, info in sorted((job.get('files') or {}).items()):
		if selection.contains not in name:
			continue
		link = info.get('url') or '/{}/{}/{}'.format(wiki, date, name)
		descriptors.append(DumpFileDescriptor(
		    url=urljoin(base_url.rstrip('/') + '/', link.lstrip('/')),
		    file_name=name,
		    size=info.get('size'),
		    sha1=info.get('sha1'),
		    job_name=selection.job))
	logger.info("{} {}: {} files selected by {}".format(
	            wiki, date, len(descriptors), pattern))
	return descriptors


@dataclass
class DownloadResult(object):
	"""Outcome for one file."""

	file_name: str
	path: Optional[str] = None
	#: 'downloaded', 'skipped' or 'failed'
	status: str = 'failed'
	bytes_transferred: int = 0
	error: Optional[dict] = None

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary."""
		return {'file_name': self.file_name, 'path': self.path,
		        'status': self.status,
		        'bytes_transferred': self.bytes_transferred,
		        'error': self.error}


@dataclass
class DownloadReport(object):
	"""Outcome of a download run, results in descriptor order."""

	results: List[DownloadResult] = field(default_factory=list)
	wall_time: float = 0.0

	def _count(self, status):
		return sum(1 for result in self.results if result.status == status)

	@property
	def paths(self):
		"""Final paths of the available files."""
		return [result.path for result in self.results
		        if result.status != 'failed']

	@property
	def failed(self):
		return self._count('failed')

	@property
	def bytes_transferred(self):
		return sum(result.bytes_transferred for result in self.results)

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary."""
		return {'files_downloaded': self._count('downloaded'),
		        'files_skipped': self._count('skipped'),
		        'files_failed': self.failed,
		        'bytes_transferred': self.bytes_transferred,
		        'wall_time': round(self.wall_time, 3),
		        'files': [result.config for result in self.results]}


def file_sha1(path):
	"""Return the hex sha1 of a file."""
	digest = hashlib.sha1()
	with open(path, 'rb') as f:
		for chunk in iter(lambda: f.read(CHUNK_SIZE), b''):
			digest.update(chunk)
	return digest.hexdigest()


def verify(path, descriptor):
	"""Check a file against the advertised size and sha1.

	Raises:
		ChecksumError: mismatch

	"""
	if descriptor.size is not None:
		size = os.path.getsize(path)
		if size != descriptor.size:
			raise ChecksumError("{}: {} bytes, expected {}".format(
			                    descriptor.file_name, size, descriptor.size))
	if descriptor.sha1 is not None:
		digest = file_sha1(path)
		if digest != descriptor.sha1.lower():
			raise ChecksumError("{}: sha1 {}, expected {}".format(
			                    descriptor.file_name, digest, descriptor.sha1))


def _is_complete(path, descriptor):
	if not os.path.exists(path):
		return False
	try:
		verify(path, descriptor)
	except ChecksumError:
		return False
	return True


def _get(url, config, offset):
	"""GET with backoff on 503; the response holds a transfer slot."""
	headers = {'Range': 'bytes={}-'.format(offset)} if offset else {}
	delay = config.backoff_seconds
	for attempt in range(config.retries_503 + 1):
		_transfer_slots.acquire()
		try:
			response = _session().get(url, headers=headers, stream=True,
			                          timeout=config.timeout)
		except BaseException:
			_transfer_slots.release()
			raise
		if response.status_code != 503 or attempt == config.retries_503:
			return response
		response.close()
		_transfer_slots.release()
		logger.warning("503 for {}, retrying in {}s".format(url, delay))
		time.sleep(delay)
		delay *= 2


def _fetch(descriptor, temp, config):
	"""Download into `temp`, resuming it if possible.

	Returns:
		int: bytes received

	"""
	offset = _part_size(temp)
	if descriptor.size is not None and offset > descriptor.size:
		os.remove(temp)
		offset = 0
	response = _get(descriptor.url, config, offset)
	received = 0
	try:
		if response.status_code == 416 and offset:
			# nothing left to send
			return 0
		if response.status_code == 206 and offset:
			mode = 'ab'
		elif response.status_code == 200:
			mode = 'wb'
			offset = 0
		else:
			raise HTTPStatusError(response.status_code, descriptor.url)
		with open(temp, mode) as f, \
		        tqdm(total=descriptor.size, initial=offset, unit='B',
		             unit_scale=True, desc=descriptor.file_name, leave=False,
		             disable=not config.progress) as bar:
			for chunk in response.iter_content(CHUNK_SIZE):
				f.write(chunk)
				received += len(chunk)
				bar.update(len(chunk))
	finally:
		response.close()
		_transfer_slots.release()
	return received


def _part_size(temp):
	return os.path.getsize(temp) if os.path.exists(temp) else 0


def _fetch_resuming(descriptor, temp, config):
	"""Call :func:`_fetch` until the body arrived.

	A connection lost in the middle of the body leaves the received
	bytes in `temp`; the next attempt asks for the rest with a
	``Range`` header, or starts over if the server ignores it.

	Returns:
		int: bytes received, over every attempt

	"""
	received = 0
	for attempt in range(config.resumes + 1):
		before = _part_size(temp)
		try:
			return received + _fetch(descriptor, temp, config)
		except (requests.ConnectionError,
		        requests.exceptions.ChunkedEncodingError) as error:
			if attempt == config.resumes:
				raise
			partial = _part_size(temp)
			logger.warning("{}: transfer interrupted at {} bytes ({}), "
			               "resuming".format(descriptor.file_name, partial,
			                                 type(error).__name__))
			# a restarted transfer truncated the file
			received += partial - before if partial >= before else partial


def download_file(descriptor, out_dir, config):
	"""Download one file, verify it, and move it to its final name.

	A checksum mismatch discards the file and tries once more.

	Returns:
		DownloadResult

	"""
	final = os.path.join(out_dir, descriptor.file_name)
	result = DownloadResult(file_name=descriptor.file_name, path=final)
	if _is_complete(final, descriptor):
		logger.info("{} already complete".format(descriptor.file_name))
		result.status = 'skipped'
		return result
	temp = final + PART_SUFFIX
	for attempt in (1, 2):
		try:
			result.bytes_transferred += _fetch_resuming(descriptor, temp,
			                                                  config)
			verify(temp, descriptor)
		except ChecksumError as error:
			logger.warning(str(error))
			if os.path.exists(temp):
				os.remove(temp)
			if attempt == 2:
				result.error = {'error': 'ChecksumError',
				                'message': str(error)}
				return result
			continue
		except (DownloadError, requests.RequestException, OSError) as error:
			logger.error("{}: {}".format(descriptor.file_name, error))
			result.error = {'error': type(error).__name__,
			                'message': str(error)}
			return result
		os.replace(temp, final)
		result.status = 'downloaded'
		logger.info("downloaded {}".format(descriptor.file_name),
		            extra={'fields': {'event': 'file_downloaded',
		                              'file': descriptor.file_name,
		                              'bytes': result.bytes_transferred}})
		return result


def download(descriptors, out_dir, workers=MAX_PARALLEL_DOWNLOADS,
             config=None):
	"""Download dump files in parallel.

	Args:
		descriptors (list of DumpFileDescriptor): files to fetch
		out_dir (str): destination directory
		workers (int): requested parallel transfers, capped at 3;
			ignored when `config` is given
		config (DownloadConfig): transfer settings

	Returns:
		DownloadReport

	"""
	if config is None:
		config = DownloadConfig(workers=workers)
	os.makedirs(out_dir, exist_ok=True)
	start = time.monotonic()
	if config.workers > MAX_PARALLEL_DOWNLOADS:
		logger.warning("{} workers requested, using {}".format(
		               config.workers, config.effective_workers))
	with ThreadPoolExecutor(max_workers=config.effective_workers) as executor:
		futures = [executor.submit(download_file, descriptor, out_dir, config)
		           for descriptor in descriptors]
		results = [future.result() for future in futures]
	return DownloadReport(results=results, wall_time=time.monotonic() - start)


class Downloader(object):
	"""Object interface of the downloader.

	Args:
		wiki (str): wiki database name
		date (str): snapshot date, YYYYMMDD
		pattern (str): selection pattern name
		output_dir (str): destination directory
		config (DownloadConfig): transfer settings
	"""

	def __init__(self, wiki, date, pattern='ehd', output_dir='./input',
	             config=None):
		self.wiki = wiki
		self.date = date
		self.pattern = pattern
		self.output_dir = output_dir
		self.config = config if config is not None else DownloadConfig()

	def list_files(self):
		"""Return the descriptors of the selected files."""
		return list_files(self.config.base_url, self.wiki, self.date,
		                  self.pattern, timeout=self.config.timeout)

	def start(self):
		"""List then download.

		Returns:
			DownloadReport
		"""
		return download(self.list_files(), self.output_dir,
		                config=self.config)
