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


"""Exceptions raised by revblocks.

All of them derive from :class:`RevblocksError`, so that callers can
catch everything coming from the library in one place.
"""


class RevblocksError(Exception):
	"""Base class of all revblocks errors."""


# core model

class BlockError(RevblocksError):
	"""Problem with a block line or a block value."""


class BlockParseError(BlockError):
	"""Malformed JSON in a block line.

	Args:
		message (str): description
		position (int): byte offset of the failure within the line
	"""

	def __init__(self, message, position=None):
		super().__init__("{} (at byte {})".format(message, position))
		self.position = position


class BlockValidationError(BlockError):
	"""The block does not follow the block schema.

	Args:
		violations (list): offending fields, as strings
	"""

	def __init__(self, violations):
		self.violations = list(violations)
		super().__init__("invalid block: {}".format(
		                 ", ".join(str(v) for v in self.violations)))


class BlockSerializationError(BlockError):
	"""The block can not be encoded (invalid unicode)."""


# ingest

class DumpError(RevblocksError):
	"""Problem while reading a dump file."""


class DumpOpenError(DumpError):
	"""The dump file can not be opened or its codec is unknown."""


class DumpFormatError(DumpError):
	"""The file is XML, but not a MediaWiki export."""


class DumpSyntaxError(DumpError):
	"""Malformed XML.

	Args:
		message (str): parser message
		offset (int): decompressed byte offset of the chunk being parsed
		article_id (str): enclosing article, if any
		line (int): line reported by the XML parser
	"""

	def __init__(self, message, offset=None, article_id=None, line=None):
		super().__init__("{} (offset {}, article {})".format(
		                 message, offset, article_id))
		self.offset = offset
		self.article_id = article_id
		self.line = line


class MalformedRevisionError(DumpError):
	"""A revision lacks mandatory children (id, timestamp)."""

	def __init__(self, message, article_id=None):
		super().__init__(message)
		self.article_id = article_id


# store

class StoreError(RevblocksError):
	"""Problem with warehouses or their sidecars."""


class SegmentStateError(StoreError):
	"""Writer used out of order (segment already open, or none open)."""


class OversizeBlockError(StoreError):
	"""A single block line exceeds the configured cap."""


class SegmentRangeError(StoreError):
	"""Segment coordinates outside of the warehouse file."""


class SegmentCorruptError(StoreError):
	"""A segment frame fails to decode or its checksum does not match."""


class DatasetError(StoreError):
	"""The dataset directory is not usable.

	Args:
		message (str): description
		violations (list): detailed problems, as strings
	"""

	def __init__(self, message, violations=()):
		self.violations = list(violations)
		if self.violations:
			message = "{}: {}".format(message, "; ".join(self.violations))
		super().__init__(message)


# pipeline

class PipelineError(RevblocksError):
	"""Problem in the building or modifying process."""


class EmptyWorklistError(PipelineError):
	"""Nothing to process."""


class OutputExistsError(PipelineError):
	"""The output directory is not empty, and overwrite was not asked."""


class ProfileError(PipelineError):
	"""A modifier profile raised while handling a block.

	Args:
		profile (str): profile name
		message (str): description of the original exception
	"""

	def __init__(self, profile, message):
		super().__init__("profile {}: {}".format(profile, message))
		self.profile = profile


class FatalJobError(PipelineError):
	"""A worker asks the whole run to stop."""


class OutOfSpaceError(FatalJobError):
	"""The output device is full."""


class StrictModeAbort(FatalJobError):
	"""A block failed while the strict error policy is on."""


# download

class DownloadError(RevblocksError):
	"""Problem while listing or downloading dump files."""


class UnknownPatternError(DownloadError):
	"""The file selection pattern is not registered."""


class JobNotFinishedError(DownloadError):
	"""The dump job is not done yet on the server."""


class ChecksumError(DownloadError):
	"""Downloaded bytes do not match the advertised checksum or size."""


class HTTPStatusError(DownloadError):
	"""Unexpected HTTP status.

	Args:
		status (int): HTTP status code
		url (str): requested url
	"""

	def __init__(self, status, url):
		super().__init__("HTTP {} for {}".format(status, url))
		self.status = status
		self.url = url
