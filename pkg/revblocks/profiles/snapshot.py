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



"""Periodic snapshots of every article."""


from datetime import timedelta

from revblocks.pipeline.modifier import ModifierProfile
from revblocks.shared.tools import parse_timestamp


DEFAULT_INTERVAL_DAYS = 180


class SnapshotProfile(ModifierProfile):
	"""Keep one revision every `interval_days` days.

	The first revision of an article is kept; a later one is kept when
	it is at least `interval_days` after the last kept revision.

	>>> profile = SnapshotProfile(interval_days=180)
	>>> meta = {}
	>>> [profile.block({'timestamp': ts}, meta)[0] is not None
	...  for ts in ('2020-01-01T00:00:00Z', '2020-04-10T00:00:00Z',
	...             '2020-07-19T00:00:00Z')]
	[True, False, True]

	Args:
		interval_days (int): minimal spacing of kept revisions
	"""

	cli_name = 'snapshot'

	def __init__(self, interval_days=DEFAULT_INTERVAL_DAYS):
		if (not isinstance(interval_days, int) or isinstance(interval_days,
		                                                     bool)
		        or interval_days < 1):
			raise ValueError("interval_days must be a positive integer")
		self.interval_days = interval_days
		self.last_kept = None

	@classmethod
	def from_argument(cls, argument=None):
		if argument is None:
			return cls()
		try:
			days = int(argument)
		except ValueError:
			raise ValueError("snapshot takes a number of days, not {!r}"
			                 .format(argument)) from None
		return cls(interval_days=days)

	@property
	def config(self):  # noqa: D401
		"""Configuration dictionary."""
		return {'interval_days': self.interval_days}

	@classmethod
	def from_config(cls, config):
		"""Alternate constructor."""
		return cls(**config)

	def block(self, content, metadata):
		moment = parse_timestamp(content['timestamp'])
		if (self.last_kept is not None
		        and moment < self.last_kept + timedelta(days=self.interval_days)):
			# Return None to not save this block; metadata is still needed
			return None, metadata
		self.last_kept = moment
		return content, metadata
