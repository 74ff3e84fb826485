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



"""Package containing the built-in :term:`profiles`.

Every submodule of this directory is imported, and its
:class:`~revblocks.pipeline.modifier.ModifierProfile` subclasses with a
``cli_name`` are registered, so that the command line can refer to them
by name:

>>> sorted(available_profiles())
['editdiff', 'links', 'snapshot', 'urldiff']
>>> make_profile('snapshot:30').interval_days
30


Profiles glossary
~~~~~~~~~~~~~~~~~

.. glossary::

	snapshot
		Keeps revisions spaced by at least a given number of days.

	links
		Replaces each revision by its clean text and its links.

	urldiff
		Replaces each revision by the URLs it added and removed.

	editdiff
		Replaces each revision by its line changes
		against the previous one.
"""


import os
from importlib import import_module

from revblocks.pipeline.modifier import ModifierProfile
from revblocks.shared.tools import find_classes


_modules = []
# import all modules in this subpackage directory
for filename in sorted(os.listdir(os.path.dirname(__file__))):
	if filename[-3:] == ".py" and filename != "__init__.py":
		module_name = filename[:-3]
		_modules.append(import_module(".{}".format(module_name),
		                              "revblocks.profiles"))


def available_profiles():
	"""Return a dictionary cli_name -> profile class."""
	registry = {}
	for module in _modules:
		for cls in find_classes(module, ModifierProfile).values():
			if cls.cli_name is not None:
				registry[cls.cli_name] = cls
	return registry


def make_profile(text):
	"""Instantiate a built-in profile from its ``NAME[:ARG]`` form.

	Raises:
		KeyError: unknown name
		ValueError: invalid argument

	"""
	name, _, argument = text.partition(':')
	registry = available_profiles()
	if name not in registry:
		raise KeyError("unknown profile {!r}, built-ins are: {}".format(
		               name, ", ".join(sorted(registry))))
	return registry[name].from_argument(argument if _ else None)
