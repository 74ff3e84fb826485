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


"""Package containing the :term:`core` types.

A revision-history dump becomes a dataset made of :term:`warehouses`.
Each warehouse holds consecutive :term:`segments`,
and each segment holds the :term:`blocks` of one article.

Blocks are defined in the :mod:`~revblocks.core.block` submodule,
segment metadata in :mod:`~revblocks.core.metadata`,
run configurations in :mod:`~revblocks.core.config`
and the exceptions in :mod:`~revblocks.core.errors`.


Core glossary
~~~~~~~~~~~~~

.. glossary::

	core
		Types shared by every other subpackage.

	block
	blocks
		One revision of one article, serialized as a single JSON line.
		The atomic unit of storage and processing.

	segment
	segments
		All blocks of one article, plus its metadata.
		Stored as one independently compressed frame (a gzip member).

	warehouse
	warehouses
		One file holding consecutive segment frames up to a size limit,
		paired with an uncompressed metadata :term:`sidecar`.

	sidecar
		JSONL file listing each segment identity, counters,
		and the byte coordinates of its frame.

	profile
	profiles
		User-defined per-block transformation, with a per-segment
		lifecycle. Returning ``None`` drops the block.

	unit processing item
		The smallest piece of work handed to a worker:
		a dump file for building, a segment for modifying.
"""
