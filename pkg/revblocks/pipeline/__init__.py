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



"""Parallel processing of dumps and datasets.

:mod:`~revblocks.pipeline.pool` runs a :class:`~revblocks.pipeline.pool.Job`
over worker processes,
:mod:`~revblocks.pipeline.builder` turns dumps into a dataset,
:mod:`~revblocks.pipeline.modifier` turns a dataset into another one.
"""
