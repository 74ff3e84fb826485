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



import os
import time

import pytest

from revblocks.core.errors import FatalJobError
from revblocks.pipeline.pool import (
	FifoScheduler,
	Job,
	LargestFirstScheduler,
	Task,
	WorkerPool,
)


class SquareJob(Job):

	def run(self, task, progress):
		progress(done=1)
		if task.payload == 'bad':
			raise ValueError('bad payload')
		return task.payload ** 2

	def teardown(self):
		return {'worker': self.worker_id}


class CrashOnceJob(Job):
	"""Dies the first time it meets 'crash', succeeds afterwards."""

	def __init__(self, marker):
		self.marker = marker
		self.recovered = []

	def run(self, task, progress):
		if task.payload == 'crash' and not os.path.exists(self.marker):
			open(self.marker, 'w').close()
			progress(checkpoint=('before', task.key))
			# let the queue feeder thread flush
			time.sleep(0.5)
			os._exit(3)
		return task.key

	def recover(self, worker_id, checkpoint):
		self.recovered.append((worker_id, checkpoint))


class StopJob(Job):

	def run(self, task, progress):
		if task.payload == 'stop':
			raise FatalJobError('no space left')
		time.sleep(0.05)
		return task.key


def test_largest_first():
	scheduler = LargestFirstScheduler([Task('a', 2), Task('b', 9),
	                                   Task('c', 7), Task('d', 1)])
	assert len(scheduler) == 4
	assert [scheduler.pop().key for _ in range(4)] == ['b', 'c', 'a', 'd']
	assert scheduler.pop() is None


def test_largest_first_cap():
	scheduler = LargestFirstScheduler([Task('a', 9), Task('b', 7),
	                                   Task('c', 2), Task('d', 1)], cap=10)
	assert scheduler.pop().key == 'a'
	assert scheduler.pop(inflight_bytes=9, busy=1).key == 'd'
	# 'b' and 'c' do not fit: wait
	assert scheduler.pop(inflight_bytes=10, busy=2) is None
	assert scheduler.pop(inflight_bytes=1, busy=1).key == 'b'
	assert scheduler.pop(inflight_bytes=8, busy=2).key == 'c'


def test_largest_first_oversized_alone():
	scheduler = LargestFirstScheduler([Task('huge', 50), Task('d', 1)],
	                                  cap=10)
	assert scheduler.pop().key == 'd'
	assert scheduler.pop(inflight_bytes=1, busy=1) is None
	assert scheduler.pop(inflight_bytes=0, busy=0).key == 'huge'


def test_push_keeps_order():
	scheduler = LargestFirstScheduler([Task('a', 5), Task('b', 1)])
	task = scheduler.pop()
	scheduler.push(Task('c', 3))
	scheduler.push(task)
	assert [scheduler.pop().key for _ in range(3)] == ['a', 'c', 'b']


def test_fifo():
	scheduler = FifoScheduler([Task('x', 1), Task('y', 9), Task('z', 5)])
	assert [scheduler.pop().key for _ in range(3)] == ['x', 'y', 'z']
	assert scheduler.pop() is None


def test_bad_num_workers():
	with pytest.raises(ValueError):
		WorkerPool(SquareJob(), num_workers=0)


@pytest.mark.parametrize('num_workers', [1, 3])
def test_run(num_workers):
	seen = []
	pool = WorkerPool(SquareJob(), num_workers=num_workers,
	                  poll_interval=0.05,
	                  on_progress=lambda wid, task, payload: seen.append(
	                      (task.key, payload)))
	tasks = [Task(str(n), size=n, payload=n) for n in range(10)]
	outcome = pool.run(tasks, scheduler=LargestFirstScheduler(tasks))
	assert sorted(result for _, result in outcome.results) == \
	    [n ** 2 for n in range(10)]
	assert outcome.failures == []
	assert outcome.fatal is None
	assert outcome.crashes == 0
	assert sorted(outcome.summaries) == list(range(num_workers))
	assert sorted(key for key, _ in seen) == sorted(t.key for t in tasks)
	assert all(payload == {'done': 1} for _, payload in seen)


def test_failure_after_retry():
	pool = WorkerPool(SquareJob(), num_workers=2, retries=1,
	                  poll_interval=0.05)
	outcome = pool.run([Task('ok', payload=2), Task('ko', payload='bad')])
	assert [result for _, result in outcome.results] == [4]
	[(task, error)] = outcome.failures
	assert task.key == 'ko'
	assert error == {'error': 'ValueError', 'message': 'bad payload'}


def test_crash_recovery(tmp_path):
	job = CrashOnceJob(str(tmp_path / 'crashed'))
	pool = WorkerPool(job, num_workers=2, poll_interval=0.05)
	tasks = [Task(key, payload=key) for key in ('a', 'crash', 'b', 'c')]
	outcome = pool.run(tasks)
	assert outcome.crashes == 1
	assert outcome.failures == []
	assert sorted(result for _, result in outcome.results) == \
	    ['a', 'b', 'c', 'crash']
	[(worker_id, checkpoint)] = job.recovered
	assert checkpoint == ('before', 'crash')
	# the replacement worker has a fresh id
	assert max(outcome.summaries) >= 2
	assert worker_id not in outcome.summaries


def test_fatal_stops_the_run():
	pool = WorkerPool(StopJob(), num_workers=1, poll_interval=0.05)
	tasks = [Task(key, payload=key) for key in ('stop', 'a', 'b')]
	outcome = pool.run(tasks)
	assert outcome.fatal['error'] == 'FatalJobError'
	assert outcome.fatal['worker'] == 0
	assert [task.key for task, _ in outcome.failures] == ['stop']
	assert sorted(task.key for task in outcome.unstarted) == ['a', 'b']
	assert outcome.results == []
