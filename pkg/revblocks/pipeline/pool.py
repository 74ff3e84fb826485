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



"""Coordinator and worker processes.

The coordinator (the calling process) owns the scheduling.
Each worker has a private task queue; all workers report on one shared
result queue.  Workers never talk to each other.

Messages sent by workers are tuples ``(kind, worker_id, task_key, payload)``
where `kind` is one of

-	``ready``: setup done, the worker accepts tasks
-	``progress``: payload holds counters, and possibly a ``checkpoint``
-	``done``: payload is the result of :meth:`Job.run`
-	``failed``: payload describes the exception raised by :meth:`Job.run`
-	``fatal``: the whole run must stop
-	``exit``: payload is the summary returned by :meth:`Job.teardown`

A worker that dies without notice (killed, segfault) is noticed by its
exit code.  The coordinator then calls :meth:`Job.recover` with the last
checkpoint the worker reported, retries its task once,
and starts a replacement worker under a new id.
"""


import logging
logger = logging.getLogger(__name__)   # noqa: E402

import multiprocessing
import queue
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Optional

from revblocks.core.errors import FatalJobError


@dataclass(frozen=True)
class Task(object):
	"""One unit processing item.

	`key` must be unique within a run; `size` drives the scheduling.
	"""

	key: str
	size: int = 0
	payload: Any = None


def describe_error(error):
	"""Return a picklable description of an exception.

	>>> describe_error(ValueError('bad'))
	{'error': 'ValueError', 'message': 'bad'}
	"""
	return {'error': type(error).__name__, 'message': str(error)}


class Job(object):
	"""Work done by the workers of a :class:`WorkerPool`.

	A job instance is sent to every worker process (it must be picklable),
	so that each worker holds its own copy.
	"""

	def setup(self, worker_id):
		"""Prepare a worker, in the worker process."""
		self.worker_id = worker_id

	def run(self, task, progress):
		"""Process one task, in the worker process.

		Args:
			task (Task): the item to process
			progress (callable): ``progress(checkpoint=None, **counters)``
				reports to the coordinator

		Returns:
			picklable result

		Raises:
			FatalJobError: to stop the whole run
			Exception: the task failed, it may be retried

		"""
		raise NotImplementedError

	def teardown(self):
		"""Finish a worker, in the worker process.

		Returns:
			dict: picklable summary of the worker
		"""
		return {}

	def recover(self, worker_id, checkpoint):
		"""Clean up after a dead worker, in the coordinator process.

		Args:
			worker_id (int): id of the dead worker
			checkpoint: last checkpoint it reported, or None
		"""


def schedule_next(pending, inflight_bytes=0, busy=0, cap=None):
	"""Pick the next task, largest first.

	With a `cap` on the summed size of in-flight tasks, the largest task
	that fits is picked; when none fits, the largest one is picked only
	if nothing is in flight, otherwise the worker waits.

	>>> pending = [Task('a', 9), Task('b', 7), Task('c', 2), Task('d', 1)]
	>>> schedule_next(pending).key
	'a'
	>>> schedule_next(pending, inflight_bytes=9, busy=1, cap=10).key
	'd'
	>>> schedule_next(pending, inflight_bytes=9, busy=1, cap=9) is None
	True

	Args:
		pending (list): tasks sorted by decreasing size
		inflight_bytes (int): summed size of the tasks being processed
		busy (int): number of tasks being processed
		cap (int): limit on in-flight bytes, None for no limit

	Returns:
		Task or None: None means wait

	"""
	if not pending:
		return None
	if cap is None:
		return pending[0]
	for task in pending:
		if inflight_bytes + task.size <= cap:
			return task
	if busy == 0:
		return pending[0]
	return None


class LargestFirstScheduler(object):
	"""Hand out tasks by decreasing size, under an optional byte cap."""

	def __init__(self, tasks=(), cap=None):
		self.cap = cap
		self._pending = sorted(tasks, key=lambda task: task.size,
		                       reverse=True)

	def __len__(self):
		return len(self._pending)

	def push(self, task):
		"""Put back a task (for a retry)."""
		self._pending.append(task)
		self._pending.sort(key=lambda task: task.size, reverse=True)

	def pop(self, inflight_bytes=0, busy=0):
		"""Remove and return the next task, or None to wait."""
		task = schedule_next(self._pending, inflight_bytes, busy, self.cap)
		if task is not None:
			self._pending.remove(task)
		return task


class FifoScheduler(object):
	"""Hand out tasks in their original order."""

	def __init__(self, tasks=()):
		self._pending = list(reversed(tasks))

	def __len__(self):
		return len(self._pending)

	def push(self, task):
		self._pending.append(task)

	def pop(self, inflight_bytes=0, busy=0):
		if not self._pending:
			return None
		return self._pending.pop()


def _worker_main(worker_id, job, task_queue, result_queue):
	"""Entry point of a worker process."""
	try:
		job.setup(worker_id)
	except Exception as error:
		logger.exception("worker {} setup failed".format(worker_id))
		result_queue.put(('fatal', worker_id, None, describe_error(error)))
		return
	result_queue.put(('ready', worker_id, None, None))
	while True:
		task = task_queue.get()
		if task is None:
			break

		def progress(checkpoint=None, _key=task.key, **counters):
			payload = dict(counters)
			if checkpoint is not None:
				payload['checkpoint'] = checkpoint
			result_queue.put(('progress', worker_id, _key, payload))

		try:
			result = job.run(task, progress)
		except FatalJobError as error:
			logger.error("worker {}: fatal error on {}: {}".format(
			             worker_id, task.key, error))
			result_queue.put(('fatal', worker_id, task.key,
			                  describe_error(error)))
			break
		except Exception as error:
			logger.exception("worker {}: task {} failed".format(
			                 worker_id, task.key))
			result_queue.put(('failed', worker_id, task.key,
			                  describe_error(error)))
		else:
			result_queue.put(('done', worker_id, task.key, result))
	try:
		summary = job.teardown()
	except Exception as error:
		logger.exception("worker {} teardown failed".format(worker_id))
		summary = {'teardown_error': describe_error(error)}
	result_queue.put(('exit', worker_id, None, summary))


class _Worker(object):
	"""Coordinator-side handle of a worker process."""

	def __init__(self, worker_id, process, task_queue):
		self.worker_id = worker_id
		self.process = process
		self.task_queue = task_queue
		self.ready = False
		self.task = None
		self.checkpoint = None
		self.exited = False
		self.stopping = False


@dataclass
class PoolOutcome(object):
	"""What a :meth:`WorkerPool.run` produced."""

	#: list of (Task, result)
	results: list = field(default_factory=list)
	#: list of (Task, error description), after retries
	failures: list = field(default_factory=list)
	#: worker id -> teardown summary
	summaries: dict = field(default_factory=dict)
	#: error description of the fatal error that stopped the run
	fatal: Optional[dict] = None
	#: tasks never started because of a fatal error
	unstarted: list = field(default_factory=list)
	crashes: int = 0


class WorkerPool(object):
	"""Run a :class:`Job` over worker processes.

	Args:
		job (Job): work to do, copied into every worker
		num_workers (int): worker processes
		start_method (str): multiprocessing start method, None for default
		retries (int): extra attempts of a failed or crashed task
		poll_interval (float): seconds between liveness checks
		on_progress (callable): called as
			``on_progress(worker_id, task, payload)`` in the coordinator
	"""

	def __init__(self, job, num_workers=1, start_method=None, retries=1,
	             poll_interval=0.2, on_progress=None):
		if num_workers < 1:
			raise ValueError("num_workers must be >= 1")
		self.job = job
		self.num_workers = num_workers
		self.retries = retries
		self.poll_interval = poll_interval
		self.on_progress = on_progress
		self._context = multiprocessing.get_context(start_method)
		self._workers = {}
		self._next_id = 0

	def _spawn(self):
		worker_id = self._next_id
		self._next_id += 1
		task_queue = self._context.Queue()
		process = self._context.Process(
		    target=_worker_main,
		    args=(worker_id, self.job, task_queue, self._results),
		    name='revblocks-worker-{}'.format(worker_id),
		    daemon=True)
		process.start()
		self._workers[worker_id] = _Worker(worker_id, process, task_queue)
		logger.debug("started worker {}".format(worker_id))

	def run(self, tasks, scheduler=None):
		"""Process every task.

		Args:
			tasks (iterable of Task): work items, unused when `scheduler`
				is given
			scheduler: object with ``pop``, ``push`` and ``__len__``,
				defaults to :class:`FifoScheduler`

		Returns:
			PoolOutcome

		"""
		if scheduler is None:
			scheduler = FifoScheduler(list(tasks))
		self._scheduler = scheduler
		self._outcome = PoolOutcome()
		self._attempts = Counter()
		self._results = self._context.Queue()
		self._workers = {}
		for _ in range(self.num_workers):
			self._spawn()
		try:
			while self._outcome.fatal is None and (
			        len(scheduler) or self._busy()):
				self._assign()
				try:
					message = self._results.get(timeout=self.poll_interval)
				except queue.Empty:
					self._check_alive()
					continue
				self._handle(message)
		finally:
			self._shutdown()
		while len(scheduler):
			task = scheduler.pop()
			if task is None:
				break
			self._outcome.unstarted.append(task)
		return self._outcome

	def _busy(self):
		return [worker for worker in self._workers.values()
		        if worker.task is not None]

	def _assign(self):
		for worker in self._workers.values():
			if not worker.ready or worker.task is not None or worker.exited:
				continue
			busy = self._busy()
			inflight = sum(w.task.size for w in busy)
			task = self._scheduler.pop(inflight_bytes=inflight,
			                           busy=len(busy))
			if task is None:
				return
			worker.task = task
			worker.checkpoint = None
			worker.task_queue.put(task)

	def _handle(self, message):
		kind, worker_id, key, payload = message
		worker = self._workers.get(worker_id)
		if worker is None:
			return
		if kind == 'ready':
			worker.ready = True
		elif kind == 'progress':
			if 'checkpoint' in payload:
				worker.checkpoint = payload['checkpoint']
			if self.on_progress is not None and worker.task is not None:
				self.on_progress(worker_id, worker.task, payload)
		elif kind == 'done':
			self._outcome.results.append((worker.task, payload))
			worker.task = None
		elif kind == 'failed':
			task, worker.task = worker.task, None
			self._retry_or_fail(task, payload)
		elif kind == 'fatal':
			self._outcome.fatal = dict(payload, worker=worker_id)
			if worker.task is not None:
				self._outcome.failures.append((worker.task, payload))
				worker.task = None
		elif kind == 'exit':
			worker.exited = True
			self._outcome.summaries[worker_id] = payload

	def _retry_or_fail(self, task, error):
		self._attempts[task.key] += 1
		if self._attempts[task.key] <= self.retries:
			logger.warning("retrying {} ({})".format(task.key,
			                                         error['message']))
			self._scheduler.push(task)
		else:
			self._outcome.failures.append((task, error))

	def _drain(self):
		while True:
			try:
				message = self._results.get_nowait()
			except queue.Empty:
				return
			self._handle(message)

	def _check_alive(self):
		dead = [worker for worker in self._workers.values()
		        if not worker.exited and worker.process.exitcode is not None]
		if not dead:
			return
		# messages sent just before dying
		self._drain()
		for worker in dead:
			if worker.exited:
				continue
			worker.exited = True
			self._outcome.crashes += 1
			logger.error("worker {} died (exit code {})".format(
			             worker.worker_id, worker.process.exitcode))
			task, worker.task = worker.task, None
			try:
				self.job.recover(worker.worker_id, worker.checkpoint)
			except Exception as error:
				logger.exception("recovery of worker {} failed".format(
				                 worker.worker_id))
				self._outcome.fatal = dict(describe_error(error),
				                           worker=worker.worker_id)
				return
			if task is not None:
				self._retry_or_fail(task, {
				    'error': 'WorkerCrash',
				    'message': 'worker {} died with exit code {}'.format(
				        worker.worker_id, worker.process.exitcode)})
			if len(self._scheduler):
				self._spawn()

	def _shutdown(self, timeout=10.0):
		for worker in self._workers.values():
			if not worker.exited and worker.process.is_alive():
				worker.task_queue.put(None)
		deadline = time.monotonic() + timeout
		while time.monotonic() < deadline:
			waiting = [worker for worker in self._workers.values()
			           if not worker.exited and worker.process.is_alive()]
			if not waiting:
				break
			try:
				message = self._results.get(timeout=self.poll_interval)
			except queue.Empty:
				continue
			self._handle(message)
		self._drain()
		for worker in self._workers.values():
			if worker.process.is_alive():
				logger.warning("terminating worker {}".format(
				               worker.worker_id))
				worker.process.terminate()
			worker.process.join(timeout=timeout)
			if worker.task is not None:
				task, worker.task = worker.task, None
				try:
					self.job.recover(worker.worker_id, worker.checkpoint)
				except Exception:
					logger.exception("recovery of worker {} failed".format(
					                 worker.worker_id))
				self._outcome.failures.append((task, {
				    'error': 'Interrupted',
				    'message': 'stopped by a fatal error elsewhere'}))
