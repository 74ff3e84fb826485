"""Tools that can be used by several subpackages."""

import inspect
from datetime import datetime, timezone


def find_classes(module, base=None):
	"""Find classes in a given module.

	Args:
		module: a python module object
		base (type): if given, keep only subclasses of `base`
			(`base` itself excluded)

	Returns:
		dict: {name_str: cls} dictionnary

	"""

	# set module as a default argument to store it
	# predicate will be used with the member argument only
	def predicate(member, module=module):
		if not (inspect.isclass(member)
		        and member.__module__ == module.__name__):
			return False
		if base is None:
			return True
		return issubclass(member, base) and member is not base

	# getmembers return a list of tuples like
	# [('SnapshotProfile', <class '...SnapshotProfile'>), ...]
	lst = inspect.getmembers(module, predicate)
	return {name: cls for (name, cls) in lst}


def parse_timestamp(value):
	"""Parse an ISO-8601 instant into an aware UTC datetime.

	A trailing ``Z`` is accepted (as found in dumps),
	naive values are taken as UTC.

	>>> parse_timestamp('2021-03-04T05:06:07Z')
	datetime.datetime(2021, 3, 4, 5, 6, 7, tzinfo=datetime.timezone.utc)

	Args:
		value (str): timestamp text

	Returns:
		datetime.datetime

	Raises:
		ValueError: `value` is not an ISO-8601 instant

	"""
	if not isinstance(value, str):
		raise ValueError("timestamp must be a string, not {}".format(
		                 type(value).__name__))
	text = value.strip()
	if text.endswith(('Z', 'z')):
		text = text[:-1] + '+00:00'
	moment = datetime.fromisoformat(text)
	if moment.tzinfo is None:
		return moment.replace(tzinfo=timezone.utc)
	return moment.astimezone(timezone.utc)


def is_timestamp(value):
	"""Return True if `value` parses with :func:`parse_timestamp`.

	>>> is_timestamp('yesterday')
	False
	"""
	try:
		parse_timestamp(value)
	except ValueError:
		return False
	return True


def key_paths(obj, prefix=''):
	"""Return the set of dotted key paths of a JSON object.

	Lists of objects contribute ``key[].child`` paths.

	>>> sorted(key_paths({'a': 1, 'text': {'#text': 'x'}}))
	['a', 'text', 'text.#text']
	>>> sorted(key_paths({'changes': [{'type': 'add'}]}))
	['changes', 'changes[].type']

	Args:
		obj (dict): decoded JSON object

	Returns:
		set of str

	"""
	paths = set()
	for key, value in obj.items():
		path = prefix + key
		paths.add(path)
		if isinstance(value, dict):
			paths.update(key_paths(value, path + '.'))
		elif isinstance(value, list):
			for item in value:
				if isinstance(item, dict):
					paths.update(key_paths(item, path + '[].'))
	return paths
