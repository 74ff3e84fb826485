"""Structured log lines.

Every record becomes one JSON object on a single line.
Structured values are passed with ``extra={'fields': {...}}``:

>>> import logging
>>> record = logging.LogRecord('revblocks.x', logging.INFO, __file__, 1,
...                            'article done', None, None)
>>> record.fields = {'worker': 2}
>>> line = JsonFormatter().format(record)
>>> import json
>>> json.loads(line)['worker']
2
"""

import json
import logging
import time


class JsonFormatter(logging.Formatter):
	"""Format log records as single-line JSON objects."""

	def format(self, record):
		entry = {
		    'time': time.strftime('%Y-%m-%dT%H:%M:%S',
		                          time.gmtime(record.created)),
		    'level': record.levelname,
		    'logger': record.name,
		    'message': record.getMessage(),
		}
		fields = getattr(record, 'fields', None)
		if fields:
			for key, value in fields.items():
				entry.setdefault(key, value)
		if record.exc_info:
			entry['exception'] = self.formatException(record.exc_info)
		return json.dumps(entry, ensure_ascii=False, default=str)
