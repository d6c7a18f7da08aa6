# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Thread pool helpers. Results are always returned in input order, so the
output of a parallel map does not depend on scheduling.
"""

import os
import logging
from concurrent.futures import ThreadPoolExecutor

__all__ = ['worker_count', 'ordered_map', 'THREADS_ENV_VAR']

LOG = logging.getLogger(__name__)

#: Environment variable that caps the number of worker threads.
THREADS_ENV_VAR = 'PAAS_THREADS'


def worker_count():
    """
    Return the number of worker threads to use: the value of the
    ``PAAS_THREADS`` environment variable if set to a positive integer,
    capped at the number of CPUs, otherwise the number of CPUs.
    """
    cpus = os.cpu_count() or 1
    value = os.environ.get(THREADS_ENV_VAR, None)
    if value is None:
        return cpus
    try:
        count = int(value)
    except ValueError:
        LOG.warning("Ignoring invalid %s value %r", THREADS_ENV_VAR, value)
        return cpus
    return max(1, min(count, cpus))


def ordered_map(func, items, workers=None):
    """
    Apply func to each item, possibly in worker threads, and return the list
    of results in the order of the items.
    """
    items = list(items)
    if workers is None:
        workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
