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
Test the _parallel.py module.
"""

import os
import threading
import pytest

from polar_paas import worker_count, ordered_map, THREADS_ENV_VAR

from ..utils.simplified_test_function import simplified_test_function


TESTCASES_WORKER_COUNT = [

    # Testcases for worker_count()

    # Each list item is a testcase tuple with these items:
    # * desc: Short testcase description.
    # * kwargs: Keyword arguments for the test function:
    #   * env_value: Value of the environment variable, or None for unset.
    #   * exp_count: Expected count, or a function of the number of CPUs.
    # * exp_exc_types: Expected exception type(s), or None.
    # * exp_warn_types: Expected warning type(s), or None.
    # * condition: Boolean condition for testcase to run, or 'pdb' for debugger

    (
        "Unset variable",
        dict(env_value=None, exp_count=lambda cpus: cpus),
        None, None, True
    ),
    (
        "Positive value",
        dict(env_value='3', exp_count=lambda cpus: min(3, cpus)),
        None, None, True
    ),
    (
        "Zero is raised to one",
        dict(env_value='0', exp_count=1),
        None, None, True
    ),
    (
        "Invalid value",
        dict(env_value='many', exp_count=lambda cpus: cpus),
        None, None, True
    ),
    (
        "Value above the number of CPUs is capped",
        dict(env_value='100000', exp_count=lambda cpus: cpus),
        None, None, True
    ),
]


@pytest.mark.parametrize(
    "desc, kwargs, exp_exc_types, exp_warn_types, condition",
    TESTCASES_WORKER_COUNT)
@simplified_test_function
def test_worker_count(testcase, env_value, exp_count):
    """
    Test function for worker_count()
    """
    saved = os.environ.pop(THREADS_ENV_VAR, None)
    try:
        if env_value is not None:
            os.environ[THREADS_ENV_VAR] = env_value

        # The code to be tested
        count = worker_count()

    finally:
        os.environ.pop(THREADS_ENV_VAR, None)
        if saved is not None:
            os.environ[THREADS_ENV_VAR] = saved

    # Ensure that exceptions raised in the remainder of this function
    # are not mistaken as expected exceptions
    assert testcase.exp_exc_types is None

    if callable(exp_count):
        exp_count = exp_count(os.cpu_count() or 1)
    assert count == exp_count


@pytest.mark.parametrize("workers", [1, 2, 8])
def test_ordered_map_order(workers):
    """Test that ordered_map() returns the results in input order."""
    items = list(range(50))
    result = ordered_map(lambda x: x * x, items, workers)
    assert result == [x * x for x in items]


def test_ordered_map_empty():
    """Test ordered_map() on no items."""
    assert ordered_map(lambda x: x, [], 4) == []


def test_ordered_map_single_worker_in_caller_thread():
    """Test that one worker runs the function in the calling thread."""
    caller = threading.get_ident()
    idents = ordered_map(lambda x: threading.get_ident(), [1, 2, 3], 1)
    assert idents == [caller] * 3


def test_ordered_map_propagates_exception():
    """Test that an exception in a worker is raised to the caller."""

    def func(x):
        if x == 3:
            raise ValueError("bad item")
        return x

    with pytest.raises(ValueError):
        ordered_map(func, range(6), 3)
