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
polar-paas - Face presentation attack detection from polarization images
"""

# There are submodules, but users shouldn't need to know about them.
# Importing just this module is enough.

from ._exceptions import *  # noqa: F403,F401
from ._polar import *  # noqa: F403,F401
from ._image_io import *  # noqa: F403,F401
from ._profile_file import *  # noqa: F403,F401
from ._manifest import *  # noqa: F403,F401
from ._parallel import *  # noqa: F403,F401
from ._synth import *  # noqa: F403,F401
from ._features import *  # noqa: F403,F401
from ._checkpoint import *  # noqa: F403,F401
from ._embed_net import *  # noqa: F403,F401
from ._svm import *  # noqa: F403,F401
from ._eval import *  # noqa: F403,F401
from ._experiment_file import *  # noqa: F403,F401
from . import _version

#: The full version of this package including any development levels, as a
#: :term:`string`.
#:
#: Possible formats for this version string are:
#:
#: * "M.N.P.dev1": Development level 1 of a not yet released version M.N.P
#: * "M.N.P": A released version M.N.P
__version__ = _version.__version__
