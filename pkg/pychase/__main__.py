# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import sys

from ._cli import main


sys.exit(main())
