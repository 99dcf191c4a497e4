"""Kernel backend selection.

The compiled extension is used when importable; set ``REPCOST_PURE_PYTHON=1``
to force the reference implementation.
"""

import os

from . import _kernels_py

BACKEND = "python"
g1_chain = _kernels_py.g1_chain
mc_chain = _kernels_py.mc_chain
g1_schedule_costs = _kernels_py.g1_schedule_costs

if not os.environ.get("REPCOST_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        g1_chain = _kernels.g1_chain
        mc_chain = _kernels.mc_chain
        g1_schedule_costs = _kernels.g1_schedule_costs
