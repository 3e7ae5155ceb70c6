"""Backend selection for the session kernel.

The compiled extension is preferred when it imported cleanly; set
ARQSEC_PURE=1 to force the pure-Python fallback (the two are bit-for-bit
interchangeable, the compiled one is just faster). ``BACKEND`` names the
active implementation for diagnostics and the benchmark.
"""

import os

from . import reference

if os.environ.get("ARQSEC_PURE"):
    _impl = reference
    BACKEND = "pure"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = reference
        BACKEND = "pure"

unicast_data_phase = _impl.unicast_data_phase
