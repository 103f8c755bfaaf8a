import mixcomp.channels as channels
import mixcomp.cli as cli
import mixcomp.compression as compression
import mixcomp.decomposition as decomposition
import mixcomp.ensembles as ensembles
import mixcomp.matcore as matcore
import mixcomp.reports as reports
import mixcomp.tolerance as tolerance
import mixcomp.utils as utils

__all__ = [
    "matcore",
    "ensembles",
    "decomposition",
    "channels",
    "compression",
    "reports",
    "tolerance",
    "cli",
    "utils",
]
