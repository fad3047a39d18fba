#!/usr/bin/env python3
#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
Run one stage of the edmshape pipeline.

Note: this script is also available as a CLI tool via pip under the name "edmshape".

See `--help` output for details.
"""

import logging
import sys
from typing import List, Optional

from edmshape_core.exceptions import EdmShapeError

from edmshape_bench.launcher import Launcher

_LOG = logging.getLogger(__name__)


def _main(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line and return the process exit status.

    Library errors map to their exit codes and a single stderr line
    ``error=<ClassName> message=<text>``; usage errors exit with 2 (argparse).
    """
    try:
        launcher = Launcher("edmshape", "Contour distance-matrix shape descriptors", argv=argv)
        launcher.run()
    except SystemExit as ex:
        return ex.code if isinstance(ex.code, int) else (0 if ex.code is None else 2)
    except EdmShapeError as ex:
        _LOG.debug("Failed with %s", type(ex).__name__, exc_info=True)
        message = " ".join(str(ex).split())
        print(f"error={type(ex).__name__} message={message}", file=sys.stderr)
        return ex.exit_code
    except Exception:   # pylint: disable=broad-exception-caught
        _LOG.exception("Unexpected failure")
        return 1
    # NOTE: This log line is used in the launcher tests.
    _LOG.info("Done: %s", launcher.config.command)
    return 0


if __name__ == "__main__":
    sys.exit(_main())
