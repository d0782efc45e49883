"""Test server built on SolverServer.

QuickServer caps every solve with small defaults and adds one endpoint that
always fails, to exercise the 500 path of the endpoint wrapper.

Running the module starts it for manual testing.
"""

# pylint: disable=E1101
import sys

from mdrsp import SolverServer


class QuickServer(SolverServer):
    """SolverServer with short solves and a failing /explode endpoint."""

    default_solver_params = {'time_limit': 120, 'log_every': 1000}

    def __init__(self, app_name: str = "QuickServerApp", verbose: bool = False):
        """Initialize with test defaults."""
        super().__init__(verbose=verbose, app_name=app_name)

    def explode(self) -> dict:
        """Raise an unexpected error."""
        raise RuntimeError("solver backend unavailable")


if __name__ == "__main__":
    port = int(sys.argv[1]) if len(sys.argv) > 1 else 5001
    QuickServer(verbose=True).run(host="0.0.0.0", port=port)
