"""mdrsp - branch-and-cut for the multi-depot ring star problem."""

from .instance import (Instance, InstanceFormatError, InfeasibleSolutionError, Ring, Solution, check_feasible,
                       generate_instance, parse_tsplib, read_instance, read_solution, solution_cost, write_instance,
                       write_solution)
from .logger import LoggerWriter, enter_exit_logger, setup_logger
from .search import Report, SearchDefectError, SolverParams, Termination, branch_and_cut
from .service import RestCodes, RestResponse, SolverServer

__version__ = "0.2.0"
__all__ = [
    "Instance",
    "InstanceFormatError",
    "InfeasibleSolutionError",
    "Ring",
    "Solution",
    "check_feasible",
    "generate_instance",
    "parse_tsplib",
    "read_instance",
    "read_solution",
    "solution_cost",
    "write_instance",
    "write_solution",
    "Report",
    "SearchDefectError",
    "SolverParams",
    "Termination",
    "branch_and_cut",
    "RestCodes",
    "RestResponse",
    "SolverServer",
    "setup_logger",
    "enter_exit_logger",
    "LoggerWriter",
]
