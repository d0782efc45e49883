# pylint: disable=E1101
"""
Flask JSON front end to the solver.

Every public method of :class:`SolverServer` is an endpoint ``/<name>`` and
every public property is ``/property/<name>``; responses use the envelope
``{"status", "data", "code"}``.
"""

import inspect
import os
import sys
import traceback
from enum import Enum
from functools import wraps
from logging import getLogger

from flask import Flask, Response, jsonify, redirect, request
from flask_cors import CORS

from .instance import (CLASS_I, check_feasible, generate_instance, instance_from_dict, instance_to_dict,
                       parse_tsplib, solution_cost, solution_from_dict)
from .logger import ROOT_LOGGER_NAME, LoggerWriter, enter_exit_logger, log_file_path, set_verbosity, setup_logger
from .polylab import lab_report
from .search import SolverParams, Termination, branch_and_cut

SERVICE_LOGGER_NAME = f'{ROOT_LOGGER_NAME}.service'


class RestCodes(Enum):
    """
    HTTP status codes used by the service.
    """
    OK = 200
    CREATED = 201
    ACCEPTED = 202
    BAD_REQUEST = 400
    NOT_FOUND = 404
    METHOD_NOT_ALLOWED = 405
    INTERNAL_SERVER_ERROR = 500


class RestResponse:
    """
    a RESTful response: the JSON envelope and its status code
    """
    def __init__(self, data, code: RestCodes, status: str | None = None) -> None:
        self.data = data
        self.code = code
        self.status = status if status else code.name
        self.response = jsonify({'status': self.status,
                                 'data': self.data,
                                 'code': self.code.value}), self.code.value

    @staticmethod
    def create(data, code: int | str | RestCodes = 200, status: str | None = None) -> tuple:
        """
        Create a RESTful response.

        :param data: The data to include in the response.
        :param code: The HTTP status code (an int, a string or a RestCodes member).
        :param status: The status message (optional).
        :return: A tuple containing the JSON response and the HTTP status code.
        """
        if not isinstance(code, RestCodes):
            try:
                if isinstance(code, str):
                    code = RestCodes(int(code)) if code.isdigit() else RestCodes[code.upper()]
                else:
                    code = RestCodes(code)
            except (KeyError, ValueError):
                code = RestCodes.INTERNAL_SERVER_ERROR

        return RestResponse(data, code, status).response


class MetaSolverServer(type):
    """
    Registers every public method of the class (inherited ones included) as
    an endpoint and every public property as ``/property/<name>``.
    """

    excluded_methods = {'set_verbose', 'run', 'restore_streams'}

    def __new__(mcs, name, bases, attrs):
        attrs['_endpoint_map'] = {}
        attrs['_endpoint_method_map'] = {}
        new_class = super().__new__(mcs, name, bases, attrs)

        for key, value in inspect.getmembers(new_class, predicate=inspect.isfunction):
            if key.startswith('_') or key in mcs.excluded_methods:
                continue
            setattr(new_class, key, mcs._wrap_endpoint(value))
            mcs._register(new_class, f'/{key}'.lower(), key)

        for property_name, _ in inspect.getmembers(new_class, predicate=lambda x: isinstance(x, property)):
            if property_name.startswith('_'):
                continue

            def make_property_getter(prop_name):
                def property_getter(self):
                    return getattr(self, prop_name)
                property_getter.__name__ = f'_property_getter_{prop_name}'
                return property_getter

            getter_name = f'_property_getter_{property_name}'
            setattr(new_class, getter_name, mcs._wrap_endpoint(make_property_getter(property_name)))
            mcs._register(new_class, f'/property/{property_name}'.lower(), getter_name)

        return new_class

    @staticmethod
    def _register(new_class, path: str, attribute: str) -> None:
        if path in new_class._endpoint_map:
            raise ValueError(f'Endpoint path conflict: {path} is already registered. '
                             'remember that endpoint paths are case-insensitive.')
        new_class._endpoint_map[path] = attribute

    @classmethod
    def _wrap_endpoint(mcs, func):
        """
        Wrap a method as an endpoint: query and JSON parameters become keyword
        arguments, the result goes into the envelope, input errors become 400
        and any other exception 500.
        """
        if getattr(func, '_is_wrapped', False):
            return func
        func = enter_exit_logger(SERVICE_LOGGER_NAME)(func)
        logger = getLogger(SERVICE_LOGGER_NAME)

        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                kwargs.update(request.args.to_dict(flat=True))
                if request.is_json:
                    kwargs.update(request.get_json())

                result = func(*args, **kwargs)

                if isinstance(result, tuple) and len(result) == 2:
                    data, code = result
                    return RestResponse.create(data, code)
                return RestResponse.create(result)

            except (ValueError, TypeError) as e:
                logger.debug(traceback.format_exc())
                logger.info(f'{func.__name__}: rejected input: {e}')
                return RestResponse.create({'error': str(e)}, RestCodes.BAD_REQUEST)
            except Exception as e:
                logger.debug(traceback.format_exc())
                logger.error(f'{func.__name__} failed: {e}')
                return RestResponse.create({'error': str(e)}, RestCodes.INTERNAL_SERVER_ERROR)

        wrapper._is_wrapped = True
        return wrapper


class SolverServer(metaclass=MetaSolverServer):
    """
    Flask server exposing instance generation, solving, solution checking
    and the polyhedral lab.

    Class-level overrides:
     - ``custom_flask_configs`` is applied to ``app.config``
     - ``default_solver_params`` is merged under the ``params`` of every solve

    Example:

    class QuickServer(SolverServer):
        default_solver_params = {'time_limit': 60, 'log_every': 100}

    QuickServer().run(host='0.0.0.0', port=5001)
    """

    custom_flask_configs: dict = {'MAX_CONTENT_LENGTH': 64 * 1024 * 1024}
    default_solver_params: dict = {}

    def __init__(self, verbose: bool = False, app_name: str = 'mdrsp_solver') -> None:
        """
        :param verbose: If True, log at DEBUG.
        :param app_name: The name of the Flask application.
        """
        self.logger_name = app_name
        self.app = Flask(app_name)
        CORS(self.app)

        for key, value in self.custom_flask_configs.items():
            self.app.config[key] = value

        @self.app.before_request
        def normalize_url():
            """Normalize URL paths to lowercase for case-insensitive routing."""
            if request.path != request.path.lower():
                if request.query_string:
                    new_url = request.path.lower() + '?' + request.query_string.decode('utf-8')
                else:
                    new_url = request.path.lower()
                return redirect(new_url, code=308)
            return None

        self._root_logger = setup_logger(ROOT_LOGGER_NAME, run_label='serve')
        setup_logger('werkzeug')
        self.logger = getLogger(SERVICE_LOGGER_NAME)
        self._original_stdout = sys.stdout
        self._original_stderr = sys.stderr
        sys.stdout = LoggerWriter(self.logger, level=20)
        sys.stderr = LoggerWriter(self.logger, level=40)
        self.set_verbose(verbose)

        self._logging_path = log_file_path(self._root_logger)
        self._logging_dir = os.path.abspath(os.path.dirname(self._logging_path))

        for endpoint in ('generate', 'solve', 'check', 'verify'):
            self._endpoint_method_map[endpoint] = ['POST']
        self._endpoint_map['/'] = 'index'
        self._register_endpoints()

        self.app.route('/logs', methods=['GET'])(self._log_viewer)
        self.app.route('/logs/<path:log_file>', methods=['GET'])(self._log_viewer)

        self.run = self.app.run

    @property
    def verbose(self) -> bool:
        """True when logging at DEBUG"""
        return self._verbose

    @property
    def solver_defaults(self) -> dict:
        """the solver parameters a solve starts from"""
        return SolverParams.from_mapping(self.default_solver_params).to_dict()

    def set_verbose(self, verbose: bool) -> None:
        """
        Switch the solver loggers between DEBUG and INFO.

        :param verbose: True to enable verbose logging, False to disable.
        """
        self._verbose = verbose
        set_verbosity(self._root_logger, verbose)

    def restore_streams(self) -> None:
        """
        Put back the stdout/stderr the server replaced, if they are still its writers.
        """
        if isinstance(sys.stdout, LoggerWriter) and sys.stdout.logger is self.logger:
            sys.stdout = self._original_stdout
        if isinstance(sys.stderr, LoggerWriter) and sys.stderr.logger is self.logger:
            sys.stderr = self._original_stderr

    def _register_endpoints(self):
        for route, func_name in self._endpoint_map.items():
            methods = self._endpoint_method_map.get(func_name, ['GET', 'POST'])
            self.app.route(route, methods=methods, endpoint=func_name)(getattr(self, func_name))

    def index(self) -> dict:
        """
        Lists all available API endpoints.
        """
        routes = []
        for rule in self.app.url_map.iter_rules():
            docs = getattr(getattr(self, rule.endpoint, None), '__doc__', None) or ''
            routes.append({'endpoint': rule.endpoint, 'methods': sorted(rule.methods), 'url': str(rule),
                           'docs': docs.strip()})
        return {'message': f'Welcome to the {self.__class__.__name__}', 'routes': routes}

    def generate(self, tsplib: str, n_depots, class_tag: str = CLASS_I, alpha=None, seed=0) -> tuple:
        """
        Build an instance from TSPLIB text: random depots plus the class cost formulas.
        Returns the instance document.
        """
        base = parse_tsplib(tsplib)
        inst = generate_instance(base, int(n_depots), class_tag, None if alpha is None else int(alpha), int(seed))
        return instance_to_dict(inst), RestCodes.CREATED

    def solve(self, instance: dict, params: dict | None = None) -> tuple:
        """
        Solve an instance document with branch-and-cut.
        Returns {report, solution}; 200 when proven optimal, 202 on the time limit.
        """
        inst = instance_from_dict(instance)
        merged = dict(self.default_solver_params)
        merged.update(params or {})
        report = branch_and_cut(inst, SolverParams.from_mapping(merged))
        data = report.to_dict(inst)
        solution = data.pop('solution', None)
        code = RestCodes.OK if report.termination is Termination.OPTIMAL else RestCodes.ACCEPTED
        return {'report': data, 'solution': solution}, code

    def check(self, instance: dict, solution: dict) -> dict:
        """
        Check a solution document against an instance document.
        Returns the violated feasibility rules and the cost.
        """
        inst = instance_from_dict(instance)
        sol = solution_from_dict(solution)
        violations = check_feasible(inst, sol)
        return {'feasible': not violations, 'violations': violations, 'cost': solution_cost(inst, sol)}

    def verify(self, mode: str, **arguments) -> dict:
        """
        Run the polyhedral lab: mode dim (u, n), validity (u, n), facets (name, u, n) or oracle (seeds).
        """
        return lab_report(mode, **arguments)

    def list_logs(self) -> list:
        """
        returns a list with all log files in the logging directory
        """
        _, _, files = next(os.walk(self._logging_dir))
        return sorted(f for f in files if '.log' in f.lower())

    def _log_viewer(self, log_file: str | None = None) -> Response:
        """
        view a log file from the browser, the current one when none is named

        the file can be given as a query parameter (/logs?log_file=name.log)
        or as the url path (/logs/name.log)
        """
        if not log_file:
            log_file = request.args.get('log_file', None)
        if not log_file:
            log_file = os.path.basename(self._logging_path)

        # the url may have been lowercased by the routing
        matched_file = next((f for f in os.listdir(self._logging_dir) if f.lower() == log_file.lower()), None)
        if not matched_file:
            return RestResponse.create({'error': 'Log file not found'}, RestCodes.NOT_FOUND)

        log_path = os.path.realpath(os.path.join(self._logging_dir, matched_file))
        if not log_path.startswith(self._logging_dir) or not os.path.isfile(log_path):
            return RestResponse.create({'error': 'Log file not found'}, RestCodes.NOT_FOUND)

        try:
            with open(log_path, 'r', encoding='utf-8') as f:
                log_content = f.read()
            return Response(log_content, mimetype='text/plain')
        except OSError as e:
            self.logger.error(f'Error reading log file {log_file}: {e}')
            return RestResponse.create({'error': str(e)}, RestCodes.INTERNAL_SERVER_ERROR)
