"""
Helpers for scripts that drive a remote solver server.

Usage:
    First, start a server:
        mdrsp serve --port 5001

    Then, from a script:
        data = solve_remote('http://localhost:5001', 'bays29-3.json', {'time_limit': 600})
"""

import json
from logging import getLogger

import requests

logger = getLogger('mdrsp.client')

DEFAULT_TIMEOUT = 7800
SUCCESS_CODES = (200, 201, 202)


def _read_json(path: str) -> dict:
    with open(path, 'r', encoding='utf-8') as handle:
        return json.load(handle)


def _post(base_url: str, endpoint: str, payload: dict, timeout: float) -> dict | None:
    """
    POST ``payload`` and return the ``data`` of a success envelope, None otherwise.
    """
    url = f'{base_url.rstrip("/")}/{endpoint}'
    try:
        response = requests.post(url, json=payload, timeout=timeout)

        if response.status_code in SUCCESS_CODES:
            return response.json().get('data')

        try:
            error = response.json().get('data', {}).get('error', 'Unknown error')
        except ValueError:
            error = response.text or 'Unknown error'
        logger.error(f'{endpoint} failed with HTTP {response.status_code}: {error}')
        return None

    except requests.exceptions.ConnectionError:
        logger.error(f'Could not connect to server at {base_url}')
        return None
    except requests.exceptions.Timeout:
        logger.error(f'{endpoint} request timed out after {timeout} s')
        return None
    except requests.exceptions.RequestException as e:
        logger.error(f'{endpoint} request error: {e}')
        return None


def solve_remote(base_url: str, instance_path: str, params: dict | None = None,
                 timeout: float = DEFAULT_TIMEOUT) -> dict | None:
    """
    Solve an instance file on a remote server.

    :param base_url: The base URL of the server (e.g., 'http://localhost:5001')
    :param instance_path: The local instance file
    :param params: solver parameters (see ``SolverParams``)
    :param timeout: seconds to wait for the answer; keep it above the solver time limit
    :return: {report, solution} on success (optimal or time limit), None otherwise
    """
    payload = {'instance': _read_json(instance_path)}
    if params:
        payload['params'] = params
    return _post(base_url, 'solve', payload, timeout)


def generate_remote(base_url: str, tsplib_path: str, timeout: float = 60, **options) -> dict | None:
    """
    Generate an instance on a remote server from a local TSPLIB file.

    :param options: n_depots, class_tag, alpha, seed
    :return: the instance document, None on failure
    """
    with open(tsplib_path, 'r', encoding='utf-8') as handle:
        payload = {'tsplib': handle.read(), **options}
    return _post(base_url, 'generate', payload, timeout)


def check_remote(base_url: str, instance_path: str, solution_path: str, timeout: float = 60) -> dict | None:
    """
    Check a local solution file against a local instance file on a remote server.

    :return: {feasible, violations, cost}, None on failure
    """
    payload = {'instance': _read_json(instance_path), 'solution': _read_json(solution_path)}
    return _post(base_url, 'check', payload, timeout)
