"""Tests for the remote solver helpers.

requests.post is replaced by a recorder, so no server is needed.
"""

import json

import pytest
import requests

from mdrsp import client
from mdrsp.instance import write_instance


class FakeResponse:
    """Just enough of requests.Response."""

    def __init__(self, status_code: int, document=None, text: str = ''):
        self.status_code = status_code
        self._document = document
        self.text = text

    def json(self):
        if self._document is None:
            raise ValueError('no JSON body')
        return self._document


@pytest.fixture()
def recorder(monkeypatch):
    """Record every POST and answer with the queued response."""
    calls = []
    answer = {'response': FakeResponse(200, {'status': 'OK', 'data': {'ok': True}, 'code': 200})}

    def fake_post(url, json=None, timeout=None):  # pylint: disable=redefined-outer-name
        calls.append({'url': url, 'json': json, 'timeout': timeout})
        if isinstance(answer['response'], Exception):
            raise answer['response']
        return answer['response']

    monkeypatch.setattr(client.requests, 'post', fake_post)
    return calls, answer


@pytest.fixture()
def instance_file(tmp_path, line_instance):
    """The line instance on disk."""
    path = tmp_path / 'line.json'
    write_instance(line_instance, str(path))
    return str(path)


class TestSolveRemote:
    """solve_remote"""

    def test_payload(self, recorder, instance_file):
        """Verify the instance document and the parameters are posted to /solve."""
        calls, _ = recorder
        data = client.solve_remote('http://localhost:5001/', instance_file, {'time_limit': 5}, timeout=30)

        assert data == {'ok': True}
        assert calls[0]['url'] == 'http://localhost:5001/solve'
        assert calls[0]['json']['params'] == {'time_limit': 5}
        assert calls[0]['timeout'] == 30
        with open(instance_file, 'r', encoding='utf-8') as handle:
            assert calls[0]['json']['instance'] == json.load(handle)

    def test_no_params(self, recorder, instance_file):
        """Verify params are left out when not given."""
        calls, _ = recorder
        client.solve_remote('http://localhost:5001', instance_file)
        assert 'params' not in calls[0]['json']
        assert calls[0]['timeout'] == client.DEFAULT_TIMEOUT

    def test_time_limit_answer_is_data(self, recorder, instance_file):
        """Verify a 202 answer still returns the data."""
        _, answer = recorder
        answer['response'] = FakeResponse(202, {'status': 'ACCEPTED', 'data': {'report': {}}, 'code': 202})
        assert client.solve_remote('http://localhost:5001', instance_file) == {'report': {}}

    def test_error_answer(self, recorder, instance_file, caplog):
        """Verify an error envelope returns None and logs the server error."""
        _, answer = recorder
        answer['response'] = FakeResponse(400, {'status': 'BAD_REQUEST', 'data': {'error': 'unknown solver parameters: x'}})

        assert client.solve_remote('http://localhost:5001', instance_file) is None
        assert 'HTTP 400: unknown solver parameters: x' in caplog.text

    def test_non_json_error(self, recorder, instance_file, caplog):
        """Verify a plain text error body is logged as is."""
        _, answer = recorder
        answer['response'] = FakeResponse(502, text='Bad Gateway')

        assert client.solve_remote('http://localhost:5001', instance_file) is None
        assert 'HTTP 502: Bad Gateway' in caplog.text

    @pytest.mark.parametrize('error, message', [
        (requests.exceptions.ConnectionError(), 'Could not connect'),
        (requests.exceptions.Timeout(), 'timed out'),
        (requests.exceptions.RequestException('boom'), 'request error: boom'),
    ])
    def test_transport_errors(self, recorder, instance_file, caplog, error, message):
        """Verify transport failures return None."""
        _, answer = recorder
        answer['response'] = error

        assert client.solve_remote('http://localhost:5001', instance_file) is None
        assert message in caplog.text


class TestOtherHelpers:
    """generate_remote and check_remote"""

    def test_generate_remote(self, recorder, tsplib_file, tsplib_text):
        """Verify the TSPLIB text and the options are posted to /generate."""
        calls, _ = recorder
        client.generate_remote('http://localhost:5001', tsplib_file, n_depots=2, seed=3)

        assert calls[0]['url'].endswith('/generate')
        assert calls[0]['json'] == {'tsplib': tsplib_text, 'n_depots': 2, 'seed': 3}

    def test_check_remote(self, recorder, instance_file, tmp_path):
        """Verify both documents are posted to /check."""
        calls, _ = recorder
        solution = tmp_path / 'line.sol.json'
        solution.write_text(json.dumps({'rings': [], 'assignments': {}}), encoding='utf-8')

        client.check_remote('http://localhost:5001', instance_file, str(solution))
        assert calls[0]['url'].endswith('/check')
        assert calls[0]['json']['solution'] == {'rings': [], 'assignments': {}}
