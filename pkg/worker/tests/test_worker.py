import io
import json
import subprocess
import sys

import pytest

from hporace_worker.objectives import WorkerConfig, mock_ser_score
from hporace_worker.server import serve

HANDSHAKE = '{"hello":{"space":{},"protocol":1}}'


def run_worker(lines, args=("--objective", "mock-ser", "--noise", "0.0")):
    proc = subprocess.run(
        [sys.executable, "-m", "hporace_worker", *args],
        input="\n".join(lines) + "\n",
        capture_output=True,
        text=True,
        timeout=30,
    )
    return proc.stdout.splitlines(), proc.returncode


def test_golden_transcript_is_bit_exact():
    requests = [
        HANDSHAKE,
        '{"trial":1,"params":{"lr":2.59e-5,"epochs":8,"unfreeze":4,"maxlen":80000}}',
        '{"trial":2,"params":{"lr":1e-4,"epochs":3,"unfreeze":0,"maxlen":32000}}',
        '{"trial":3,"params":{"lr":8.89e-6,"epochs":4,"unfreeze":1,"maxlen":64000}}',
    ]
    expected = [
        '{"ready":true}',
        '{"score":0.9699992997792412,"duration_s":60.0,"status":"ok"}',
        '{"score":0.7944359541038817,"duration_s":60.0,"status":"ok"}',
        '{"score":0.8606943189476843,"duration_s":60.0,"status":"ok"}',
    ]
    lines, code = run_worker(requests)
    assert lines == expected
    assert code == 0


def test_score_at_planted_optimum():
    assert mock_ser_score(2.59e-5, 8, 4, 80000) == pytest.approx(0.97, abs=1e-3)


def test_echo_rule():
    lines, _ = run_worker(
        [HANDSHAKE, '{"trial":1,"params":{"lr":5e-5}}'],
        args=("--objective", "echo", "--duration", "1.0"),
    )
    assert json.loads(lines[1])["score"] == pytest.approx(0.5)


def test_malformed_request_fails_but_serving_continues():
    lines, code = run_worker(
        [
            HANDSHAKE,
            "not json at all",
            '{"trial":2,"params":{"lr":2.59e-5,"epochs":8,"unfreeze":4,"maxlen":80000}}',
        ]
    )
    assert json.loads(lines[1])["status"] == "failed"
    assert json.loads(lines[2])["status"] == "ok"
    assert code == 0


def test_missing_params_fail_gracefully():
    lines, _ = run_worker([HANDSHAKE, '{"trial":1,"params":{"lr":2.59e-5}}'])
    reply = json.loads(lines[1])
    assert reply["status"] == "failed"
    assert "epochs" in reply["detail"]


def test_unsupported_protocol_is_refused():
    lines, code = run_worker(['{"hello":{"space":{},"protocol":99}}'])
    assert json.loads(lines[0])["ready"] is False
    assert code == 1


def test_same_request_same_response_with_noise():
    request = '{"trial":7,"params":{"lr":2.59e-5,"epochs":8,"unfreeze":4,"maxlen":80000}}'
    args = ("--objective", "mock-ser", "--noise", "0.05", "--seed", "3")
    first, _ = run_worker([HANDSHAKE, request, request], args=args)
    assert first[1] == first[2]  # stateless across requests
    second, _ = run_worker([HANDSHAKE, request], args=args)
    assert second[1] == first[1]  # and across processes


def test_serve_loop_in_process():
    stdin = io.StringIO(
        HANDSHAKE + "\n" + '{"trial":1,"params":{"lr":1e-5,"epochs":5,"unfreeze":2,"maxlen":48000}}\n'
    )
    stdout = io.StringIO()
    code = serve(stdin, stdout, WorkerConfig(objective="mock-ser"))
    lines = stdout.getvalue().splitlines()
    assert code == 0
    assert json.loads(lines[0]) == {"ready": True}
    body = json.loads(lines[1])
    assert body["status"] == "ok"
    assert body["score"] == pytest.approx(mock_ser_score(1e-5, 5, 2, 48000))


def test_responses_are_single_line_json():
    lines, _ = run_worker(
        [HANDSHAKE, '{"trial":1,"params":{"lr":2.59e-5,"epochs":8,"unfreeze":4,"maxlen":80000}}']
    )
    for line in lines:
        parsed = json.loads(line)  # raises if not valid single-line JSON
        assert isinstance(parsed, dict)
