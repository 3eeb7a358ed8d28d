import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from starlette.websockets import WebSocketDisconnect

from conftest import RATE, synth_vowel, wav_bytes_oracle
from lipsync.service import ServiceSettings, create_app


@pytest.fixture
def make_client(profile_dir):
    clients = []

    def factory(**overrides):
        settings = ServiceSettings(profile_dir=str(profile_dir), **overrides)
        app = create_app(settings)
        client = TestClient(app)
        clients.append(client)
        return client, app

    yield factory
    for client in clients:
        client.close()


@pytest.fixture
def client(make_client):
    return make_client()[0]


def ws_hello(ws):
    ws.send_json({"type": "Hello", "protocol_version": 1})
    msg = ws.receive_json()
    assert msg["type"] == "Ready"
    return msg


def ws_upload(ws, wav):
    ws.send_json({"type": "UploadWav", "size": len(wav)})
    ws.send_bytes(wav)
    header = ws.receive_json()
    assert header["type"] == "TrackHeader"
    return header


def drain_playback(ws):
    """Collect paced Viseme messages (with arrival times) until Done."""
    frames, arrivals = [], []
    while True:
        msg = ws.receive_json()
        if msg["type"] == "Done":
            return frames, arrivals
        assert msg["type"] == "Viseme"
        frames.append(msg)
        arrivals.append(time.monotonic())


# ---------------------------------------------------------------------------
# HTTP surface


def test_profiles_endpoint(client):
    response = client.get("/profiles")
    assert response.status_code == 200
    assert response.json() == ["default", "trio"]


def test_audio_endpoint_unknown_session(client):
    assert client.get("/audio/nope").status_code == 404


def test_schema_files_served(client):
    for name in ("profile.schema.json", "viseme-track.schema.json"):
        response = client.get(f"/schemas/{name}")
        assert response.status_code == 200
        assert response.json()["additionalProperties"] is False


def test_builtin_viewer_page(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("text/html")
    assert "<html" in response.text.lower()


def test_custom_viewer_dir(make_client, tmp_path):
    viewer = tmp_path / "dist"
    viewer.mkdir()
    (viewer / "index.html").write_text("<html><body>custom build</body></html>")
    (viewer / "app.js").write_text("console.log('hi')")
    client, _ = make_client(viewer_dir=str(viewer))
    assert "custom build" in client.get("/").text
    assert client.get("/app.js").status_code == 200


# ---------------------------------------------------------------------------
# websocket sessions


def test_handshake_and_registry(client):
    app = client.app
    with client.websocket_connect("/ws") as ws:
        ready = ws_hello(ws)
        assert ready["labels"] == ["a", "e", "i", "o", "u"]
        assert ready["session_id"] in app.state.sessions
    deadline = time.monotonic() + 2.0
    while app.state.sessions and time.monotonic() < deadline:
        time.sleep(0.01)
    assert not app.state.sessions  # close always unregisters


def test_upload_plays_paced_frames(client):
    wav = wav_bytes_oracle(np.zeros(8000), RATE)  # 0.5 s -> 28 frames
    with client.websocket_connect("/ws") as ws:
        ws_hello(ws)
        start = time.monotonic()
        header = ws_upload(ws, wav)
        assert header["frame_count"] == 28
        assert header["frame_interval"] == 0.016
        frames, arrivals = drain_playback(ws)
    assert [f["t"] for f in frames] == pytest.approx([i * 0.016 for i in range(28)])
    assert all(set(f["weights"].values()) == {0.0} for f in frames)
    elapsed = arrivals[-1] - start
    # 28 frames at 16 ms spacing: the last should land near 0.432 s
    assert 0.2 < elapsed < 1.5
    assert arrivals == sorted(arrivals)


def test_audio_endpoint_serves_uploaded_bytes(client):
    wav = wav_bytes_oracle(np.zeros(8000), RATE)
    with client.websocket_connect("/ws") as ws:
        ready = ws_hello(ws)
        header = ws_upload(ws, wav)
        response = client.get(header["audio_url"])
        assert response.status_code == 200
        assert response.headers["content-type"] == "audio/wav"
        assert response.content == wav
        drain_playback(ws)
    # the URL dies with the session
    deadline = time.monotonic() + 2.0
    while time.monotonic() < deadline:
        if client.get(f"/audio/{ready['session_id']}").status_code == 404:
            break
        time.sleep(0.01)
    assert client.get(f"/audio/{ready['session_id']}").status_code == 404


def test_seek_skips_forward(client):
    wav = wav_bytes_oracle(np.zeros(RATE), RATE)  # 59 frames
    with client.websocket_connect("/ws") as ws:
        ws_hello(ws)
        ws_upload(ws, wav)
        first = ws.receive_json()
        assert first["type"] == "Viseme"
        ws.send_json({"type": "Seek", "t": 0.8})
        frames, _ = drain_playback(ws)
    indices = [first["t"] / 0.016] + [round(f["t"] / 0.016) for f in frames]
    # a few in-flight frames may still arrive, then the jump to ceil(0.8/0.016)=50
    post_jump = [i for i in indices if i >= 50]
    assert post_jump == list(range(50, 59))
    assert max(i for i in indices if i < 50) < 20  # seek did skip the middle


def test_seek_backward_reports_error(client):
    wav = wav_bytes_oracle(np.zeros(8000), RATE)
    with client.websocket_connect("/ws") as ws:
        ws_hello(ws)
        ws_upload(ws, wav)
        # let a few frames go out so t=0 is firmly in the past
        for _ in range(3):
            assert ws.receive_json()["type"] == "Viseme"
        ws.send_json({"type": "Seek", "t": 0.0})
        saw_error = False
        while True:
            msg = ws.receive_json()
            if msg["type"] == "Error":
                assert msg["code"] == "bad_seek"
                saw_error = True
            elif msg["type"] == "Done":
                break
        assert saw_error


def test_live_session_over_websocket(client):
    samples = synth_vowel("a", duration=0.3)
    ints = np.clip(np.round(samples * 32768.0), -32768, 32767).astype("<i2")
    with client.websocket_connect("/ws") as ws:
        ws_hello(ws)
        ws.send_json({"type": "StartLive", "sample_rate": RATE})
        assert ws.receive_json()["type"] == "Ready"
        for lo in range(0, len(ints), 512):
            payload = ints[lo : lo + 512].tobytes()
            ws.send_json({"type": "AudioChunk", "size": len(payload)})
            ws.send_bytes(payload)
        ws.send_json({"type": "EndLive"})
        got = []
        while True:
            msg = ws.receive_json()
            if msg["type"] == "Done":
                break
            assert msg["type"] == "LiveViseme"
            got.append(msg)
    # 0.3 s of 16 kHz audio: (4800 - 1024) // 256 + 1 complete frames
    assert len(got) == 15
    assert [m["t"] for m in got] == pytest.approx([i * 0.016 for i in range(15)])
    settled = got[5:]
    assert all(max(m["weights"], key=m["weights"].get) == "a" for m in settled)


def test_unexpected_binary_over_websocket(client):
    with client.websocket_connect("/ws") as ws:
        ws_hello(ws)
        ws.send_bytes(b"\x00\x01\x02\x03")
        msg = ws.receive_json()
        assert msg["type"] == "Error" and msg["code"] == "unexpected_binary"


def test_slow_consumer_is_disconnected(make_client):
    # drain far slower than the 16 ms production rate with a tiny queue:
    # overflow is certain, and the session must die with slow_consumer
    client, _ = make_client(sender_delay=0.05, out_queue_limit=8)
    wav = wav_bytes_oracle(np.zeros(RATE), RATE)
    saw_slow, close_code = False, None
    with client.websocket_connect("/ws") as ws:
        ws_hello(ws)
        ws.send_json({"type": "UploadWav", "size": len(wav)})
        ws.send_bytes(wav)
        try:
            while True:
                msg = ws.receive_json()
                if msg["type"] == "Error" and msg["code"] == "slow_consumer":
                    saw_slow = True
        except WebSocketDisconnect as err:
            close_code = err.code
    assert saw_slow
    assert close_code == 1013


def test_session_limit(make_client):
    client, app = make_client(max_sessions=1)
    with client.websocket_connect("/ws") as first:
        ws_hello(first)
        with client.websocket_connect("/ws") as second:
            msg = second.receive_json()
            assert msg["type"] == "Error" and msg["code"] == "session_limit"
            with pytest.raises(WebSocketDisconnect) as err:
                second.receive_json()
            assert err.value.code == 1013
    # once the first session is gone a new one fits
    deadline = time.monotonic() + 2.0
    while app.state.sessions and time.monotonic() < deadline:
        time.sleep(0.01)
    with client.websocket_connect("/ws") as ws:
        assert ws_hello(ws)["type"] == "Ready"
