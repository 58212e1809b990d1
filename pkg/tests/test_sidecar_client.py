"""Sidecar wire client against a local mock server."""

import json
import socketserver
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from gencom.sidecar import (
    DEFAULT_PORT,
    SidecarClient,
    SidecarError,
    SidecarTimeout,
    parse_address,
    png_decode,
    png_encode,
)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for line in self.rfile:
            if not line.strip():
                continue
            mode = self.server.mode
            if mode == "silent":
                continue
            if mode == "garbage":
                self.wfile.write(b"}{ not json\n")
                self.wfile.flush()
                continue
            msg = json.loads(line)
            resp = {"id": msg["id"]}
            op = msg.get("op")
            if mode == "error":
                resp.update(ok=False, error="backend exploded")
            elif op in ("echo", "restore"):
                resp.update(ok=True, image=msg["image"])
            elif op == "clip_sim":
                resp.update(ok=True, score=0.875)
            else:
                resp.update(ok=False, error=f"unknown op {op}")
            self.wfile.write((json.dumps(resp) + "\n").encode("utf-8"))
            self.wfile.flush()


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, mode: str = "echo"):
        super().__init__(("127.0.0.1", 0), _Handler)
        self.mode = mode


@pytest.fixture
def server():
    srv = _Server()
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def _addr(srv) -> str:
    host, port = srv.server_address
    return f"{host}:{port}"


def test_parse_address_forms():
    assert parse_address("10.0.0.5:4000") == ("10.0.0.5", 4000)
    assert parse_address("tcp://127.0.0.1:9473") == ("127.0.0.1", 9473)
    assert parse_address("somehost") == ("somehost", DEFAULT_PORT)
    assert parse_address(":5000") == ("127.0.0.1", 5000)


def test_png_round_trip_gray_and_rgb():
    gray = (np.arange(64, dtype=np.uint8).reshape(8, 8))[:, :, None]
    back = png_decode(png_encode(gray))
    assert np.array_equal(back, gray[:, :, 0])
    rgb = np.stack([gray[:, :, 0]] * 3, axis=2)
    rgb[0, 0] = (255, 0, 9)
    assert np.array_equal(png_decode(png_encode(rgb)), rgb)


def test_echo_byte_identical(server):
    client = SidecarClient(_addr(server), timeout=5.0)
    png = png_encode(np.arange(256, dtype=np.uint8).reshape(16, 16))
    assert client.echo(png) == png
    client.close()


def test_restore_round_trip(server):
    client = SidecarClient(_addr(server), timeout=5.0)
    png = png_encode(np.full((12, 12), 9, dtype=np.uint8))
    assert client.restore(png, {"block_size": 4}) == png
    client.close()


def test_score_op(server):
    client = SidecarClient(_addr(server), timeout=5.0)
    png = png_encode(np.zeros((8, 8), dtype=np.uint8))
    assert client.score("clip_sim", png, png) == pytest.approx(0.875)
    client.close()


def test_hundred_concurrent_requests(server):
    client = SidecarClient(_addr(server), timeout=10.0)
    payloads = [bytes([i % 256]) * (i + 1) for i in range(100)]
    with ThreadPoolExecutor(max_workers=20) as pool:
        results = list(pool.map(client.echo, payloads))
    assert results == payloads
    client.close()


def test_unknown_op_error(server):
    client = SidecarClient(_addr(server), timeout=5.0)
    with pytest.raises(SidecarError):
        client.score("niqe_typo", b"x")
    client.close()


def test_backend_error_surfaces():
    srv = _Server(mode="error")
    threading.Thread(target=srv.serve_forever, daemon=True).start()
    try:
        client = SidecarClient(_addr(srv), timeout=5.0)
        with pytest.raises(SidecarError, match="exploded"):
            client.echo(b"abc")
        client.close()
    finally:
        srv.shutdown()
        srv.server_close()


def test_silent_server_times_out():
    srv = _Server(mode="silent")
    threading.Thread(target=srv.serve_forever, daemon=True).start()
    try:
        client = SidecarClient(_addr(srv), timeout=0.4)
        with pytest.raises(SidecarTimeout):
            client.echo(b"abc")
        client.close()
    finally:
        srv.shutdown()
        srv.server_close()


def test_garbage_response_times_out():
    # unparseable lines cannot be matched to a request and are dropped
    srv = _Server(mode="garbage")
    threading.Thread(target=srv.serve_forever, daemon=True).start()
    try:
        client = SidecarClient(_addr(srv), timeout=0.4)
        with pytest.raises(SidecarTimeout):
            client.echo(b"abc")
        client.close()
    finally:
        srv.shutdown()
        srv.server_close()


def test_unreachable_raises_sidecar_error():
    client = SidecarClient("127.0.0.1:9", timeout=0.5)
    with pytest.raises(SidecarError):
        client.echo(b"abc")
