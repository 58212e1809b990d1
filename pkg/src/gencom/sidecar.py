"""Client for the external restoration sidecar.

Wire protocol: newline-delimited JSON over TCP. Request fields
{id, op, image (base64 PNG), image_b?, params}; response fields
{id, ok, image?, score?, error?}. Responses match requests by id, so
multiple requests may be in flight; a reader thread dispatches them.
"""

from __future__ import annotations

import base64
import io
import json
import queue
import socket
import threading

import numpy as np

DEFAULT_PORT = 9473
ENV_ADDRESS = "GENCOM_SIDECAR"


class SidecarError(RuntimeError):
    pass


class SidecarTimeout(SidecarError):
    pass


def png_encode(pixels: np.ndarray) -> bytes:
    from PIL import Image as PilImage

    arr = np.asarray(pixels, dtype=np.uint8)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    buf = io.BytesIO()
    PilImage.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def png_decode(data: bytes) -> np.ndarray:
    from PIL import Image as PilImage

    with PilImage.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert(img.mode), dtype=np.uint8)


def parse_address(address: str) -> tuple[str, int]:
    addr = address.removeprefix("tcp://")
    if ":" in addr:
        host, port = addr.rsplit(":", 1)
        return host or "127.0.0.1", int(port)
    return addr, DEFAULT_PORT


class SidecarClient:
    def __init__(self, address: str, timeout: float = 10.0):
        self.address = address
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._write_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._pending: dict[str, queue.SimpleQueue] = {}
        self._counter = 0
        self._reader: threading.Thread | None = None

    def _connect(self) -> None:
        if self._sock is not None:
            return
        host, port = parse_address(self.address)
        try:
            sock = socket.create_connection((host, port), timeout=self.timeout)
        except OSError as exc:
            raise SidecarError(f"cannot reach sidecar at {self.address}: {exc}")
        # the timeout above only guards the connect; the reader thread must
        # block indefinitely and leave deadlines to the per-request wait
        sock.settimeout(None)
        self._sock = sock
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        sock = self._sock
        assert sock is not None
        buf = b""
        try:
            while True:
                chunk = sock.recv(65536)
                if not chunk:
                    break
                buf += chunk
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    if line.strip():
                        self._dispatch(line)
        except OSError:
            pass
        self._fail_pending("connection closed")

    def _dispatch(self, line: bytes) -> None:
        try:
            msg = json.loads(line)
            rid = msg["id"]
        except (ValueError, KeyError):
            return
        with self._state_lock:
            q = self._pending.get(rid)
        if q is not None:
            q.put(msg)

    def _fail_pending(self, reason: str) -> None:
        with self._state_lock:
            pending = list(self._pending.values())
            self._pending.clear()
            self._sock = None
        for q in pending:
            q.put({"ok": False, "error": reason})

    def request(
        self,
        op: str,
        image: bytes | None = None,
        image_b: bytes | None = None,
        params: dict | None = None,
    ) -> dict:
        """Sends one request and blocks for its matching response."""
        self._connect()
        with self._state_lock:
            self._counter += 1
            rid = f"q{self._counter}"
            q: queue.SimpleQueue = queue.SimpleQueue()
            self._pending[rid] = q
        msg: dict = {"id": rid, "op": op, "params": params or {}}
        if image is not None:
            msg["image"] = base64.b64encode(image).decode("ascii")
        if image_b is not None:
            msg["image_b"] = base64.b64encode(image_b).decode("ascii")
        line = (json.dumps(msg) + "\n").encode("utf-8")
        try:
            with self._write_lock:
                assert self._sock is not None
                self._sock.sendall(line)
        except OSError as exc:
            self._fail_pending(str(exc))
            raise SidecarError(f"send failed: {exc}")
        try:
            resp = q.get(timeout=self.timeout)
        except queue.Empty:
            with self._state_lock:
                self._pending.pop(rid, None)
            raise SidecarTimeout(f"no response to {op} within {self.timeout}s")
        with self._state_lock:
            self._pending.pop(rid, None)
        return resp

    def restore(self, png: bytes, params: dict | None = None) -> bytes:
        resp = self.request("restore", image=png, params=params)
        if not resp.get("ok"):
            raise SidecarError(resp.get("error", "restore failed"))
        return base64.b64decode(resp["image"])

    def echo(self, png: bytes) -> bytes:
        resp = self.request("echo", image=png)
        if not resp.get("ok"):
            raise SidecarError(resp.get("error", "echo failed"))
        return base64.b64decode(resp["image"])

    def score(self, op: str, png: bytes, png_b: bytes | None = None) -> float:
        resp = self.request(op, image=png, image_b=png_b)
        if not resp.get("ok"):
            raise SidecarError(resp.get("error", f"{op} failed"))
        return float(resp["score"])

    def close(self) -> None:
        with self._state_lock:
            sock = self._sock
            self._sock = None
        if sock is not None:
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            sock.close()
