"""Healthcare telemetry simulator: sensor stream generator, sealing
sender, and a UDP collector.

Three logical services: the generator writes one file per sensor cycle
(atomic temp-then-rename), the sender seals each completed file into a
hybrid container and ships it as <= 1400-byte UDP chunks, and the
collector reassembles, decrypts and reports latency.

Datagram layout (little-endian):
    version(u8) stream_type(u8) file_id(u32) seq(u32) total_chunks(u32)
    timestamp_us(u64) chunk_len(u16) chunk
Stream type 0xFF is a test-mode sidecar carrying the SHA-256 of the
plaintext payload for end-to-end verification.

Latency windows (both reported): sender-side is file-close to
last-chunk-sent; end-to-end is file-close to decrypt-verified.
"""

from __future__ import annotations

import hashlib
import os
import random
import socket
import statistics
import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import schemes as sch
from .access_tree import compile_text
from .container import SealedContainer, open_container, seal
from .errors import AbeError, AuthenticationFailure, PolicyNotSatisfied

DATAGRAM_VERSION = 1
CHUNK_BYTES = 1400
SIDECAR_TYPE = 0xFF
_HEADER = struct.Struct("<BBIIIQH")

DEFAULT_LATENCY_BUDGET_MS = 1000.0


@dataclass(frozen=True)
class SensorSpec:
    name: str
    stream_type: int
    interval_s: int        # one file per interval
    samples_per_file: int
    sample_bytes: int

    @property
    def file_bytes(self) -> int:
        return self.samples_per_file * self.sample_bytes


SENSOR_SPECS = {
    "heart_rate": SensorSpec("heart_rate", 1, 5, 1, 1),
    "respiration": SensorSpec("respiration", 2, 10, 1, 1),
    "spo2": SensorSpec("spo2", 3, 1, 1, 3),
    "body_temp": SensorSpec("body_temp", 4, 60, 1, 3),
    "ecg": SensorSpec("ecg", 5, 1, 500, 3),
}
_TYPE_TO_NAME = {spec.stream_type: name for name, spec in SENSOR_SPECS.items()}


@dataclass(frozen=True)
class GeneratedFile:
    path: Path
    stream: str
    stream_type: int
    cycle: int
    close_time_s: float  # simulated seconds since run start


def generate_streams(duration_s: float, out_dir, seed: int = 0,
                     sensors=None) -> list[GeneratedFile]:
    """Write one file per completed sensor cycle within duration_s of
    simulated time.  Files appear atomically (write temp, rename)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = sorted(sensors) if sensors else sorted(SENSOR_SPECS)
    files = []
    for name in names:
        spec = SENSOR_SPECS[name]
        n_cycles = int(duration_s // spec.interval_s)
        for cycle in range(1, n_cycles + 1):
            rng = random.Random(seed * 1_000_003
                                + spec.stream_type * 4099 + cycle)
            payload = rng.randbytes(spec.file_bytes)
            path = out_dir / f"{name}-{cycle}.bin"
            tmp = out_dir / f".{name}-{cycle}.bin.tmp"
            tmp.write_bytes(payload)
            os.replace(tmp, path)
            files.append(GeneratedFile(path, name, spec.stream_type, cycle,
                                       cycle * spec.interval_s))
    files.sort(key=lambda f: (f.close_time_s, f.stream_type))
    return files


def encode_datagram(stream_type: int, file_id: int, seq: int,
                    total_chunks: int, timestamp_us: int,
                    chunk: bytes) -> bytes:
    if len(chunk) > CHUNK_BYTES:
        raise ValueError("chunk exceeds MTU budget")
    return _HEADER.pack(DATAGRAM_VERSION, stream_type, file_id, seq,
                        total_chunks, timestamp_us, len(chunk)) + chunk


def decode_datagram(data: bytes):
    if len(data) < _HEADER.size:
        raise ValueError("short datagram")
    version, stream_type, file_id, seq, total, ts_us, chunk_len = \
        _HEADER.unpack_from(data)
    if version != DATAGRAM_VERSION:
        raise ValueError(f"unknown datagram version {version}")
    chunk = data[_HEADER.size:_HEADER.size + chunk_len]
    if len(chunk) != chunk_len:
        raise ValueError("truncated datagram")
    return stream_type, file_id, seq, total, ts_us, chunk


def chunk_payload(data: bytes) -> list[bytes]:
    if not data:
        return [b""]
    return [data[i:i + CHUNK_BYTES] for i in range(0, len(data), CHUNK_BYTES)]


@dataclass
class SenderRow:
    file_id: int
    stream: str
    cycle: int
    seal_ms: float
    send_ms: float
    status: str            # sent | send_failed
    close_ts_us: int
    payload_sha: bytes


@dataclass
class Sender:
    """Seals completed measurement files and ships them over UDP."""

    params: "sch.CpPublicParams"
    policy: str
    server_addr: tuple
    rng: random.Random = field(default_factory=random.SystemRandom)
    test_mode: bool = True                 # emit verification sidecars
    send_filter: object = None             # callable(file_id, seq) -> keep?

    def __post_init__(self):
        compile_text(self.policy)  # fail fast on a bad policy
        self._next_file_id = 1

    def send_files(self, files, sock=None, pace: float = 0.0) -> list[SenderRow]:
        """pace > 0 replays file-close times at that many real seconds
        per simulated second; 0 sends as fast as possible."""
        own_sock = sock is None
        if own_sock:
            sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        rows = []
        start = time.monotonic()
        try:
            for gen in files:
                if pace > 0:
                    due = start + gen.close_time_s * pace
                    delay = due - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
                rows.append(self._send_one(gen, sock))
        finally:
            if own_sock:
                sock.close()
        return rows

    def _send_one(self, gen: GeneratedFile, sock) -> SenderRow:
        file_id = self._next_file_id
        self._next_file_id += 1
        payload = Path(gen.path).read_bytes()
        close_ts_us = time.time_ns() // 1000   # pickup time = file close
        t0 = time.perf_counter()
        container = seal(self.params, self.policy, payload, self.rng)
        blob = container.to_bytes()
        seal_ms = (time.perf_counter() - t0) * 1e3
        sha = hashlib.sha256(payload).digest()
        chunks = chunk_payload(blob)
        t0 = time.perf_counter()
        status = "sent"
        try:
            for seq, chunk in enumerate(chunks):
                if self.send_filter and not self.send_filter(file_id, seq):
                    continue
                sock.sendto(encode_datagram(gen.stream_type, file_id, seq,
                                            len(chunks), close_ts_us, chunk),
                            self.server_addr)
            if self.test_mode:
                sock.sendto(encode_datagram(SIDECAR_TYPE, file_id, 0, 0,
                                            close_ts_us, sha),
                            self.server_addr)
        except OSError:
            status = "send_failed"
        send_ms = (time.perf_counter() - t0) * 1e3
        return SenderRow(file_id, gen.stream, gen.cycle, seal_ms, send_ms,
                         status, close_ts_us, sha)


@dataclass
class CollectedFile:
    file_id: int
    stream: str
    payload: bytes | None
    end_to_end_ms: float
    status: str  # ok | hash_mismatch | policy_refused | auth_failed | dropped


class Collector:
    """Reassembles datagrams, opens containers, verifies and reports."""

    def __init__(self, bind_addr, params, key, reassembly_timeout_s=5.0):
        self.params = params
        self.key = key
        self.reassembly_timeout_s = reassembly_timeout_s
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        # decryption happens inline in the receive loop, so burst traffic
        # must queue in the kernel instead of being dropped
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 1 << 23)
        self.sock.bind(bind_addr)
        self.addr = self.sock.getsockname()
        self.results: list[CollectedFile] = []
        self._partial = {}   # file_id -> state dict
        self._sidecars = {}  # file_id -> sha

    def close(self):
        self.sock.close()

    def run(self, expected_files=None, idle_timeout_s=2.0):
        """Receive until expected_files are resolved or the socket stays
        idle; leftover partial files are counted as dropped."""
        self.sock.settimeout(0.2)
        deadline = time.monotonic() + idle_timeout_s
        while True:
            if expected_files is not None and len(self.results) >= expected_files:
                break
            if time.monotonic() > deadline:
                break
            try:
                data, _peer = self.sock.recvfrom(65535)
            except socket.timeout:
                self._expire_partials()
                continue
            deadline = time.monotonic() + idle_timeout_s
            try:
                self._ingest(data)
            except ValueError:
                continue
            self._expire_partials()
        for file_id, state in sorted(self._partial.items()):
            self.results.append(CollectedFile(
                file_id, _TYPE_TO_NAME.get(state["stream_type"], "?"),
                None, 0.0, "dropped"))
        self._partial.clear()
        return self.results

    def _ingest(self, data):
        stream_type, file_id, seq, total, ts_us, chunk = decode_datagram(data)
        if stream_type == SIDECAR_TYPE:
            self._sidecars[file_id] = chunk
            self._try_finish(file_id)
            return
        state = self._partial.setdefault(
            file_id, {"chunks": {}, "total": total, "stream_type": stream_type,
                      "ts_us": ts_us, "first_seen": time.monotonic()})
        state["chunks"][seq] = chunk
        self._try_finish(file_id)

    def _try_finish(self, file_id):
        state = self._partial.get(file_id)
        if state is None or len(state["chunks"]) != state["total"]:
            return
        blob = b"".join(state["chunks"][i] for i in range(state["total"]))
        stream = _TYPE_TO_NAME.get(state["stream_type"], "?")
        try:
            payload = open_container(self.params, self.key, blob)
            status = "ok"
        except PolicyNotSatisfied:
            payload, status = None, "policy_refused"
        except (AuthenticationFailure, AbeError):
            payload, status = None, "auth_failed"
        if status == "ok" and file_id in self._sidecars:
            if hashlib.sha256(payload).digest() != self._sidecars[file_id]:
                status = "hash_mismatch"
        end_to_end_ms = (time.time_ns() // 1000 - state["ts_us"]) / 1e3
        del self._partial[file_id]
        self.results.append(CollectedFile(file_id, stream, payload,
                                          end_to_end_ms, status))

    def _expire_partials(self):
        now = time.monotonic()
        expired = [fid for fid, st in self._partial.items()
                   if now - st["first_seen"] > self.reassembly_timeout_s]
        for fid in expired:
            state = self._partial.pop(fid)
            self.results.append(CollectedFile(
                fid, _TYPE_TO_NAME.get(state["stream_type"], "?"),
                None, 0.0, "dropped"))


@dataclass
class LatencyReport:
    rows: list  # dicts: cycle, stream_type, seal_ms, send_ms, end_to_end_ms, status

    CSV_HEADER = ["cycle", "stream_type", "seal_ms", "send_ms",
                  "end_to_end_ms", "status"]

    @property
    def delivered(self):
        return [r for r in self.rows if r["status"] == "ok"]

    def aggregate(self):
        e2e = [r["end_to_end_ms"] for r in self.delivered]
        if not e2e:
            return {"mean_ms": 0.0, "p95_ms": 0.0, "delivered": 0,
                    "total": len(self.rows)}
        ordered = sorted(e2e)
        p95 = ordered[min(len(ordered) - 1, int(0.95 * len(ordered)))]
        return {"mean_ms": statistics.fmean(e2e), "p95_ms": p95,
                "delivered": len(e2e), "total": len(self.rows)}

    def write_csv(self, path):
        import csv
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_HEADER)
            for r in self.rows:
                writer.writerow([r["cycle"], r["stream_type"],
                                 f"{r['seal_ms']:.3f}", f"{r['send_ms']:.3f}",
                                 f"{r['end_to_end_ms']:.3f}", r["status"]])


def merge_report(sender_rows, collected) -> LatencyReport:
    by_id = {c.file_id: c for c in collected}
    rows = []
    for s in sender_rows:
        c = by_id.get(s.file_id)
        if s.status != "sent":
            status, e2e = "send_failed", 0.0
        elif c is None:
            status, e2e = "lost", 0.0
        else:
            status, e2e = c.status, c.end_to_end_ms
        rows.append({"cycle": s.cycle, "stream_type": s.stream,
                     "seal_ms": s.seal_ms, "send_ms": s.send_ms,
                     "end_to_end_ms": max(e2e, s.seal_ms + s.send_ms),
                     "status": status})
    return LatencyReport(rows)


def run_loopback(duration_s, policy, params, master, bag, work_dir,
                 seed=0, sensors=None, send_filter=None, rng=None,
                 pace: float = 0.0):
    """End-to-end loopback run: generate, seal+send, collect, merge.

    Returns (report, sender_rows, collected, generated_files).
    """
    rng = rng or random.Random(seed)
    files = generate_streams(duration_s, Path(work_dir) / "sensor-data",
                             seed=seed, sensors=sensors)
    key = sch.cp_keygen(params, master, bag, rng)
    collector = Collector(("127.0.0.1", 0), params, key)
    results_box = []
    thread = threading.Thread(
        target=lambda: results_box.extend(
            collector.run(expected_files=len(files))),
        daemon=True)
    thread.start()
    sender = Sender(params, policy, collector.addr, rng=rng,
                    send_filter=send_filter)
    sender_rows = sender.send_files(files, pace=pace)
    thread.join(timeout=max(30.0, duration_s))
    collector.close()
    report = merge_report(sender_rows, results_box)
    return report, sender_rows, results_box, files
