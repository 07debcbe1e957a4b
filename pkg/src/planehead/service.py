"""Interactive session server.

One worker thread owns optimize + transfer; edits land in a latest-wins
mailbox, so a burst of slider messages triggers exactly one
re-optimization with the final values. Control messages are JSON over a
WebSocket; mesh frames are binary:

    [revision: u64][count: u32][positions: f32 x 3 x count]   little-endian

Client -> server message kinds: set_global {param, value},
set_edge_weight {region_a, region_b, scale}, set_edge_smoothing
{region_a, region_b, scale}, set_face_planarization {region, mu},
toggle_lanteri {enabled}, request_export {path}. Server -> client:
session_init, ack, error, energy_report (JSON) and mesh_frame (binary).
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import struct
import threading

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .session import StudioSession

DEFAULT_PORT = 7870
EDIT_BUDGET_SECONDS = 0.1  # optimization budget per edit burst (10 Hz target)
CHUNK_ITERATIONS = 10


def encode_frame(revision: int, positions: np.ndarray) -> bytes:
    pos = np.ascontiguousarray(positions, dtype="<f4")
    return struct.pack("<QI", revision, len(pos)) + pos.tobytes()


def decode_frame(payload: bytes):
    revision, count = struct.unpack_from("<QI", payload)
    pos = np.frombuffer(payload, dtype="<f4", offset=12).reshape(count, 3)
    return revision, pos


class SessionEngine:
    """Worker thread around a StudioSession with a latest-wins mailbox.

    Edits swap in fresh parameter objects and set a dirty flag; the
    worker snapshots them at each chunk, so a burst of edits during an
    optimization results in one re-optimization with the final values.
    Optimization runs unlocked; only flags and the published frame are
    guarded.
    """

    def __init__(self, session: StudioSession, budget: float = EDIT_BUDGET_SECONDS):
        self.session = session
        self.budget = budget
        self._cond = threading.Condition()
        self._dirty = False
        self._settled = True
        self._stop = False
        self._frame: bytes = b""
        self._report: dict = {}
        self._thread = threading.Thread(target=self._run, name="planehead-engine", daemon=True)

    # -- lifecycle -----------------------------------------------------------

    def start(self):
        # initial frame at revision 0: the undeformed input
        self.session.transfer()
        self.session.revision = 0
        with self._cond:
            self._publish_locked(converged=True)
        self._thread.start()
        return self

    def stop(self):
        with self._cond:
            self._stop = True
            self._cond.notify_all()
        self._thread.join(timeout=10)

    # -- edits ----------------------------------------------------------------

    _EDITS = {
        "set_global": lambda s, p: s.set_global(p["param"], p["value"]),
        "set_edge_weight": lambda s, p: s.set_edge_weight(p["region_a"], p["region_b"], p["scale"]),
        "set_edge_smoothing": lambda s, p: s.set_edge_smoothing(p["region_a"], p["region_b"], p["scale"]),
        "set_face_planarization": lambda s, p: s.set_face_planarization(p["region"], p["mu"]),
        "toggle_lanteri": lambda s, p: s.toggle_lanteri(p["enabled"]),
    }

    def submit_edit(self, kind: str, payload: dict) -> bool:
        """Apply a parameter edit; returns whether anything changed.
        Unknown kinds and out-of-range values raise ValueError and leave
        the state untouched. Repeating an identical payload is a no-op."""
        if kind not in self._EDITS:
            raise ValueError(f"unknown message kind {kind!r}")
        try:
            changed = self._EDITS[kind](self.session, payload)
        except KeyError as exc:
            raise ValueError(f"missing field {exc} for {kind}") from None
        if changed:
            with self._cond:
                self._dirty = True
                self._settled = False
                self._cond.notify_all()
        return changed

    def export(self, path) -> int:
        self.session.export_mesh(path)
        return self.session.revision

    # -- frame access -----------------------------------------------------------

    def latest_frame(self):
        with self._cond:
            return self._frame, dict(self._report)

    def wait_for_frame(self, after_revision: int, timeout: float | None = None):
        """Block until a frame newer than ``after_revision`` is published."""
        with self._cond:
            ok = self._cond.wait_for(
                lambda: self.session.revision > after_revision or self._stop, timeout
            )
            if not ok or self._stop:
                return None
            return self._frame, dict(self._report)

    def settle(self, timeout: float = 120.0) -> int:
        """Block until optimization has converged for the latest params."""
        with self._cond:
            if not self._cond.wait_for(lambda: self._settled or self._stop, timeout):
                raise TimeoutError("engine did not settle in time")
            return self.session.revision

    # -- worker -----------------------------------------------------------------

    def _publish_locked(self, converged: bool):
        st = self.session.state
        self._frame = encode_frame(self.session.revision, self.session.positions)
        self._report = {
            "kind": "energy_report",
            "revision": self.session.revision,
            "energy": st.energy,
            "cost": st.cost,
            "iterations": st.iterations,
            "converged": bool(converged),
        }
        self._cond.notify_all()

    def _run(self):
        while True:
            with self._cond:
                self._cond.wait_for(lambda: self._dirty or not self._settled or self._stop)
                if self._stop:
                    return
                fresh = self._dirty
                self._dirty = False
            state = self.session.optimize(
                max_iters=CHUNK_ITERATIONS,
                time_budget=self.budget,
                warm=True,
                damping=1e-3 if fresh else None,
            )
            self.session.transfer()
            with self._cond:
                if state.converged and not self._dirty:
                    self._settled = True
                self._publish_locked(state.converged)


def connectivity_hash(triangles: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(triangles, dtype="<i4").tobytes()).hexdigest()[:16]


def session_init_message(engine: SessionEngine) -> dict:
    s = engine.session
    tri = np.ascontiguousarray(s.mesh.triangles, dtype="<i4")
    labels = np.ascontiguousarray(s.labels.face_labels, dtype="<i4")
    boundaries = sorted(s.abstracted.boundary_lengths())
    polylines = [
        {"pair": list(pl.pair), "points": s.abstracted.anchors[pl.anchors].tolist(),
         "closed": pl.closed}
        for pl in s.abstracted.polylines
    ]
    lo = s.mesh.vertices.min(axis=0)
    hi = s.mesh.vertices.max(axis=0)
    return {
        "kind": "session_init",
        "revision": s.revision,
        "vertex_count": int(s.mesh.n_vertices),
        "triangle_count": int(s.mesh.n_triangles),
        "region_count": int(s.labels.region_count),
        "connectivity_hash": connectivity_hash(tri),
        "triangles_b64": base64.b64encode(tri.tobytes()).decode("ascii"),
        "face_labels_b64": base64.b64encode(labels.tobytes()).decode("ascii"),
        "boundaries": [list(b) for b in boundaries],
        "polylines": polylines,
        "params": s.params.to_json_dict(),
        "bbox": [lo.tolist(), hi.tolist()],
        "pyramid_levels": int(s.pyramid.n_levels),
    }


def create_app(session: StudioSession, budget: float = EDIT_BUDGET_SECONDS) -> FastAPI:
    app = FastAPI(title="planehead live service")
    engine = SessionEngine(session, budget=budget).start()
    app.state.engine = engine

    @app.get("/health")
    def health():
        return {"status": "ok", "revision": engine.session.revision}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        await ws.send_json(session_init_message(engine))
        frame, report = engine.latest_frame()
        await ws.send_bytes(frame)
        if report:
            await ws.send_json(report)
        known_revision = engine.session.revision
        send_lock = asyncio.Lock()

        async def pump_frames():
            nonlocal known_revision
            while True:
                result = await asyncio.to_thread(engine.wait_for_frame, known_revision, 0.5)
                if result is None:
                    continue
                frame, report = result
                known_revision = report["revision"]
                async with send_lock:
                    await ws.send_bytes(frame)
                    await ws.send_json(report)

        pump = asyncio.create_task(pump_frames())
        try:
            while True:
                msg = await ws.receive_json()
                kind = msg.get("kind")
                try:
                    if kind == "request_export":
                        revision = engine.export(msg["path"])
                        reply = {"kind": "ack", "revision": revision, "changed": False,
                                 "exported": msg["path"]}
                    else:
                        changed = engine.submit_edit(kind, msg)
                        reply = {"kind": "ack", "revision": engine.session.revision,
                                 "changed": changed}
                except (ValueError, KeyError, OSError) as exc:
                    reply = {"kind": "error", "message": str(exc)}
                async with send_lock:
                    await ws.send_json(reply)
        except WebSocketDisconnect:
            pass
        finally:
            pump.cancel()

    return app
