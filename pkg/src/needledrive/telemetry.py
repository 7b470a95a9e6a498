"""WebSocket telemetry service: live state stream plus a command endpoint.

One asyncio loop owns the simulator. A pacing task advances simulated time
in real time and broadcasts a JSON telemetry frame at a fixed rate (20 Hz by
default); connection handlers validate incoming commands, apply them between
frames, and answer each with exactly one acknowledgment carrying the
command's request_id. Subscribers that stop reading are disconnected rather
than ever back-pressuring the simulation.

Every message carries a version field. Schemas are documented in
docs/telemetry_protocol.md.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import math
from typing import Any

from websockets.asyncio.server import serve

from .control import ControllerMode
from .drivetrain import MotorRole, MotorState
from .simulate import NeedleDriverSim

PROTOCOL_VERSION = 1
DEFAULT_PORT = 8080
DEFAULT_FRAME_HZ = 20.0

COMMAND_KINDS = (
    "SetInsertionTarget",
    "SetRotaryTarget",
    "SetRotationEnable",
    "SetSpeed",
    "EStop",
)


def _motor_payload(m: MotorState) -> dict:
    return {
        "enabled": m.enabled,
        "direction": "cw" if m.direction.value > 0 else "ccw",
        "commanded_rpm": m.commanded_speed,
        "actual_rpm": m.actual_speed,
    }


class TelemetryService:
    """Serves one simulator instance over a WebSocket endpoint."""

    def __init__(
        self,
        sim: NeedleDriverSim | None = None,
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
        frame_hz: float = DEFAULT_FRAME_HZ,
        subscriber_buffer: int = 64,
    ):
        self.sim = sim or NeedleDriverSim()
        self.host = host
        self.port = port
        self.frame_hz = frame_hz
        self.subscriber_buffer = subscriber_buffer
        self.bound_port: int | None = None
        self._sequence = 0
        self._subscribers: dict[Any, asyncio.Queue] = {}

    # ------------------------------------------------------------------
    # frames and commands
    # ------------------------------------------------------------------

    def build_frame(self) -> dict:
        """Consistent snapshot of the current control tick."""
        self._sequence += 1
        sim = self.sim
        display = sim.current_display()
        return {
            "version": PROTOCOL_VERSION,
            "type": "telemetry",
            "sequence": self._sequence,
            "time_s": sim.time,
            "insertion_display_mm": display.insertion_display,
            "rotary_display_deg": display.rotary_display,
            "mode": (
                "rotation_enabled"
                if sim.ctrl.mode is ControllerMode.ROTATION_ENABLED
                else "normal"
            ),
            "insertion_motor": _motor_payload(sim.drive.insertion_motor),
            "rotary_motor": _motor_payload(sim.drive.rotary_motor),
            "ie_counts": sim.drive.ie.counts,
            "re_counts": sim.drive.re.counts,
            "estop": sim.estopped,
        }

    def handle_command(self, msg: dict) -> dict:
        """Validate and apply one command; always returns one acknowledgment.

        Rejected commands leave the simulation untouched.
        """
        request_id = msg.get("request_id") if isinstance(msg, dict) else None

        def reject(reason: str) -> dict:
            return {
                "version": PROTOCOL_VERSION,
                "type": "ack",
                "request_id": request_id,
                "accepted": False,
                "reason": reason,
            }

        if not isinstance(msg, dict):
            return reject("command must be a JSON object")
        if msg.get("type") not in (None, "command"):
            return reject(f"unexpected message type {msg.get('type')!r}")
        kind = msg.get("kind")
        if kind not in COMMAND_KINDS:
            return reject(f"unknown command kind {kind!r}")
        value = msg.get("value")

        try:
            if kind in ("SetInsertionTarget", "SetRotaryTarget"):
                if not isinstance(value, (int, float)) or isinstance(value, bool) \
                        or not math.isfinite(value):
                    return reject(f"{kind} requires a finite number, got {value!r}")
                if kind == "SetInsertionTarget":
                    self.sim.set_insertion_target(float(value))
                else:
                    self.sim.set_rotary_target(float(value))
            elif kind == "SetRotationEnable":
                if not isinstance(value, bool):
                    return reject(f"SetRotationEnable requires a boolean, got {value!r}")
                self.sim.set_rotation_enable(value)
            elif kind == "SetSpeed":
                if not isinstance(value, dict):
                    return reject("SetSpeed requires {axis, rpm}")
                axis = value.get("axis")
                rpm = value.get("rpm")
                if axis not in ("insertion", "rotary"):
                    return reject(f"SetSpeed axis must be insertion or rotary, got {axis!r}")
                if not isinstance(rpm, (int, float)) or isinstance(rpm, bool) \
                        or not math.isfinite(rpm):
                    return reject(f"SetSpeed rpm must be a finite number, got {rpm!r}")
                role = MotorRole.INSERTION if axis == "insertion" else MotorRole.ROTARY
                self.sim.set_axis_speed(role, float(rpm))
            elif kind == "EStop":
                if not isinstance(value, bool):
                    return reject("EStop requires a boolean (true engages, false resets)")
                self.sim.set_estop(value)
        except ValueError as exc:
            return reject(str(exc))

        return {
            "version": PROTOCOL_VERSION,
            "type": "ack",
            "request_id": request_id,
            "accepted": True,
            "reason": None,
        }

    # ------------------------------------------------------------------
    # asyncio plumbing
    # ------------------------------------------------------------------

    async def _send_frames(self, websocket, queue: asyncio.Queue) -> None:
        while True:
            await websocket.send(await queue.get())

    async def _client_handler(self, websocket) -> None:
        queue: asyncio.Queue = asyncio.Queue(maxsize=self.subscriber_buffer)
        self._subscribers[websocket] = queue
        sender = asyncio.create_task(self._send_frames(websocket, queue))
        try:
            async for message in websocket:
                try:
                    msg = json.loads(message)
                except json.JSONDecodeError:
                    ack = {
                        "version": PROTOCOL_VERSION,
                        "type": "ack",
                        "request_id": None,
                        "accepted": False,
                        "reason": "message is not valid JSON",
                    }
                else:
                    ack = self.handle_command(msg)
                await websocket.send(json.dumps(ack))
        finally:
            self._subscribers.pop(websocket, None)
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender

    async def _pace_loop(self) -> None:
        """Advance the sim in real time and fan frames out to subscribers."""
        frame_period = 1.0 / self.frame_hz
        ticks_per_frame = max(1, round(frame_period / self.sim.cfg.control_period))
        loop = asyncio.get_running_loop()
        next_time = loop.time() + frame_period
        while True:
            for _ in range(ticks_per_frame):
                self.sim.tick()
            frame = json.dumps(self.build_frame())
            for websocket, queue in list(self._subscribers.items()):
                try:
                    queue.put_nowait(frame)
                except asyncio.QueueFull:
                    # Never let a stalled reader hold the simulation back.
                    self._subscribers.pop(websocket, None)
                    asyncio.ensure_future(
                        websocket.close(code=1013, reason="slow consumer")
                    )
            delay = next_time - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
                next_time += frame_period
            else:
                next_time = loop.time() + frame_period
            await asyncio.sleep(0)

    async def serve_forever(self, ready: asyncio.Event | None = None) -> None:
        """Bind the endpoint and run until cancelled."""
        async with serve(self._client_handler, self.host, self.port) as server:
            self.bound_port = server.sockets[0].getsockname()[1]
            if ready is not None:
                ready.set()
            pacer = asyncio.create_task(self._pace_loop())
            try:
                await asyncio.Future()
            finally:
                pacer.cancel()
                with contextlib.suppress(asyncio.CancelledError):
                    await pacer
