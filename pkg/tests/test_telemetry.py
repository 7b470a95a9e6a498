"""Telemetry service: frame streaming, command handling, e-stop semantics.

Runs a real service on an ephemeral port inside each test's asyncio loop.
"""

import asyncio
import contextlib
import json

from websockets.asyncio.client import connect

from needledrive import NeedleDriverSim
from needledrive.telemetry import TelemetryService


def run_scenario(coro_factory, sim=None, frame_hz=20.0, **service_kwargs):
    """Start a service, run the scenario coroutine against it, tear down."""

    async def body():
        service = TelemetryService(sim=sim, port=0, frame_hz=frame_hz,
                                   **service_kwargs)
        ready = asyncio.Event()
        server = asyncio.create_task(service.serve_forever(ready))
        await asyncio.wait_for(ready.wait(), 5)
        try:
            uri = f"ws://127.0.0.1:{service.bound_port}"
            await asyncio.wait_for(coro_factory(service, uri), 30)
        finally:
            server.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await server

    asyncio.run(body())


async def next_frame(ws):
    while True:
        msg = json.loads(await ws.recv())
        if msg["type"] == "telemetry":
            return msg


async def latest_frame(ws):
    """Drain buffered messages and return the freshest telemetry frame."""
    frame = await next_frame(ws)
    while True:
        try:
            msg = json.loads(await asyncio.wait_for(ws.recv(), 0.02))
        except asyncio.TimeoutError:
            return frame
        if msg["type"] == "telemetry":
            frame = msg


async def send_command(ws, kind, value, request_id="req-1"):
    await ws.send(json.dumps({
        "version": 1, "type": "command", "kind": kind,
        "value": value, "request_id": request_id,
    }))
    while True:
        msg = json.loads(await ws.recv())
        if msg["type"] == "ack":
            return msg


class TestStreaming:
    def test_frames_arrive_in_order_with_monotone_sequence(self):
        async def scenario(service, uri):
            async with connect(uri) as ws:
                frames = [await next_frame(ws) for _ in range(5)]
            sequences = [f["sequence"] for f in frames]
            assert sequences == sorted(sequences)
            assert len(set(sequences)) == 5
            assert all(f["version"] == 1 for f in frames)
            times = [f["time_s"] for f in frames]
            assert times == sorted(times)

        run_scenario(scenario)

    def test_two_subscribers_see_identical_frames(self):
        async def scenario(service, uri):
            async with connect(uri) as a, connect(uri) as b:
                seen_a = {f["sequence"]: f for f in
                          [await next_frame(a) for _ in range(4)]}
                seen_b = {f["sequence"]: f for f in
                          [await next_frame(b) for _ in range(4)]}
            shared = set(seen_a) & set(seen_b)
            assert shared
            for seq in shared:
                assert seen_a[seq] == seen_b[seq]

        run_scenario(scenario)

    def test_frame_carries_full_state_snapshot(self):
        async def scenario(service, uri):
            async with connect(uri) as ws:
                frame = await next_frame(ws)
            for key in ("insertion_display_mm", "rotary_display_deg", "mode",
                        "insertion_motor", "rotary_motor", "ie_counts",
                        "re_counts", "estop", "time_s"):
                assert key in frame
            assert frame["insertion_motor"].keys() == {
                "enabled", "direction", "commanded_rpm", "actual_rpm"}

        run_scenario(scenario)


class TestCommands:
    def test_rotation_enable_reflected_in_next_frame(self):
        async def scenario(service, uri):
            async with connect(uri) as ws:
                ack = await send_command(ws, "SetRotationEnable", True, "toggle-1")
                assert ack["accepted"] and ack["request_id"] == "toggle-1"
                frame = await next_frame(ws)
                assert frame["mode"] == "rotation_enabled"

        run_scenario(scenario)

    def test_rotation_freezes_insertion_while_rotary_advances(self):
        async def scenario(service, uri):
            async with connect(uri) as ws:
                await send_command(ws, "SetRotationEnable", True)
                await send_command(ws, "SetRotaryTarget", 3600.0)
                first = await next_frame(ws)
                await asyncio.sleep(0.3)
                later = await next_frame(ws)
                assert later["rotary_display_deg"] > first["rotary_display_deg"]
                assert later["insertion_display_mm"] == first["insertion_display_mm"]

        run_scenario(scenario)

    def test_target_command_moves_the_axis(self):
        async def scenario(service, uri):
            async with connect(uri) as ws:
                await send_command(ws, "SetInsertionTarget", 30.0)
                await asyncio.sleep(0.5)
                frame = await latest_frame(ws)
                assert frame["insertion_display_mm"] > 5.0

        run_scenario(scenario)

    def test_over_cap_speed_rejected_with_reason(self):
        async def scenario(service, uri):
            async with connect(uri) as ws:
                ack = await send_command(ws, "SetSpeed",
                                         {"axis": "rotary", "rpm": 200.0})
                assert not ack["accepted"]
                assert "exceeds real_speed_cap" in ack["reason"]

        run_scenario(scenario)

    def test_valid_speed_accepted(self):
        async def scenario(service, uri):
            async with connect(uri) as ws:
                ack = await send_command(ws, "SetSpeed",
                                         {"axis": "insertion", "rpm": 30.0})
                assert ack["accepted"]
                assert service.sim.ctrl.insertion_speed == 30.0

        run_scenario(scenario)

    def test_unknown_kind_rejected(self):
        async def scenario(service, uri):
            async with connect(uri) as ws:
                ack = await send_command(ws, "SelfDestruct", True)
                assert not ack["accepted"]
                assert "unknown command kind" in ack["reason"]

        run_scenario(scenario)

    def test_malformed_payload_rejected_without_side_effects(self):
        async def scenario(service, uri):
            async with connect(uri) as ws:
                before = service.sim.ctrl.insertion_target
                ack = await send_command(ws, "SetInsertionTarget", "far away")
                assert not ack["accepted"]
                assert service.sim.ctrl.insertion_target == before

        run_scenario(scenario)

    def test_non_json_message_gets_error_ack(self):
        async def scenario(service, uri):
            async with connect(uri) as ws:
                await ws.send("this is not json")
                while True:
                    msg = json.loads(await ws.recv())
                    if msg["type"] == "ack":
                        break
                assert not msg["accepted"]
                assert "JSON" in msg["reason"]

        run_scenario(scenario)

    def test_every_command_acked_exactly_once(self):
        async def scenario(service, uri):
            async with connect(uri) as ws:
                for i in range(5):
                    await ws.send(json.dumps({
                        "version": 1, "type": "command",
                        "kind": "SetRotaryTarget", "value": float(i),
                        "request_id": f"cmd-{i}",
                    }))
                # collect everything for a fixed window; frames keep flowing
                acks = []
                deadline = asyncio.get_running_loop().time() + 1.0
                while asyncio.get_running_loop().time() < deadline:
                    try:
                        msg = json.loads(await asyncio.wait_for(ws.recv(), 0.2))
                    except asyncio.TimeoutError:
                        continue
                    if msg["type"] == "ack":
                        acks.append(msg["request_id"])
                assert acks == [f"cmd-{i}" for i in range(5)]

        run_scenario(scenario)


class TestEStop:
    def test_estop_zeroes_motors_in_next_frame_and_latches(self):
        sim = NeedleDriverSim()
        sim.set_insertion_target(500.0)  # long move, motor busy

        async def scenario(service, uri):
            async with connect(uri) as ws:
                frame = await next_frame(ws)
                assert frame["insertion_motor"]["enabled"]
                ack = await send_command(ws, "EStop", True)
                assert ack["accepted"]
                frame = await next_frame(ws)
                assert not frame["insertion_motor"]["enabled"]
                assert not frame["rotary_motor"]["enabled"]
                assert frame["estop"]
                await asyncio.sleep(0.2)
                frame = await next_frame(ws)
                assert not frame["insertion_motor"]["enabled"]  # latched
                ack = await send_command(ws, "EStop", False)
                assert ack["accepted"]
                frame = await next_frame(ws)
                assert not frame["estop"]
                assert frame["insertion_motor"]["enabled"]  # resumes the move

        run_scenario(scenario, sim=sim)


class TestServeCli:
    @staticmethod
    def _spawn(tmp_path, *extra_args):
        import re
        import subprocess
        import sys

        proc = subprocess.Popen(
            [sys.executable, "-m", "needledrive.cli", "serve", "--port", "0",
             *extra_args],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
        )
        line = proc.stdout.readline()
        match = re.search(r"ws://[\d.]+:(\d+)", line)
        assert match, f"no listening banner, got {line!r}"
        return proc, int(match.group(1))

    def test_serve_answers_state_queries(self, tmp_path):
        proc, port = self._spawn(tmp_path)
        try:
            async def query():
                from websockets.asyncio.client import connect

                async with connect(f"ws://127.0.0.1:{port}") as ws:
                    frame = await next_frame(ws)
                    assert frame["mode"] == "normal"

            asyncio.run(asyncio.wait_for(query(), 15))
        finally:
            proc.terminate()
            proc.wait(timeout=10)

    def test_serve_custom_config_reflects_lead(self, tmp_path):
        # 40 mm lead: a 10 mm move is a quarter nut revolution = 1250 counts
        # (2500 with the stock 20 mm screw). The slower approach speed keeps
        # one control period of approach travel inside the deadband.
        config = tmp_path / "wide_lead.json"
        config.write_text(json.dumps({
            "seed": 5,
            "screw": {"lead_mm": 40.0},
            "controller": {"insertion_approach_rpm": 4.2},
        }))
        proc, port = self._spawn(tmp_path, "--config", str(config))
        try:
            async def query():
                from websockets.asyncio.client import connect

                async with connect(f"ws://127.0.0.1:{port}") as ws:
                    await send_command(ws, "SetInsertionTarget", 10.0)
                    deadline = asyncio.get_running_loop().time() + 10
                    while asyncio.get_running_loop().time() < deadline:
                        frame = await next_frame(ws)
                        if abs(frame["insertion_display_mm"] - 10.0) < 0.05:
                            break
                    assert abs(frame["insertion_display_mm"] - 10.0) < 0.05
                    assert abs(frame["ie_counts"] - 1250) <= 10

            asyncio.run(asyncio.wait_for(query(), 20))
        finally:
            proc.terminate()
            proc.wait(timeout=10)

    def test_bind_failure_reports_runtime_error(self):
        import socket
        import subprocess
        import sys

        with socket.socket() as blocker:
            blocker.bind(("127.0.0.1", 0))
            blocker.listen(1)
            port = blocker.getsockname()[1]
            result = subprocess.run(
                [sys.executable, "-m", "needledrive.cli", "serve",
                 "--port", str(port)],
                capture_output=True, text=True, timeout=30,
            )
        assert result.returncode == 4
        assert "cannot bind" in result.stderr


class TestBackpressure:
    def test_slow_consumer_disconnected_not_blocking(self):
        async def scenario(service, uri):
            async with connect(uri) as stalled:
                # never read from `stalled`; its queue (3 deep) overflows
                async with connect(uri) as healthy:
                    start = await next_frame(healthy)
                    deadline = asyncio.get_running_loop().time() + 5.0
                    later = start
                    while (later["sequence"] <= start["sequence"] + 5
                           and asyncio.get_running_loop().time() < deadline):
                        later = await next_frame(healthy)
                    assert later["sequence"] > start["sequence"] + 5
                with contextlib.suppress(Exception):
                    await asyncio.wait_for(stalled.wait_closed(), 5)
                assert len(service._subscribers) <= 1

        run_scenario(scenario, subscriber_buffer=3)
