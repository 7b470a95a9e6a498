/**
 * Console state: latest telemetry frame, pending commands, connection.
 *
 * Pure view/command surface: every rendered value comes from the latest
 * frame (by sequence number — stale frames never win), every user action
 * maps to exactly one command message, and nothing is mutated
 * optimistically. The DOM layer subscribes to change events and reads the
 * fields; tests drive the model directly.
 */

import {
  Ack,
  CommandKind,
  TelemetryFrame,
  encodeCommand,
  parseServerMessage,
} from "./protocol.js";

export type SubmitResult =
  | { ok: true; requestId: string }
  | { ok: false; error: string };

export interface PendingCommand {
  kind: CommandKind;
  sentAt: number;
}

export interface Rejection {
  requestId: string | null;
  reason: string;
}

export class ConsoleViewModel {
  latestFrame: TelemetryFrame | null = null;
  connected = false;
  readonly pending = new Map<string, PendingCommand>();
  lastRejection: Rejection | null = null;

  private listeners: Array<() => void> = [];
  private counter = 0;

  constructor(
    private readonly sendText: (text: string) => void,
    private readonly now: () => number = () => Date.now(),
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  // ----------------------------------------------------------------
  // socket events
  // ----------------------------------------------------------------

  handleConnection(up: boolean): void {
    this.connected = up;
    if (!up) {
      // A reconnect rebuilds the view from the first frame received.
      this.latestFrame = null;
      this.pending.clear();
    }
    this.emit();
  }

  handleMessage(text: string): void {
    const message = parseServerMessage(text);
    if (message === null) return;
    if (message.type === "telemetry") {
      // Out-of-order frames are ignored, never rendered.
      if (this.latestFrame === null || message.sequence > this.latestFrame.sequence) {
        this.latestFrame = message;
        this.emit();
      }
      return;
    }
    this.applyAck(message);
  }

  private applyAck(ack: Ack): void {
    if (ack.request_id !== null) {
      this.pending.delete(ack.request_id);
    }
    if (!ack.accepted) {
      this.lastRejection = {
        requestId: ack.request_id,
        reason: ack.reason ?? "rejected",
      };
    }
    this.emit();
  }

  // ----------------------------------------------------------------
  // commands (validation failures never send anything)
  // ----------------------------------------------------------------

  private submit(kind: CommandKind, value: unknown): SubmitResult {
    if (!this.connected) {
      return { ok: false, error: "not connected" };
    }
    const requestId = `cmd-${++this.counter}-${this.now()}`;
    this.pending.set(requestId, { kind, sentAt: this.now() });
    this.sendText(encodeCommand(kind, value, requestId));
    this.emit();
    return { ok: true, requestId };
  }

  private static parseFinite(raw: string): number | null {
    const trimmed = raw.trim();
    if (trimmed === "") return null;
    const value = Number(trimmed);
    return Number.isFinite(value) ? value : null;
  }

  setInsertionTarget(raw: string): SubmitResult {
    const value = ConsoleViewModel.parseFinite(raw);
    if (value === null) {
      return { ok: false, error: `not a number: "${raw}"` };
    }
    return this.submit("SetInsertionTarget", value);
  }

  setRotaryTarget(raw: string): SubmitResult {
    const value = ConsoleViewModel.parseFinite(raw);
    if (value === null) {
      return { ok: false, error: `not a number: "${raw}"` };
    }
    return this.submit("SetRotaryTarget", value);
  }

  setSpeed(axis: "insertion" | "rotary", raw: string): SubmitResult {
    const rpm = ConsoleViewModel.parseFinite(raw);
    if (rpm === null) {
      return { ok: false, error: `not a number: "${raw}"` };
    }
    if (rpm < 0) {
      return { ok: false, error: "speed must be >= 0 rpm" };
    }
    return this.submit("SetSpeed", { axis, rpm });
  }

  setRotationEnable(on: boolean): SubmitResult {
    return this.submit("SetRotationEnable", on);
  }

  /** Single-click safety action: no confirmation dialog by design. */
  engageEStop(): SubmitResult {
    return this.submit("EStop", true);
  }

  releaseEStop(): SubmitResult {
    return this.submit("EStop", false);
  }

  // ----------------------------------------------------------------
  // derived view state
  // ----------------------------------------------------------------

  get rotationEnabled(): boolean {
    return this.latestFrame?.mode === "rotation_enabled";
  }

  /** The insertion readout is held (frozen) while rotation mode is active. */
  get insertionFrozen(): boolean {
    return this.rotationEnabled;
  }

  get inputsEnabled(): boolean {
    return this.connected && this.latestFrame !== null;
  }

  hasPending(kind: CommandKind): boolean {
    for (const entry of this.pending.values()) {
      if (entry.kind === kind) return true;
    }
    return false;
  }
}
