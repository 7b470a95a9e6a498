/**
 * Wire protocol spoken by the telemetry service.
 *
 * JSON text frames over one WebSocket; every message carries a version
 * field. See docs/telemetry_protocol.md in the repository root for the
 * field-by-field schema.
 */

export const PROTOCOL_VERSION = 1;

export type MotorDirection = "cw" | "ccw";

export interface MotorReadout {
  enabled: boolean;
  direction: MotorDirection;
  commanded_rpm: number;
  actual_rpm: number;
}

export interface TelemetryFrame {
  version: number;
  type: "telemetry";
  sequence: number;
  time_s: number;
  insertion_display_mm: number;
  rotary_display_deg: number;
  mode: "normal" | "rotation_enabled";
  insertion_motor: MotorReadout;
  rotary_motor: MotorReadout;
  ie_counts: number;
  re_counts: number;
  estop: boolean;
}

export interface Ack {
  version: number;
  type: "ack";
  request_id: string | null;
  accepted: boolean;
  reason: string | null;
}

export type CommandKind =
  | "SetInsertionTarget"
  | "SetRotaryTarget"
  | "SetRotationEnable"
  | "SetSpeed"
  | "EStop";

export interface CommandMessage {
  version: typeof PROTOCOL_VERSION;
  type: "command";
  kind: CommandKind;
  value: unknown;
  request_id: string;
}

function isMotorReadout(value: unknown): value is MotorReadout {
  if (typeof value !== "object" || value === null) return false;
  const m = value as Record<string, unknown>;
  return (
    typeof m.enabled === "boolean" &&
    (m.direction === "cw" || m.direction === "ccw") &&
    typeof m.commanded_rpm === "number" &&
    typeof m.actual_rpm === "number"
  );
}

export function parseServerMessage(text: string): TelemetryFrame | Ack | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  if (msg.type === "telemetry") {
    if (
      typeof msg.sequence === "number" &&
      typeof msg.time_s === "number" &&
      typeof msg.insertion_display_mm === "number" &&
      typeof msg.rotary_display_deg === "number" &&
      (msg.mode === "normal" || msg.mode === "rotation_enabled") &&
      isMotorReadout(msg.insertion_motor) &&
      isMotorReadout(msg.rotary_motor) &&
      typeof msg.ie_counts === "number" &&
      typeof msg.re_counts === "number" &&
      typeof msg.estop === "boolean"
    ) {
      return msg as unknown as TelemetryFrame;
    }
    return null;
  }
  if (msg.type === "ack") {
    if (
      typeof msg.accepted === "boolean" &&
      (typeof msg.request_id === "string" || msg.request_id === null) &&
      (typeof msg.reason === "string" || msg.reason === null ||
        msg.reason === undefined)
    ) {
      return {
        version: typeof msg.version === "number" ? msg.version : PROTOCOL_VERSION,
        type: "ack",
        request_id: (msg.request_id as string | null) ?? null,
        accepted: msg.accepted as boolean,
        reason: (msg.reason as string | null) ?? null,
      };
    }
    return null;
  }
  return null;
}

export function encodeCommand(
  kind: CommandKind,
  value: unknown,
  requestId: string,
): string {
  const message: CommandMessage = {
    version: PROTOCOL_VERSION,
    type: "command",
    kind,
    value,
    request_id: requestId,
  };
  return JSON.stringify(message);
}
