/**
 * DOM wiring: renders the view model into the dashboard and routes user
 * input back into it. All numeric displays mirror the latest frame's
 * values exactly; nothing is interpolated or dead-reckoned.
 */

import { ConsoleViewModel } from "./viewmodel.js";
import { MotorReadout } from "./protocol.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderMotor(prefix: string, motor: MotorReadout | undefined): void {
  el(`${prefix}-enabled`).textContent =
    motor === undefined ? "—" : motor.enabled ? "ON" : "OFF";
  el(`${prefix}-direction`).textContent =
    motor === undefined ? "—" : motor.direction.toUpperCase();
  el(`${prefix}-speed`).textContent =
    motor === undefined ? "—" : `${motor.commanded_rpm.toFixed(1)} rpm`;
}

export function bindConsole(vm: ConsoleViewModel): void {
  const banner = el("disconnected-banner");
  const modeBadge = el("mode-badge");
  const estopBadge = el("estop-badge");
  const insertion = el("insertion-display");
  const rotary = el("rotary-display");
  const inputs = Array.from(
    document.querySelectorAll<HTMLInputElement | HTMLButtonElement>(
      "input[data-command], button[data-command]",
    ),
  );

  const showError = (text: string) => {
    const node = el("input-error");
    node.textContent = text;
    node.hidden = text === "";
  };

  const render = () => {
    const frame = vm.latestFrame;
    banner.hidden = vm.connected && frame !== null;
    for (const input of inputs) input.disabled = !vm.inputsEnabled;

    modeBadge.textContent = vm.rotationEnabled ? "ROTATION" : "NORMAL";
    modeBadge.classList.toggle("rotation", vm.rotationEnabled);
    (el("rotation-toggle") as HTMLButtonElement).textContent = vm.rotationEnabled
      ? "Disable needle rotation"
      : "Enable needle rotation";

    estopBadge.hidden = !(frame?.estop ?? false);

    insertion.textContent =
      frame === null ? "—" : `${frame.insertion_display_mm.toFixed(3)} mm`;
    insertion.classList.toggle("frozen", vm.insertionFrozen);
    rotary.textContent =
      frame === null ? "—" : `${frame.rotary_display_deg.toFixed(2)} deg`;

    renderMotor("im", frame?.insertion_motor);
    renderMotor("rm", frame?.rotary_motor);
    el("ie-counts").textContent = frame === null ? "—" : String(frame.ie_counts);
    el("re-counts").textContent = frame === null ? "—" : String(frame.re_counts);
    el("sim-time").textContent =
      frame === null ? "—" : `${frame.time_s.toFixed(2)} s`;

    if (vm.lastRejection !== null) {
      showError(`rejected: ${vm.lastRejection.reason}`);
    }
  };

  vm.onChange(render);
  render();

  const submitFrom = (result: { ok: boolean; error?: string }) => {
    showError(result.ok ? "" : result.error ?? "invalid input");
  };

  el<HTMLButtonElement>("insertion-go").addEventListener("click", () => {
    submitFrom(vm.setInsertionTarget(el<HTMLInputElement>("insertion-target").value));
  });
  el<HTMLButtonElement>("rotary-go").addEventListener("click", () => {
    submitFrom(vm.setRotaryTarget(el<HTMLInputElement>("rotary-target").value));
  });
  el<HTMLButtonElement>("speed-set").addEventListener("click", () => {
    const axis = el<HTMLSelectElement>("speed-axis").value as
      | "insertion"
      | "rotary";
    submitFrom(vm.setSpeed(axis, el<HTMLInputElement>("speed-rpm").value));
  });
  el<HTMLButtonElement>("rotation-toggle").addEventListener("click", () => {
    submitFrom(vm.setRotationEnable(!vm.rotationEnabled));
  });
  // E-stop fires on a single click: a safety action must never sit behind
  // a confirmation dialog.
  el<HTMLButtonElement>("estop").addEventListener("click", () => {
    submitFrom(vm.engageEStop());
  });
  el<HTMLButtonElement>("estop-release").addEventListener("click", () => {
    submitFrom(vm.releaseEStop());
  });
}
