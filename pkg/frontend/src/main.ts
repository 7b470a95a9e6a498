/**
 * Bootstrap: connect the WebSocket, keep reconnecting, feed the view model.
 */

import { ConsoleViewModel } from "./viewmodel.js";
import { bindConsole } from "./console.js";

const params = new URLSearchParams(window.location.search);
const endpoint =
  params.get("ws") ?? `ws://${window.location.hostname || "127.0.0.1"}:8080`;

let socket: WebSocket | null = null;

const vm = new ConsoleViewModel((text) => {
  if (socket !== null && socket.readyState === WebSocket.OPEN) {
    socket.send(text);
  }
});

function connect(delayMs: number): void {
  socket = new WebSocket(endpoint);
  socket.addEventListener("open", () => vm.handleConnection(true));
  socket.addEventListener("message", (event) => {
    if (typeof event.data === "string") vm.handleMessage(event.data);
  });
  socket.addEventListener("close", () => {
    vm.handleConnection(false);
    const next = Math.min(delayMs * 2, 5000);
    setTimeout(() => connect(next), delayMs);
  });
}

bindConsole(vm);
connect(250);
