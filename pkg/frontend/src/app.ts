/** DOM + WebSocket wiring for the operator console. */
import {
  cancelFrame,
  continueFrame,
  idleFrame,
  parseServerFrame,
  utteranceFrame,
  type CommandFrame,
} from "./protocol.js";
import {
  applyFrame,
  emptyView,
  isGated,
  withConnection,
  withOptimisticUtterance,
  type ConsoleView,
} from "./viewmodel.js";

const RECONNECT_MS = 2000;

let view: ConsoleView = emptyView();
let socket: WebSocket | null = null;

const el = (id: string) => document.getElementById(id)!;

function connect(): void {
  const url = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
  socket = new WebSocket(url);
  view = withConnection(view, "connecting");
  render();

  socket.onopen = () => {
    view = withConnection(view, "open");
    render();
  };
  socket.onmessage = (raw: MessageEvent) => {
    try {
      view = applyFrame(view, parseServerFrame(JSON.parse(raw.data)));
    } catch (err) {
      console.error("bad frame", err, raw.data);
      return;
    }
    render();
  };
  socket.onclose = () => {
    view = withConnection(view, "closed");
    render();
    setTimeout(connect, RECONNECT_MS); // snapshot frame restores state on reconnect
  };
  socket.onerror = () => socket?.close();
}

function send(frame: CommandFrame): void {
  if (view.connection !== "open" || !socket) {
    return; // controls are disabled while disconnected; never drop silently
  }
  socket.send(JSON.stringify(frame));
}

function sendUtterance(): void {
  const input = el("utterance") as HTMLInputElement;
  const text = input.value.trim();
  if (!text) return;
  send(utteranceFrame(text));
  view = withOptimisticUtterance(view, text);
  input.value = "";
  render();
}

function render(): void {
  renderBanner();
  renderChat();
  renderPlan();
  renderMap();
  renderBadges();
}

function renderBanner(): void {
  const banner = el("banner");
  banner.className = `banner ${view.connection}`;
  banner.textContent =
    view.connection === "open"
      ? view.lastError
        ? `error: ${view.lastError}`
        : "connected"
      : view.connection === "connecting"
        ? "connecting…"
        : "disconnected, retrying";
  const disabled = view.connection !== "open";
  for (const id of ["say", "utterance", "cancel", "continue", "idle"]) {
    (el(id) as HTMLButtonElement | HTMLInputElement).disabled = disabled;
  }
}

function renderChat(): void {
  const log = el("chat");
  log.replaceChildren(
    ...view.chat.map((entry) => {
      const row = document.createElement("div");
      row.className = `chat-row ${entry.speaker.toLowerCase().replace(" ", "-")}${entry.pending ? " pending" : ""}`;
      const speaker = document.createElement("span");
      speaker.className = "speaker";
      speaker.textContent = `${entry.speaker}: `;
      row.append(speaker, document.createTextNode(entry.text));
      return row;
    }),
  );
  log.scrollTop = log.scrollHeight;
}

function renderPlan(): void {
  const pane = el("plan");
  if (view.plan.length === 0) {
    pane.replaceChildren(document.createTextNode("no plan"));
    return;
  }
  pane.replaceChildren(
    ...view.plan.map((action, index) => {
      const row = document.createElement("div");
      row.className = `plan-row ${action.status}`;
      row.textContent = `${index + 1}. ${action.title} [${action.status}]`;
      return row;
    }),
  );
}

function renderMap(): void {
  const canvas = el("map") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const state = view.state;
  if (!state) return;
  const xs = state.destinations.map((d) => d.x);
  const ys = state.destinations.map((d) => d.y);
  const pad = 1.5;
  const minX = Math.min(...xs) - pad;
  const maxX = Math.max(...xs) + pad;
  const minY = Math.min(...ys) - pad;
  const maxY = Math.max(...ys) + pad;
  const sx = (x: number) => ((x - minX) / (maxX - minX)) * canvas.width;
  const sy = (y: number) => canvas.height - ((y - minY) / (maxY - minY)) * canvas.height;

  ctx.font = "10px sans-serif";
  for (const dest of state.destinations) {
    ctx.fillStyle = dest.id === state.user_location ? "#2a7" : "#888";
    ctx.beginPath();
    ctx.arc(sx(dest.x), sy(dest.y), 5, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = "#444";
    ctx.fillText(dest.display_name, sx(dest.x) + 7, sy(dest.y) + 3);
  }
  ctx.fillStyle = "#d33";
  ctx.beginPath();
  ctx.arc(sx(state.robot.x), sy(state.robot.y), 7, 0, Math.PI * 2);
  ctx.fill();
  ctx.fillStyle = "#d33";
  ctx.fillText("robot", sx(state.robot.x) + 9, sy(state.robot.y) - 6);
}

function renderBadges(): void {
  const state = view.state;
  el("mode-badge").textContent = state
    ? `${state.mode}${state.tour_mode ? " · tour" : ""}`
    : "–";
  el("phase-badge").textContent = state
    ? `${state.phase}${isGated(view) ? " (awaiting continue)" : ""}`
    : "–";
  el("listen-badge").textContent = state?.conversational_state ?? "–";
  (el("continue") as HTMLButtonElement).disabled =
    view.connection !== "open" || !isGated(view);
}

export function start(): void {
  el("say").addEventListener("click", sendUtterance);
  (el("utterance") as HTMLInputElement).addEventListener("keydown", (e) => {
    if ((e as KeyboardEvent).key === "Enter") sendUtterance();
  });
  el("cancel").addEventListener("click", () => send(cancelFrame()));
  el("continue").addEventListener("click", () => send(continueFrame()));
  el("idle").addEventListener("click", () => send(idleFrame()));
  connect();
}

if (typeof document !== "undefined" && document.getElementById("chat")) {
  start();
}
