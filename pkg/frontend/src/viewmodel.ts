/**
 * Pure projection of the server frame stream into a renderable view.
 *
 * The view is derived only from received frames; no simulation happens on the
 * client, so replaying the same frame log always reproduces the same view.
 */
import type { EventFrame, MessageFrame, RobotState, ServerFrame } from "./protocol.js";

export type Speaker = "USER" | "DOBBY" | "SYSTEM" | "FUNCTION CALL";

export interface ChatEntry {
  speaker: Speaker;
  text: string;
  pending: boolean;
}

export type ActionStatus = "pending" | "active" | "done" | "cancelled";

export interface PlanActionView {
  title: string;
  status: ActionStatus;
}

export type ConnectionState = "connecting" | "open" | "closed";

export interface ConsoleView {
  chat: ChatEntry[];
  plan: PlanActionView[];
  state: RobotState | null;
  connection: ConnectionState;
  lastError: string | null;
}

export function emptyView(): ConsoleView {
  return { chat: [], plan: [], state: null, connection: "connecting", lastError: null };
}

function chatEntriesFor(message: Omit<MessageFrame, "v" | "type">): ChatEntry[] {
  const entries: ChatEntry[] = [];
  if (message.role === "user") {
    entries.push({ speaker: "USER", text: message.content, pending: false });
  } else if (message.role === "system") {
    entries.push({ speaker: "SYSTEM", text: message.content, pending: false });
  } else {
    if (message.content) {
      entries.push({ speaker: "DOBBY", text: message.content, pending: false });
    }
    if (message.function_call) {
      entries.push({
        speaker: "FUNCTION CALL",
        text: `${message.function_call.name}(${message.function_call.arguments})`,
        pending: false,
      });
    }
  }
  return entries;
}

function appendMessage(view: ConsoleView, message: MessageFrame): ConsoleView {
  const chat = [...view.chat];
  if (message.role === "user") {
    // confirm the optimistic echo instead of duplicating it
    const pendingIndex = chat.findIndex((e) => e.pending && e.text === message.content);
    if (pendingIndex >= 0) {
      chat[pendingIndex] = { ...chat[pendingIndex], pending: false };
      return { ...view, chat };
    }
  }
  return { ...view, chat: [...chat, ...chatEntriesFor(message)] };
}

function applyEvent(view: ConsoleView, event: Omit<EventFrame, "v" | "type">): ConsoleView {
  const payload = event.payload as Record<string, unknown>;
  switch (event.kind) {
    case "plan_started": {
      const titles = (payload.titles as string[]) ?? [];
      return { ...view, plan: titles.map((title) => ({ title, status: "pending" as const })) };
    }
    case "action_started":
      return withActionStatus(view, payload.index as number, "active");
    case "action_completed":
      return withActionStatus(view, payload.index as number, "done");
    case "plan_completed":
      return { ...view, plan: view.plan.map((a) => ({ ...a, status: "done" as const })) };
    case "plan_cancelled":
      return {
        ...view,
        plan: view.plan.map((a) =>
          a.status === "pending" || a.status === "active"
            ? { ...a, status: "cancelled" as const }
            : a,
        ),
      };
    default:
      return view;
  }
}

function withActionStatus(view: ConsoleView, index: number, status: ActionStatus): ConsoleView {
  const plan = view.plan.map((action, i) => (i === index ? { ...action, status } : action));
  return { ...view, plan };
}

export function applyFrame(view: ConsoleView, frame: ServerFrame): ConsoleView {
  switch (frame.type) {
    case "snapshot": {
      let next: ConsoleView = {
        ...emptyView(),
        connection: view.connection,
        state: frame.state,
      };
      for (const message of frame.messages) {
        next = appendMessage(next, message);
      }
      for (const event of frame.events) {
        next = applyEvent(next, event);
      }
      return next;
    }
    case "message":
      return appendMessage(view, frame);
    case "event":
      return applyEvent(view, frame);
    case "state":
      return { ...view, state: frame.state };
    case "error":
      return { ...view, lastError: frame.message };
  }
}

export function applyFrames(view: ConsoleView, frames: ServerFrame[]): ConsoleView {
  return frames.reduce(applyFrame, view);
}

export function withConnection(view: ConsoleView, connection: ConnectionState): ConsoleView {
  return { ...view, connection };
}

export function withOptimisticUtterance(view: ConsoleView, text: string): ConsoleView {
  return {
    ...view,
    chat: [...view.chat, { speaker: "USER", text, pending: true }],
  };
}

/** Tour gate shown when the plan is paused between actions. */
export function isGated(view: ConsoleView): boolean {
  return view.state?.phase === "gated";
}
