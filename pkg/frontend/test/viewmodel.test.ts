import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { parseServerFrame, type ServerFrame, type SnapshotFrame } from "../src/protocol.js";
import {
  applyFrame,
  applyFrames,
  emptyView,
  isGated,
  withConnection,
  withOptimisticUtterance,
} from "../src/viewmodel.js";

const fixtureUrl = new URL("./fixtures/session_frames.json", import.meta.url);
const frames: ServerFrame[] = JSON.parse(readFileSync(fixtureUrl, "utf-8")).map(parseServerFrame);

describe("recorded session replay", () => {
  it("is a 50-frame log", () => {
    expect(frames).toHaveLength(50);
  });

  it("reproduces the snapshot-tested final view", () => {
    const view = applyFrames(emptyView(), frames);
    expect(view).toMatchSnapshot();
  });

  it("pins chat order, plan statuses, and the robot marker", () => {
    const view = applyFrames(emptyView(), frames);
    // chat order equals frame arrival order
    const expectedChat = frames.flatMap((frame) => {
      if (frame.type !== "message") return [];
      if (frame.role === "user") return [`USER: ${frame.content}`];
      if (frame.role === "system") return [`SYSTEM: ${frame.content}`];
      const rows: string[] = [];
      if (frame.content) rows.push(`DOBBY: ${frame.content}`);
      if (frame.function_call) {
        rows.push(`FUNCTION CALL: ${frame.function_call.name}(${frame.function_call.arguments})`);
      }
      return rows;
    });
    expect(view.chat.map((e) => `${e.speaker}: ${e.text}`)).toEqual(expectedChat);
    // the second plan was cancelled mid-drive
    expect(view.plan).toEqual([{ title: "Drive to Drone Cage", status: "cancelled" }]);
    // final robot marker position: the interpolated pose where the drive stopped
    expect(view.state?.robot).toEqual({ x: -0.6000000000000001, y: 0.8 });
    expect(view.state?.phase).toBe("idle");
  });

  it("is a pure projection: replaying yields an identical view", () => {
    const first = applyFrames(emptyView(), frames);
    const second = applyFrames(emptyView(), frames);
    expect(second).toEqual(first);
  });

  it("never mutates the previous view", () => {
    let view = emptyView();
    const before = JSON.stringify(view);
    applyFrame(view, frames[0]);
    expect(JSON.stringify(view)).toBe(before);
  });
});

describe("plan pane transitions", () => {
  const planFrames = frames.filter(
    (f) => f.type === "event" && ["plan_started", "action_started", "action_completed", "plan_completed"].includes(f.kind),
  );

  it("tracks pending, then active, then done through the first plan", () => {
    let view = emptyView();
    view = applyFrame(view, planFrames[0]); // plan_started
    expect(view.plan.map((a) => a.status)).toEqual(["pending", "pending", "pending"]);
    view = applyFrame(view, planFrames[1]); // action_started 0
    expect(view.plan[0].status).toBe("active");
    view = applyFrame(view, planFrames[2]); // action_completed 0
    expect(view.plan[0].status).toBe("done");
    expect(view.plan[1].status).toBe("pending");
  });

  it("marks remaining actions cancelled on plan_cancelled", () => {
    let view = emptyView();
    view = applyFrame(view, planFrames[0]);
    view = applyFrame(view, planFrames[1]);
    view = applyFrame(
      view,
      parseServerFrame({ v: 1, type: "event", kind: "plan_cancelled", payload: {}, ts: 0 }),
    );
    expect(view.plan.map((a) => a.status)).toEqual(["cancelled", "cancelled", "cancelled"]);
  });
});

describe("snapshot frames", () => {
  it("rebuilds the view from a server snapshot on reconnect", () => {
    const streamed = applyFrames(emptyView(), frames);
    const snapshot: SnapshotFrame = {
      v: 1,
      type: "snapshot",
      messages: frames.filter((f) => f.type === "message"),
      events: frames
        .filter((f) => f.type === "event")
        .map(({ kind, payload, ts }) => ({ kind, payload, ts })),
      state: streamed.state!,
    };
    const rebuilt = applyFrame(withConnection(emptyView(), "open"), snapshot);
    expect(rebuilt.chat).toEqual(streamed.chat);
    expect(rebuilt.plan).toEqual(streamed.plan);
    expect(rebuilt.state).toEqual(streamed.state);
    expect(rebuilt.connection).toBe("open"); // connection survives the reset
  });
});

describe("optimistic echo", () => {
  it("confirms the pending entry instead of duplicating it", () => {
    let view = withOptimisticUtterance(emptyView(), "hello robot");
    expect(view.chat).toEqual([{ speaker: "USER", text: "hello robot", pending: true }]);
    view = applyFrame(
      view,
      parseServerFrame({ v: 1, type: "message", role: "user", content: "hello robot", ts: 5 }),
    );
    expect(view.chat).toEqual([{ speaker: "USER", text: "hello robot", pending: false }]);
  });
});

describe("badges", () => {
  it("reports the tour gate from state frames", () => {
    const base = applyFrames(emptyView(), frames);
    expect(isGated(base)).toBe(false);
    const gated = applyFrame(
      base,
      parseServerFrame({
        v: 1,
        type: "state",
        state: { ...base.state!, phase: "gated" },
      }),
    );
    expect(isGated(gated)).toBe(true);
  });

  it("records error frames without disturbing the chat", () => {
    const base = applyFrames(emptyView(), frames);
    const withError = applyFrame(
      base,
      parseServerFrame({ v: 1, type: "error", message: "unknown frame type: warp" }),
    );
    expect(withError.lastError).toBe("unknown frame type: warp");
    expect(withError.chat).toEqual(base.chat);
  });
});
