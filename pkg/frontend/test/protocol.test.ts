import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  CommandFrameSchema,
  cancelFrame,
  continueFrame,
  idleFrame,
  parseServerFrame,
  utteranceFrame,
} from "../src/protocol.js";

const fixtureUrl = new URL("./fixtures/session_frames.json", import.meta.url);
const rawFrames: unknown[] = JSON.parse(readFileSync(fixtureUrl, "utf-8"));

describe("outbound command frames", () => {
  it("cancel and continue buttons emit schema-valid frames", () => {
    expect(CommandFrameSchema.safeParse(cancelFrame()).success).toBe(true);
    expect(CommandFrameSchema.safeParse(continueFrame()).success).toBe(true);
    expect(cancelFrame()).toEqual({ type: "cancel" });
    expect(continueFrame()).toEqual({ type: "continue" });
  });

  it("utterance and idle frames validate", () => {
    expect(utteranceFrame("show me the drone cage")).toEqual({
      type: "user_utterance",
      text: "show me the drone cage",
    });
    expect(idleFrame()).toEqual({ type: "idle" });
  });

  it("rejects empty utterances", () => {
    expect(() => utteranceFrame("")).toThrow();
  });

  it("rejects unknown command types", () => {
    expect(CommandFrameSchema.safeParse({ type: "warp_drive" }).success).toBe(false);
  });
});

describe("inbound frame validation", () => {
  it("accepts every frame of the recorded session", () => {
    for (const raw of rawFrames) {
      expect(() => parseServerFrame(raw)).not.toThrow();
    }
  });

  it("rejects frames with a bad version or shape", () => {
    expect(() => parseServerFrame({ v: 2, type: "error", message: "x" })).toThrow();
    expect(() => parseServerFrame({ v: 1, type: "message", role: "wizard", content: "", ts: 0 })).toThrow();
    expect(() => parseServerFrame({ v: 1, type: "event", kind: "mystery", payload: {}, ts: 0 })).toThrow();
    expect(() => parseServerFrame("not even an object")).toThrow();
  });
});
