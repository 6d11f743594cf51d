/**
 * Frame schema (v1) shared with the robot bridge: outbound command builders
 * and zod validators for everything the server streams.
 */
import { z } from "zod";

export const FRAME_VERSION = 1;

export const FunctionCallSchema = z.object({
  name: z.string(),
  arguments: z.string(),
});

export const MessageFrameSchema = z.object({
  v: z.literal(FRAME_VERSION),
  type: z.literal("message"),
  role: z.enum(["user", "assistant", "system"]),
  content: z.string(),
  function_call: FunctionCallSchema.optional(),
  ts: z.number(),
});

export const EventFrameSchema = z.object({
  v: z.literal(FRAME_VERSION),
  type: z.literal("event"),
  kind: z.enum([
    "robot_dialogue",
    "system_note",
    "plan_started",
    "action_started",
    "action_completed",
    "plan_completed",
    "plan_cancelled",
    "plan_rejected",
    "awaiting_wake",
    "resumed",
  ]),
  payload: z.record(z.unknown()),
  ts: z.number(),
});

export const RobotStateSchema = z.object({
  clock_ms: z.number(),
  robot: z.object({ x: z.number(), y: z.number() }),
  gripper: z.string().nullable(),
  items: z.record(z.string()),
  busy: z.boolean(),
  destinations: z.array(
    z.object({
      id: z.string(),
      display_name: z.string(),
      x: z.number(),
      y: z.number(),
    }),
  ),
  user_location: z.string(),
  mode: z.string(),
  tour_mode: z.boolean(),
  phase: z.enum(["idle", "running", "gated"]),
  plan: z.array(z.string()),
  cursor: z.number(),
  conversational_state: z.string().nullable(),
  facts: z.array(z.string()),
});

export const StateFrameSchema = z.object({
  v: z.literal(FRAME_VERSION),
  type: z.literal("state"),
  state: RobotStateSchema,
});

export const SnapshotFrameSchema = z.object({
  v: z.literal(FRAME_VERSION),
  type: z.literal("snapshot"),
  messages: z.array(MessageFrameSchema),
  events: z.array(EventFrameSchema.omit({ v: true, type: true })),
  state: RobotStateSchema,
});

export const ErrorFrameSchema = z.object({
  v: z.literal(FRAME_VERSION),
  type: z.literal("error"),
  message: z.string(),
});

export const ServerFrameSchema = z.discriminatedUnion("type", [
  MessageFrameSchema,
  EventFrameSchema,
  StateFrameSchema,
  SnapshotFrameSchema,
  ErrorFrameSchema,
]);

export type MessageFrame = z.infer<typeof MessageFrameSchema>;
export type EventFrame = z.infer<typeof EventFrameSchema>;
export type RobotState = z.infer<typeof RobotStateSchema>;
export type StateFrame = z.infer<typeof StateFrameSchema>;
export type SnapshotFrame = z.infer<typeof SnapshotFrameSchema>;
export type ErrorFrame = z.infer<typeof ErrorFrameSchema>;
export type ServerFrame = z.infer<typeof ServerFrameSchema>;

export const CommandFrameSchema = z.discriminatedUnion("type", [
  z.object({ type: z.literal("user_utterance"), text: z.string().min(1) }),
  z.object({ type: z.literal("cancel") }),
  z.object({ type: z.literal("continue") }),
  z.object({ type: z.literal("idle") }),
]);

export type CommandFrame = z.infer<typeof CommandFrameSchema>;

export function utteranceFrame(text: string): CommandFrame {
  return CommandFrameSchema.parse({ type: "user_utterance", text });
}

export function cancelFrame(): CommandFrame {
  return CommandFrameSchema.parse({ type: "cancel" });
}

export function continueFrame(): CommandFrame {
  return CommandFrameSchema.parse({ type: "continue" });
}

export function idleFrame(): CommandFrame {
  return CommandFrameSchema.parse({ type: "idle" });
}

export function parseServerFrame(raw: unknown): ServerFrame {
  return ServerFrameSchema.parse(raw);
}
