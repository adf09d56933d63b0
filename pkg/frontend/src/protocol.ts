/**
 * Gateway wire protocol: versioned JSON text frames over a WebSocket.
 *
 * Every frame carries `v` (protocol version) and `kind`. Unknown extra
 * fields are tolerated (zod strips them); unknown kinds are a hard error on
 * the sending side and an error frame from the gateway.
 */
import { z } from "zod";

export const PROTOCOL_VERSION = 1;

// ---- client -> gateway ------------------------------------------------------

export const JogMessage = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("jog"),
  dphi1: z.number().finite().optional(),
  dphi2: z.number().finite().optional(),
  dphi3: z.number().finite().optional(),
  dd4: z.number().finite().optional(),
});

export const SetConfigMessage = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("set_config"),
  config: z.object({
    phi1: z.number().finite().optional(),
    phi2: z.number().finite().optional(),
    phi3: z.number().finite().optional(),
    d4: z.number().finite().optional(),
  }),
});

export const SaveViewMessage = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("save_view"),
  label: z.string(),
});

export const RecoverMessage = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("recover"),
  view_id: z.string().min(1),
});

export const AbortMessage = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("abort"),
});

export const SetCompensationMessage = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("set_compensation"),
  enabled: z.boolean(),
});

export const QueryStateMessage = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("query_state"),
});

export const ControlMessage = z.discriminatedUnion("kind", [
  JogMessage,
  SetConfigMessage,
  SaveViewMessage,
  RecoverMessage,
  AbortMessage,
  SetCompensationMessage,
  QueryStateMessage,
]);
export type ControlMessage = z.infer<typeof ControlMessage>;

// ---- gateway -> client ------------------------------------------------------

export const ConfigSchema = z.object({
  phi1: z.number(),
  phi2: z.number(),
  phi3: z.number(),
  d4: z.number(),
});
export type JointConfig = z.infer<typeof ConfigSchema>;

export const PoseSchema = z.object({
  position: z.array(z.number()).length(3),
  rotation: z.array(z.array(z.number()).length(3)).length(3),
});
export type Pose = z.infer<typeof PoseSchema>;

export const BendSchema = z.object({
  theta_deg: z.number(),
  alpha_deg: z.number(),
  radius_mm: z.number().nullable(),
  length_mm: z.number(),
});
export type Bend = z.infer<typeof BendSchema>;

export const StateFrame = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("state"),
  tick: z.number().int(),
  session_id: z.string(),
  config: ConfigSchema,
  desired: ConfigSchema,
  settled: z.boolean(),
  bend: BendSchema,
  tip: PoseSchema,
  plant_tip: PoseSchema,
  roadmap: z.object({ vertices: z.number().int(), edges: z.number().int() }),
  views: z.array(z.object({ id: z.string(), label: z.string(), config: ConfigSchema })),
  recovery: z
    .object({ view_id: z.string(), emitted: z.number().int(), total: z.number().int() })
    .nullable(),
  compensation: z.object({ enabled: z.boolean(), available: z.boolean() }),
});
export type StateFrame = z.infer<typeof StateFrame>;

export const HelloFrame = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("hello"),
  role: z.enum(["controller", "viewer"]),
  session_id: z.string(),
});

export const HeartbeatFrame = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("heartbeat"),
  tick: z.number().int(),
  uptime_s: z.number(),
});

export const ErrorFrame = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("error"),
  message: z.string(),
  cause: z.string().optional(),
});

export const ViewSavedFrame = z.object({
  v: z.literal(PROTOCOL_VERSION),
  kind: z.literal("view_saved"),
  view_id: z.string(),
  label: z.string(),
});

export const ServerFrame = z.discriminatedUnion("kind", [
  StateFrame,
  HelloFrame,
  HeartbeatFrame,
  ErrorFrame,
  ViewSavedFrame,
]);
export type ServerFrame = z.infer<typeof ServerFrame>;

/** Parse an incoming text frame; returns null for frames we cannot use. */
export function parseServerFrame(text: string): ServerFrame | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  const result = ServerFrame.safeParse(raw);
  return result.success ? result.data : null;
}

/** Validate an outgoing message; throws if it does not match the schema. */
export function encodeControlMessage(msg: ControlMessage): string {
  return JSON.stringify(ControlMessage.parse(msg));
}
