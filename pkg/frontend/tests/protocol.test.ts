/**
 * Contract tests against fixtures recorded from the real gateway:
 * - every recorded server frame parses under the console's schema;
 * - every message kind the console can emit matches a recorded message the
 *   gateway accepted (same shape, same version).
 */
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { ConsoleClient, type SocketLike } from "../src/client.js";
import { ControlMessage, ServerFrame, parseServerFrame } from "../src/protocol.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixture = (name: string) => join(here, "..", "fixtures", name);

function readJsonl(name: string): unknown[] {
  return readFileSync(fixture(name), "utf-8")
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line));
}

class FakeSocket implements SocketLike {
  sentText: string[] = [];
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: ((ev: unknown) => void) | null = null;
  send(data: string) {
    this.sentText.push(data);
  }
  close() {}
}

describe("recorded server frames", () => {
  const frames = readJsonl("server-frames.jsonl");

  it("covers the frame kinds the console relies on", () => {
    const kinds = new Set(frames.map((f) => (f as { kind: string }).kind));
    for (const k of ["hello", "state", "heartbeat", "view_saved", "error"]) {
      expect(kinds.has(k), `fixture missing ${k}`).toBe(true);
    }
  });

  it("every recorded frame validates against the schema", () => {
    for (const frame of frames) {
      const parsed = ServerFrame.safeParse(frame);
      expect(parsed.success, JSON.stringify(frame).slice(0, 120)).toBe(true);
    }
  });

  it("parseServerFrame round-trips the recorded frames", () => {
    for (const frame of frames) {
      expect(parseServerFrame(JSON.stringify(frame))).not.toBeNull();
    }
  });

  it("rejects malformed frames without throwing", () => {
    expect(parseServerFrame("{oops")).toBeNull();
    expect(parseServerFrame('{"v":1,"kind":"martian"}')).toBeNull();
  });
});

describe("UI-emitted control messages", () => {
  const accepted = readJsonl("client-messages.jsonl") as Record<string, unknown>[];

  function drive(): ControlMessage[] {
    const sock = new FakeSocket();
    const client = new ConsoleClient(sock);
    // controller hello + a settled snapshot enable the controls
    const frames = readJsonl("server-frames.jsonl") as Record<string, unknown>[];
    const hello = frames.find((f) => f.kind === "hello")!;
    const state = frames.find((f) => f.kind === "state" && (f as { recovery: unknown }).recovery === null)!;
    client.handleText(JSON.stringify(hello));
    client.handleText(JSON.stringify(state));
    client.queryState();
    client.jog(2.0, -1.0, 0.5, 0.0);
    client.saveView("contract");
    client.setCompensation(true);
    client.recover("view-1");
    // a recovery-active snapshot unlocks abort
    const recovering = frames.find(
      (f) => f.kind === "state" && (f as { recovery: unknown }).recovery !== null,
    )!;
    client.handleText(JSON.stringify(recovering));
    client.abort();
    return client.sent;
  }

  it("every emitted message validates against the schema", () => {
    for (const msg of drive()) {
      expect(ControlMessage.safeParse(msg).success, JSON.stringify(msg)).toBe(true);
    }
  });

  it("every emitted kind matches a gateway-accepted fixture message", () => {
    const sent = drive();
    const byKind = new Map<string, Record<string, unknown>>();
    for (const m of accepted) byKind.set(m.kind as string, m);
    for (const msg of sent) {
      const ref = byKind.get(msg.kind);
      expect(ref, `no accepted fixture for kind ${msg.kind}`).toBeDefined();
      expect(msg.v).toBe(ref!.v);
      // emitted payload keys must be a subset of the accepted fixture's keys
      // (the gateway ignores unknown extras, but the console stays minimal)
      for (const key of Object.keys(msg)) {
        expect(Object.keys(ref!), `${msg.kind}.${key}`).toContain(key);
      }
    }
    const sentKinds = new Set(sent.map((m) => m.kind));
    for (const k of ["jog", "save_view", "recover", "abort", "set_compensation", "query_state"]) {
      expect(sentKinds.has(k as ControlMessage["kind"]), `console never emitted ${k}`).toBe(true);
    }
  });
});
