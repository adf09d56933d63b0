import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { ConsoleClient, type SocketLike } from "../src/client.js";

const here = dirname(fileURLToPath(import.meta.url));
const frames = readFileSync(join(here, "..", "fixtures", "server-frames.jsonl"), "utf-8")
  .trim()
  .split("\n")
  .map((l) => JSON.parse(l) as Record<string, unknown>);

const hello = JSON.stringify(frames.find((f) => f.kind === "hello"));
const settled = JSON.stringify(
  frames.find((f) => f.kind === "state" && f.recovery === null),
);
const recovering = JSON.stringify(
  frames.find((f) => f.kind === "state" && f.recovery !== null),
);

class FakeSocket implements SocketLike {
  sentText: string[] = [];
  closed = false;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: ((ev: unknown) => void) | null = null;
  send(data: string) {
    this.sentText.push(data);
  }
  close() {
    this.closed = true;
  }
}

function connected(): [ConsoleClient, FakeSocket] {
  const sock = new FakeSocket();
  const client = new ConsoleClient(sock);
  sock.onopen?.();
  client.handleText(hello);
  client.handleText(settled);
  return [client, sock];
}

describe("snapshot-authoritative state", () => {
  it("renders only received snapshots, never dead reckoning", () => {
    const [client] = connected();
    const before = client.state.snapshot!.config;
    client.jog(5, 0);
    // sending a jog must not change the displayed config
    expect(client.state.snapshot!.config).toEqual(before);
  });

  it("keeps the last good snapshot on malformed frames", () => {
    const [client] = connected();
    const snap = client.state.snapshot;
    client.handleText("garbage{{{");
    expect(client.state.snapshot).toBe(snap);
    expect(client.state.lastError).toContain("unparseable");
  });

  it("tracks heartbeat and error frames", () => {
    const [client] = connected();
    client.handleText(JSON.stringify(frames.find((f) => f.kind === "heartbeat")));
    expect(client.state.lastHeartbeatTick).not.toBeNull();
    client.handleText(JSON.stringify(frames.find((f) => f.kind === "error")));
    expect(client.state.lastError).toBeTruthy();
  });
});

describe("actuation gating", () => {
  it("does not jog before the controller hello", () => {
    const sock = new FakeSocket();
    const client = new ConsoleClient(sock);
    expect(client.jog(1, 0)).toBe(false);
    expect(sock.sentText).toHaveLength(0);
  });

  it("clamps jogs to the rate limit", () => {
    const [client, sock] = connected();
    expect(client.jog(12, -9)).toBe(true);
    const msg = JSON.parse(sock.sentText.at(-1)!);
    expect(msg.dphi1).toBe(5);
    expect(msg.dphi2).toBe(-5);
  });

  it("locks out jog/save/recover during recovery, allows abort", () => {
    const [client, sock] = connected();
    client.handleText(recovering);
    expect(client.recovering).toBe(true);
    expect(client.jog(1, 0)).toBe(false);
    expect(client.saveView("x")).toBe(false);
    expect(client.recover("view-1")).toBe(false);
    expect(client.abort()).toBe(true);
    const last = JSON.parse(sock.sentText.at(-1)!);
    expect(last.kind).toBe("abort");
  });

  it("abort is a no-op when nothing recovers", () => {
    const [client, sock] = connected();
    const n = sock.sentText.length;
    expect(client.abort()).toBe(false);
    expect(sock.sentText.length).toBe(n);
  });

  it("viewer role cannot actuate", () => {
    const sock = new FakeSocket();
    const client = new ConsoleClient(sock);
    client.handleText(JSON.stringify({ v: 1, kind: "hello", role: "viewer", session_id: "s" }));
    client.handleText(settled);
    expect(client.jog(1, 0)).toBe(false);
    expect(client.saveView("x")).toBe(false);
    expect(client.setCompensation(true)).toBe(false);
  });
});
