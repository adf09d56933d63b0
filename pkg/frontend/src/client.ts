/**
 * Gateway client: owns the socket, validates every outgoing message against
 * the protocol schema, and keeps a snapshot-authoritative UI state - the
 * console never displays a config it did not receive from the gateway.
 */
import {
  ControlMessage,
  PROTOCOL_VERSION,
  ServerFrame,
  StateFrame,
  encodeControlMessage,
  parseServerFrame,
} from "./protocol.js";

/** Minimal socket surface so tests can inject a fake. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: ((ev: unknown) => void) | null;
}

export type ConnectionStatus = "connecting" | "connected" | "closed";

export interface UiState {
  status: ConnectionStatus;
  role: "controller" | "viewer" | null;
  snapshot: StateFrame | null;
  lastError: string | null;
  lastHeartbeatTick: number | null;
}

export class ConsoleClient {
  state: UiState = {
    status: "connecting",
    role: null,
    snapshot: null,
    lastError: null,
    lastHeartbeatTick: null,
  };
  onstate: ((s: UiState) => void) | null = null;
  onframe: ((f: ServerFrame) => void) | null = null;
  readonly sent: ControlMessage[] = [];

  constructor(private socket: SocketLike, private readonly jogLimitDeg = 5.0) {
    socket.onopen = () => {
      this.state.status = "connected";
      this.emit();
    };
    socket.onclose = () => {
      this.state.status = "closed";
      this.emit();
    };
    socket.onerror = () => {
      this.state.lastError = "socket error";
      this.emit();
    };
    socket.onmessage = (ev) => this.handleText(String(ev.data));
  }

  private emit() {
    if (this.onstate) this.onstate(this.state);
  }

  handleText(text: string) {
    const frame = parseServerFrame(text);
    if (frame === null) {
      // malformed or unknown frame: keep the last good state
      this.state.lastError = "unparseable frame from gateway";
      this.emit();
      return;
    }
    switch (frame.kind) {
      case "hello":
        this.state.role = frame.role;
        break;
      case "state":
        this.state.snapshot = frame;
        break;
      case "heartbeat":
        this.state.lastHeartbeatTick = frame.tick;
        break;
      case "error":
        this.state.lastError = frame.message;
        break;
      case "view_saved":
        break;
    }
    if (this.onframe) this.onframe(frame);
    this.emit();
  }

  get recovering(): boolean {
    return this.state.snapshot?.recovery != null;
  }

  private send(msg: ControlMessage) {
    this.socket.send(encodeControlMessage(msg));
    this.sent.push(msg);
  }

  /**
   * Rate-limited jog. Knob deltas are clamped to the jog limit; while a
   * recovery runs the joystick is locked out and jogs are dropped.
   */
  jog(dphi1: number, dphi2: number, dphi3 = 0, dd4 = 0): boolean {
    if (this.recovering || this.state.role !== "controller") return false;
    const clamp = (v: number) => Math.max(-this.jogLimitDeg, Math.min(this.jogLimitDeg, v));
    const msg: ControlMessage = {
      v: PROTOCOL_VERSION,
      kind: "jog",
      dphi1: clamp(dphi1),
      dphi2: clamp(dphi2),
      dphi3,
      dd4,
    };
    this.send(msg);
    return true;
  }

  saveView(label: string): boolean {
    if (this.recovering || this.state.role !== "controller") return false;
    this.send({ v: PROTOCOL_VERSION, kind: "save_view", label });
    return true;
  }

  recover(viewId: string): boolean {
    // no duplicate recover while one is active: the UI shows abort instead
    if (this.recovering || this.state.role !== "controller") return false;
    this.send({ v: PROTOCOL_VERSION, kind: "recover", view_id: viewId });
    return true;
  }

  abort(): boolean {
    if (!this.recovering || this.state.role !== "controller") return false;
    this.send({ v: PROTOCOL_VERSION, kind: "abort" });
    return true;
  }

  setCompensation(enabled: boolean): boolean {
    if (this.state.role !== "controller") return false;
    this.send({ v: PROTOCOL_VERSION, kind: "set_compensation", enabled });
    return true;
  }

  queryState() {
    this.send({ v: PROTOCOL_VERSION, kind: "query_state" });
  }

  close() {
    this.socket.close();
  }
}
