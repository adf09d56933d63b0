/**
 * Operator console entry point.
 *
 * URL parameters: ?host=127.0.0.1&port=8732&readonly=1
 * The console is snapshot-authoritative: everything on screen reflects the
 * last state frame received from the gateway.
 */
import { ConsoleClient } from "./client.js";
import { JoystickModel, bindPad, startJoystickPump } from "./joystick.js";
import { CatheterScene } from "./scene.js";
import { RollingSeries, knobTracePlot, parseTsv } from "./telemetry.js";
import type { StateFrame } from "./protocol.js";

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? window.location.hostname ?? "127.0.0.1";
const port = params.get("port") ?? "8732";
const readonly = params.get("readonly") === "1";

const el = (id: string) => document.getElementById(id) as HTMLElement;

const banner = el("banner");
const viewsBox = el("views");
const statusBox = el("status");

const ws = new WebSocket(`ws://${host}:${port}/ws`);
const client = new ConsoleClient(ws as unknown as import("./client.js").SocketLike);
const joystick = new JoystickModel(2.0);
const scene = new CatheterScene(el("scene"));
const errorSeries = new RollingSeries(600);
errorSeries.attach(el("error-plot"), "tip offset vs model (mm)");

let lastRenderedTick = -1;

function showBanner(text: string, kind: "error" | "info") {
  banner.textContent = text;
  banner.className = kind;
  banner.style.display = text ? "block" : "none";
}

function renderViews(snapshot: StateFrame) {
  viewsBox.innerHTML = "";
  for (const view of snapshot.views) {
    const row = document.createElement("div");
    row.className = "view-row";
    const name = document.createElement("span");
    name.textContent = `${view.id} ${view.label}`;
    const btn = document.createElement("button");
    btn.textContent = "recover";
    btn.disabled = readonly || client.recovering;
    btn.onclick = () => {
      if (client.recovering) {
        if (window.confirm("A recovery is running. Abort it?")) client.abort();
        return;
      }
      client.recover(view.id);
    };
    row.append(name, btn);
    viewsBox.appendChild(row);
  }
}

client.onstate = (state) => {
  if (state.lastError) showBanner(state.lastError, "error");
  if (state.status === "closed") showBanner("disconnected - refresh to reconnect", "error");
  if (state.role === "viewer" && !readonly) showBanner("read-only: another controller is connected", "info");

  const snap = state.snapshot;
  if (!snap || snap.tick === lastRenderedTick) return;
  lastRenderedTick = snap.tick;
  scene.update(snap);
  const dx = snap.plant_tip.position[0] - snap.tip.position[0];
  const dy = snap.plant_tip.position[1] - snap.tip.position[1];
  const dz = snap.plant_tip.position[2] - snap.tip.position[2];
  errorSeries.push(snap.tick, Math.hypot(dx, dy, dz));
  renderViews(snap);

  const c = snap.config;
  statusBox.textContent =
    `tick ${snap.tick} | phi1 ${c.phi1.toFixed(2)} phi2 ${c.phi2.toFixed(2)} ` +
    `phi3 ${c.phi3.toFixed(2)} d4 ${c.d4.toFixed(2)} | ` +
    `roadmap ${snap.roadmap.vertices}v/${snap.roadmap.edges}e | ` +
    (snap.recovery
      ? `RECOVERING ${snap.recovery.view_id} ${snap.recovery.emitted}/${snap.recovery.total}`
      : snap.settled
        ? "settled"
        : "moving") +
    (snap.compensation.enabled ? " | compensation ON" : "");
};

if (!readonly) {
  bindPad(el("pad"), joystick, el("knob"));
  (el("roll") as HTMLInputElement).oninput = (e) =>
    joystick.setRoll(Number((e.target as HTMLInputElement).value));
  (el("translate") as HTMLInputElement).oninput = (e) =>
    joystick.setTranslate(Number((e.target as HTMLInputElement).value));
  ["roll", "translate"].forEach((id) => {
    const input = el(id) as HTMLInputElement;
    input.onpointerup = () => {
      input.value = "0";
      if (id === "roll") joystick.setRoll(0);
      else joystick.setTranslate(0);
    };
  });
  (el("save-view") as HTMLButtonElement).onclick = () => {
    const label = (el("view-label") as HTMLInputElement).value || "view";
    client.saveView(label);
  };
  (el("compensation") as HTMLInputElement).onchange = (e) =>
    client.setCompensation((e.target as HTMLInputElement).checked);
  startJoystickPump(joystick, client, 20);
}

// optional: load a spin trajectory table (CLI output) for the knob-trace plot
fetch("fixtures/spin-trajectory.tsv")
  .then((r) => (r.ok ? r.text() : Promise.reject()))
  .then((text) => knobTracePlot(el("trace-plot"), parseTsv(text), "spin knob traces"))
  .catch(() => {
    el("trace-plot").textContent = "no spin fixture found";
  });

function animate() {
  scene.frame();
  requestAnimationFrame(animate);
}
animate();
