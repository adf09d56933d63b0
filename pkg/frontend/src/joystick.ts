/**
 * Virtual joystick: a 2-axis knob pad plus roll / translate sliders.
 * Deflections live in [-1, 1] per axis; at every UI tick the active
 * deflection turns into one rate-limited jog message.
 */
import type { ConsoleClient } from "./client.js";

export class JoystickModel {
  x = 0; // anterior-posterior knob axis
  y = 0; // right-left knob axis
  roll = 0;
  translate = 0;

  constructor(private readonly maxStepDeg = 2.0) {}

  setKnob(x: number, y: number) {
    this.x = Math.max(-1, Math.min(1, x));
    this.y = Math.max(-1, Math.min(1, y));
  }

  setRoll(v: number) {
    this.roll = Math.max(-1, Math.min(1, v));
  }

  setTranslate(v: number) {
    this.translate = Math.max(-1, Math.min(1, v));
  }

  get active(): boolean {
    return this.x !== 0 || this.y !== 0 || this.roll !== 0 || this.translate !== 0;
  }

  /** Jog deltas for one UI tick; magnitudes never exceed maxStepDeg. */
  step(): { dphi1: number; dphi2: number; dphi3: number; dd4: number } {
    return {
      dphi1: this.x * this.maxStepDeg,
      dphi2: this.y * this.maxStepDeg,
      dphi3: this.roll * this.maxStepDeg,
      dd4: this.translate * this.maxStepDeg,
    };
  }
}

/** Pump the joystick into the client at a fixed tick; returns a stop fn. */
export function startJoystickPump(
  joystick: JoystickModel,
  client: ConsoleClient,
  tickHz = 20,
  timer: { setInterval: typeof setInterval; clearInterval: typeof clearInterval } = globalThis,
): () => void {
  const id = timer.setInterval(() => {
    if (!joystick.active) return;
    const d = joystick.step();
    client.jog(d.dphi1, d.dphi2, d.dphi3, d.dd4);
  }, 1000 / tickHz);
  return () => timer.clearInterval(id);
}

/** Bind pointer events of a square pad element to the knob axes. */
export function bindPad(pad: HTMLElement, joystick: JoystickModel, knob?: HTMLElement) {
  let active = false;

  const update = (ev: PointerEvent) => {
    const rect = pad.getBoundingClientRect();
    const nx = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
    const ny = ((ev.clientY - rect.top) / rect.height) * 2 - 1;
    // screen up = anterior (+phi1), screen right = +phi2
    joystick.setKnob(-ny, nx);
    if (knob) {
      knob.style.left = `${((joystick.y + 1) / 2) * 100}%`;
      knob.style.top = `${((-joystick.x + 1) / 2) * 100}%`;
    }
  };
  const release = () => {
    active = false;
    joystick.setKnob(0, 0);
    if (knob) {
      knob.style.left = "50%";
      knob.style.top = "50%";
    }
  };

  pad.addEventListener("pointerdown", (ev) => {
    active = true;
    pad.setPointerCapture(ev.pointerId);
    update(ev);
  });
  pad.addEventListener("pointermove", (ev) => {
    if (active) update(ev);
  });
  pad.addEventListener("pointerup", release);
  pad.addEventListener("pointercancel", release);
}
