/**
 * Telemetry plots fed by the gateway's tab-separated tables (the CLI writes
 * the same format, so plots and batch outputs share fixtures) and by the live
 * snapshot stream.
 */
import uPlot from "uplot";

export interface Table {
  columns: string[];
  rows: number[][];
}

/** Parse a gateway TSV table (header row + numeric rows). */
export function parseTsv(text: string): Table {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length < 1) throw new Error("empty table");
  const columns = lines[0].split("\t");
  const rows = lines.slice(1).map((line) => line.split("\t").map(Number));
  for (const r of rows) {
    if (r.length !== columns.length || r.some((v) => Number.isNaN(v))) {
      throw new Error("malformed table row");
    }
  }
  return { columns, rows };
}

export function column(table: Table, name: string): number[] {
  const i = table.columns.indexOf(name);
  if (i < 0) throw new Error(`no column ${name}`);
  return table.rows.map((r) => r[i]);
}

/** Knob traces (phi1/phi2 against spin angle) from a spin trajectory table. */
export function knobTracePlot(el: HTMLElement, table: Table, title: string): uPlot {
  const data: uPlot.AlignedData = [
    column(table, "psi_deg"),
    column(table, "phi1"),
    column(table, "phi2"),
  ];
  return new uPlot(
    {
      title,
      width: el.clientWidth || 480,
      height: 220,
      scales: { x: { time: false } },
      series: [
        { label: "psi (deg)" },
        { label: "phi1", stroke: "#c33" },
        { label: "phi2", stroke: "#36c" },
      ],
    },
    data,
    el,
  );
}

/** Live rolling series (e.g. recovery error) appended sample by sample. */
export class RollingSeries {
  readonly t: number[] = [];
  readonly v: number[] = [];
  private plot: uPlot | null = null;

  constructor(private readonly capacity = 600) {}

  attach(el: HTMLElement, label: string) {
    this.plot = new uPlot(
      {
        width: el.clientWidth || 480,
        height: 180,
        scales: { x: { time: false } },
        series: [{ label: "tick" }, { label, stroke: "#383" }],
      },
      [[], []],
      el,
    );
  }

  push(t: number, v: number) {
    this.t.push(t);
    this.v.push(v);
    if (this.t.length > this.capacity) {
      this.t.shift();
      this.v.shift();
    }
    this.plot?.setData([this.t, this.v]);
  }
}
