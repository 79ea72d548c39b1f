/** Editing-session state machine.
 *
 * All condition changes flow through EditScript deltas sent to the service;
 * the UI never mutates conditions locally. Slider-driven edits are
 * debounced (300 ms default) and coalesced per window; generate responses
 * carry monotonically increasing request ids so stale results are dropped.
 */

import { rasterizeStroke, type MaskEncoder, type StrokePoint } from "./brush.js";
import type {
  ConditionSummary,
  EditOp,
  EditScript,
  GenerateResult,
  MaskTarget,
  Orientation,
  RGB,
  RowName,
  ServiceClient,
} from "./types.js";

export interface DisplayedImage {
  data: Uint8Array;
  checkpointId: string;
  stateHash: string;
  latencyMs: number;
}

export interface SessionEvents {
  onConditions?(summary: ConditionSummary): void;
  onImage?(image: DisplayedImage): void;
  onStatus?(status: string): void;
}

export interface UiSessionState {
  sessionId: string | null;
  summary: ConditionSummary | null;
  pendingOps: EditOp[];
  undoDepth: number;
  currentImage: DisplayedImage | null;
  /** One entry per displayed result: (state hash, checkpoint id). */
  imageLog: Array<{ stateHash: string; checkpointId: string }>;
}

/** FNV-1a over the canonical session state: what the inspector shows next
 * to every displayed image so results stay traceable. */
export function stateHash(summary: ConditionSummary | null): string {
  const payload = summary
    ? JSON.stringify({
        palette: summary.palette ?? null,
        undo_depth: summary.undo_depth,
        flags: summary.flags,
      })
    : "empty";
  let hash = 0x811c9dc5;
  for (let i = 0; i < payload.length; i++) {
    hash ^= payload.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash.toString(16).padStart(8, "0");
}

export function setRowColorOp(row: RowName, color: RGB): EditOp {
  return { op: "set_row_color", row, color };
}

export function sliderBlendOp(
  row: RowName,
  colorA: RGB,
  colorB: RGB,
  ratio: number,
  orientation: Orientation = "horizontal",
): EditOp {
  return { op: "slider_blend", row, color_a: colorA, color_b: colorB, ratio, orientation };
}

export function maskBooleanOp(
  target: MaskTarget,
  mode: "add" | "erase",
  brushPng: string,
): EditOp {
  return {
    op: "mask_boolean",
    target,
    bool_op: mode === "add" ? "OR" : "ANDNOT",
    brush_png: brushPng,
  };
}

interface Timers {
  set(fn: () => void, ms: number): ReturnType<typeof setTimeout>;
  clear(handle: ReturnType<typeof setTimeout>): void;
}

const realTimers: Timers = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (handle) => clearTimeout(handle),
};

export interface StudioSessionOptions {
  debounceMs?: number;
  timers?: Timers;
}

/** Two deltas coalesce when a newer one fully supersedes the older within
 * one debounce window (same row for palette ops, same target+mode for
 * brush strokes would still OR differently, so only palette ops coalesce). */
function supersedes(next: EditOp, prev: EditOp): boolean {
  if (next.op === "set_row_color" || next.op === "slider_blend") {
    return (
      (prev.op === "set_row_color" || prev.op === "slider_blend") &&
      prev.row === next.row
    );
  }
  return false;
}

export class StudioSession {
  readonly state: UiSessionState = {
    sessionId: null,
    summary: null,
    pendingOps: [],
    undoDepth: 0,
    currentImage: null,
    imageLog: [],
  };

  private readonly debounceMs: number;
  private readonly timers: Timers;
  private flushHandle: ReturnType<typeof setTimeout> | null = null;
  private nextRequestId = 0;
  private latestDisplayedId = -1;
  private flushing = false;

  constructor(
    private readonly client: ServiceClient,
    private readonly encoder: MaskEncoder,
    private readonly events: SessionEvents = {},
    options: StudioSessionOptions = {},
  ) {
    this.debounceMs = options.debounceMs ?? 300;
    this.timers = options.timers ?? realTimers;
  }

  async open(image: Blob, seg?: Blob): Promise<ConditionSummary> {
    const summary = await this.client.extract(image, seg);
    this.state.sessionId = summary.session_id;
    this.applySummary(summary);
    this.events.onStatus?.("session ready");
    return summary;
  }

  /** Color picked on a palette row. */
  pickColor(row: RowName, color: RGB): void {
    this.queueEdit(setRowColorOp(row, color));
  }

  /** Slider drag on a palette row; rapid drags coalesce per window. */
  dragSlider(
    row: RowName,
    colorA: RGB,
    colorB: RGB,
    ratio: number,
    orientation: Orientation = "horizontal",
  ): void {
    this.queueEdit(sliderBlendOp(row, colorA, colorB, ratio, orientation));
  }

  /** Brush stroke on the light or shadow mask. */
  async brushStroke(
    path: StrokePoint[],
    target: MaskTarget,
    mode: "add" | "erase",
    radius: number,
  ): Promise<void> {
    const summary = this.state.summary;
    if (!summary) {
      throw new Error("no open session");
    }
    const mask = rasterizeStroke(path, radius, summary.width, summary.height);
    const brushPng = await this.encoder.encode(mask, summary.width, summary.height);
    this.queueEdit(maskBooleanOp(target, mode, brushPng));
  }

  async undo(): Promise<void> {
    if (!this.state.sessionId) {
      return;
    }
    const summary = await this.client.undo(this.state.sessionId);
    this.applySummary(summary);
    await this.requestGenerate();
  }

  /** Queue a delta and (re)arm the debounce timer. */
  queueEdit(op: EditOp): void {
    const pending = this.state.pendingOps;
    if (pending.length > 0 && supersedes(op, pending[pending.length - 1])) {
      pending[pending.length - 1] = op;
    } else {
      pending.push(op);
    }
    if (this.flushHandle !== null) {
      this.timers.clear(this.flushHandle);
    }
    this.flushHandle = this.timers.set(() => {
      this.flushHandle = null;
      void this.flush();
    }, this.debounceMs);
  }

  /** Send pending ops as one script, then regenerate. */
  async flush(): Promise<void> {
    if (this.flushing || this.state.pendingOps.length === 0 || !this.state.sessionId) {
      return;
    }
    const script: EditScript = { ops: this.state.pendingOps.splice(0) };
    this.flushing = true;
    try {
      const summary = await this.client.edit(this.state.sessionId, script);
      this.applySummary(summary);
    } catch (error) {
      // offline or rejected: restore the ops so the next interaction retries
      this.state.pendingOps.unshift(...script.ops);
      this.flushing = false;
      this.events.onStatus?.(`edit queued (service unreachable): ${String(error)}`);
      return;
    }
    this.flushing = false;
    await this.requestGenerate();
  }

  /** Issue a generate with a fresh id; stale responses are discarded. */
  async requestGenerate(): Promise<void> {
    if (!this.state.sessionId) {
      return;
    }
    const requestId = this.nextRequestId++;
    const hash = stateHash(this.state.summary);
    let result: GenerateResult;
    try {
      result = await this.client.generate(this.state.sessionId);
    } catch (error) {
      this.events.onStatus?.(`generate failed: ${String(error)}`);
      return;
    }
    if (requestId < this.latestDisplayedId) {
      return; // superseded while in flight
    }
    this.latestDisplayedId = requestId;
    const image: DisplayedImage = {
      data: result.data,
      checkpointId: result.checkpointId,
      stateHash: hash,
      latencyMs: result.latencyMs,
    };
    this.state.currentImage = image;
    this.state.imageLog.push({ stateHash: hash, checkpointId: image.checkpointId });
    this.events.onImage?.(image);
  }

  private applySummary(summary: ConditionSummary): void {
    this.state.summary = summary;
    this.state.undoDepth = summary.undo_depth;
    this.events.onConditions?.(summary);
  }
}
