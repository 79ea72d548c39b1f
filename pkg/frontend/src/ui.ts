/** DOM wiring: palette panel, sliders, mask brush, result canvas,
 * inspector. All state changes go through the StudioSession. */

import { CanvasMaskEncoder, type StrokePoint } from "./brush.js";
import { HttpServiceClient } from "./api.js";
import { StudioSession, type DisplayedImage } from "./session.js";
import type { ConditionSummary, MaskTarget, RGB, RowName } from "./types.js";

const ROW_NAMES: RowName[] = ["hair", "skin", "eyes", "lip", "background"];

function hexToRgb(hex: string): RGB {
  return [
    parseInt(hex.slice(1, 3), 16),
    parseInt(hex.slice(3, 5), 16),
    parseInt(hex.slice(5, 7), 16),
  ];
}

function element<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  parent: HTMLElement,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (text) {
    node.textContent = text;
  }
  parent.appendChild(node);
  return node;
}

function pngSrc(base64: string): string {
  return `data:image/png;base64,${base64}`;
}

export class StudioApp {
  private readonly session: StudioSession;
  private readonly root: HTMLElement;
  private resultCanvas!: HTMLCanvasElement;
  private brushCanvas!: HTMLCanvasElement;
  private previews!: HTMLElement;
  private inspector!: HTMLElement;
  private statusLine!: HTMLElement;
  private brushTarget: MaskTarget = "light";
  private brushMode: "add" | "erase" = "add";
  private brushRadius = 4;
  private stroke: StrokePoint[] = [];

  constructor(root: HTMLElement, baseUrl = "") {
    this.root = root;
    this.session = new StudioSession(
      new HttpServiceClient(baseUrl),
      new CanvasMaskEncoder(),
      {
        onConditions: (summary) => this.renderConditions(summary),
        onImage: (image) => this.renderResult(image),
        onStatus: (status) => {
          this.statusLine.textContent = status;
        },
      },
    );
    this.build();
  }

  private build(): void {
    const bar = element("div", this.root);
    bar.className = "toolbar";
    const imageInput = element("input", bar);
    imageInput.type = "file";
    imageInput.accept = "image/png";
    const segInput = element("input", bar);
    segInput.type = "file";
    segInput.accept = "image/png";
    segInput.title = "optional segmentation label map";
    const openButton = element("button", bar, "Load portrait");
    openButton.addEventListener("click", () => {
      const image = imageInput.files?.[0];
      if (!image) {
        this.statusLine.textContent = "choose a portrait PNG first";
        return;
      }
      void this.session
        .open(image, segInput.files?.[0] ?? undefined)
        .then(() => this.session.requestGenerate());
    });
    const undoButton = element("button", bar, "Undo");
    undoButton.addEventListener("click", () => void this.session.undo());
    this.statusLine = element("span", bar, "no session");
    this.statusLine.className = "status";

    const main = element("div", this.root);
    main.className = "columns";
    const palettePanel = element("div", main);
    palettePanel.className = "palette-panel";
    this.buildPaletteRows(palettePanel);
    this.buildBrushControls(palettePanel);

    const canvases = element("div", main);
    canvases.className = "canvases";
    this.previews = element("div", canvases);
    this.previews.className = "previews";
    this.resultCanvas = element("canvas", canvases);
    this.resultCanvas.className = "result";
    this.brushCanvas = element("canvas", canvases);
    this.brushCanvas.className = "brush-layer";
    this.bindBrushEvents();
    this.inspector = element("div", canvases);
    this.inspector.className = "inspector";
  }

  private buildPaletteRows(panel: HTMLElement): void {
    for (const row of ROW_NAMES) {
      const line = element("div", panel);
      line.className = "palette-row";
      element("label", line, row);
      const pick = element("input", line);
      pick.type = "color";
      pick.addEventListener("input", () => {
        this.session.pickColor(row, hexToRgb(pick.value));
      });
      const second = element("input", line);
      second.type = "color";
      second.value = "#0000ff";
      const slider = element("input", line);
      slider.type = "range";
      slider.min = "0";
      slider.max = "100";
      slider.value = "0";
      const vertical = element("input", line);
      vertical.type = "checkbox";
      vertical.title = "vertical slider";
      const sendSlider = () => {
        this.session.dragSlider(
          row,
          hexToRgb(pick.value),
          hexToRgb(second.value),
          Number(slider.value) / 100,
          vertical.checked ? "vertical" : "horizontal",
        );
      };
      slider.addEventListener("input", sendSlider);
      vertical.addEventListener("change", sendSlider);
    }
  }

  private buildBrushControls(panel: HTMLElement): void {
    const line = element("div", panel);
    line.className = "brush-controls";
    element("label", line, "brush");
    const target = element("select", line);
    for (const value of ["light", "shadow"]) {
      const opt = element("option", target, value);
      opt.value = value;
    }
    target.addEventListener("change", () => {
      this.brushTarget = target.value as MaskTarget;
    });
    const mode = element("select", line);
    for (const value of ["add", "erase"]) {
      const opt = element("option", mode, value);
      opt.value = value;
    }
    mode.addEventListener("change", () => {
      this.brushMode = mode.value as "add" | "erase";
    });
    const radius = element("input", line);
    radius.type = "range";
    radius.min = "1";
    radius.max = "16";
    radius.value = String(this.brushRadius);
    radius.addEventListener("input", () => {
      this.brushRadius = Number(radius.value);
    });
  }

  private bindBrushEvents(): void {
    const canvas = this.brushCanvas;
    const position = (event: PointerEvent): StrokePoint => {
      const rect = canvas.getBoundingClientRect();
      return {
        x: ((event.clientX - rect.left) / rect.width) * canvas.width,
        y: ((event.clientY - rect.top) / rect.height) * canvas.height,
      };
    };
    canvas.addEventListener("pointerdown", (event) => {
      this.stroke = [position(event)];
      canvas.setPointerCapture(event.pointerId);
    });
    canvas.addEventListener("pointermove", (event) => {
      if (this.stroke.length > 0) {
        this.stroke.push(position(event));
      }
    });
    canvas.addEventListener("pointerup", () => {
      if (this.stroke.length > 0) {
        void this.session.brushStroke(
          this.stroke,
          this.brushTarget,
          this.brushMode,
          this.brushRadius,
        );
        this.stroke = [];
      }
    });
  }

  private renderConditions(summary: ConditionSummary): void {
    this.previews.replaceChildren();
    for (const [name, png] of Object.entries(summary.channels)) {
      const figure = element("figure", this.previews);
      const img = element("img", figure);
      img.src = pngSrc(png);
      img.width = 96;
      element("figcaption", figure, name);
    }
    this.resultCanvas.width = summary.width;
    this.resultCanvas.height = summary.height;
    this.brushCanvas.width = summary.width;
    this.brushCanvas.height = summary.height;
  }

  private renderResult(image: DisplayedImage): void {
    const blob = new Blob([image.data.buffer as ArrayBuffer], { type: "image/png" });
    const url = URL.createObjectURL(blob);
    const img = new Image();
    img.onload = () => {
      const ctx = this.resultCanvas.getContext("2d");
      ctx?.drawImage(img, 0, 0);
      URL.revokeObjectURL(url);
    };
    img.src = url;
    this.inspector.textContent =
      `state ${image.stateHash} | checkpoint ${image.checkpointId} | ` +
      `${image.latencyMs.toFixed(1)} ms`;
  }
}
