/** Stroke rasterization for the mask brush: a hard-edged circular stamp
 * dragged along the pointer path. Pure logic so it is testable headless;
 * PNG encoding is injected (canvas in the browser, a stub in tests). */

export interface StrokePoint {
  x: number;
  y: number;
}

/** Encodes a 0/1 mask into a base64 PNG the service can decode. */
export interface MaskEncoder {
  encode(mask: Uint8Array, width: number, height: number): Promise<string>;
}

function stamp(
  mask: Uint8Array,
  width: number,
  height: number,
  cx: number,
  cy: number,
  radius: number,
): void {
  const r2 = radius * radius;
  const x0 = Math.max(0, Math.floor(cx - radius));
  const x1 = Math.min(width - 1, Math.ceil(cx + radius));
  const y0 = Math.max(0, Math.floor(cy - radius));
  const y1 = Math.min(height - 1, Math.ceil(cy + radius));
  for (let y = y0; y <= y1; y++) {
    for (let x = x0; x <= x1; x++) {
      const dx = x - cx;
      const dy = y - cy;
      if (dx * dx + dy * dy <= r2) {
        mask[y * width + x] = 1;
      }
    }
  }
}

/** Rasterize a stroke path into a binary mask, stamping circles along
 * every segment at sub-pixel steps so fast drags leave no gaps. */
export function rasterizeStroke(
  path: StrokePoint[],
  radius: number,
  width: number,
  height: number,
): Uint8Array {
  const mask = new Uint8Array(width * height);
  if (path.length === 0) {
    return mask;
  }
  stamp(mask, width, height, path[0].x, path[0].y, radius);
  for (let i = 1; i < path.length; i++) {
    const a = path[i - 1];
    const b = path[i];
    const distance = Math.hypot(b.x - a.x, b.y - a.y);
    const steps = Math.max(1, Math.ceil(distance));
    for (let s = 1; s <= steps; s++) {
      const t = s / steps;
      stamp(mask, width, height, a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), radius);
    }
  }
  return mask;
}

/** Browser encoder: draw the mask on a canvas and export a PNG. */
export class CanvasMaskEncoder implements MaskEncoder {
  async encode(mask: Uint8Array, width: number, height: number): Promise<string> {
    const canvas = document.createElement("canvas");
    canvas.width = width;
    canvas.height = height;
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new Error("2d canvas context unavailable");
    }
    const image = ctx.createImageData(width, height);
    for (let i = 0; i < mask.length; i++) {
      const v = mask[i] ? 255 : 0;
      image.data[4 * i] = v;
      image.data[4 * i + 1] = v;
      image.data[4 * i + 2] = v;
      image.data[4 * i + 3] = 255;
    }
    ctx.putImageData(image, 0, 0);
    const blob: Blob = await new Promise((resolve, reject) => {
      canvas.toBlob((b) => (b ? resolve(b) : reject(new Error("toBlob failed"))), "image/png");
    });
    const bytes = new Uint8Array(await blob.arrayBuffer());
    let binary = "";
    for (const byte of bytes) {
      binary += String.fromCharCode(byte);
    }
    return btoa(binary);
  }
}
