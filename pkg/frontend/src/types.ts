/** Wire types shared with the /v1 service API. */

export type RGB = [number, number, number];

export type RowName = "hair" | "skin" | "eyes" | "lip" | "background";
export type Orientation = "horizontal" | "vertical";
export type MaskTarget = "light" | "shadow";
export type BoolOp = "AND" | "OR" | "ANDNOT";

export interface SetRowColorOp {
  op: "set_row_color";
  row: RowName;
  color: RGB;
}

export interface SliderBlendOp {
  op: "slider_blend";
  row: RowName;
  color_a: RGB;
  color_b: RGB;
  ratio: number;
  orientation: Orientation;
}

export interface StripePatternOp {
  op: "stripe_pattern";
  row: RowName;
  colors: RGB[];
}

export interface MaskBooleanOp {
  op: "mask_boolean";
  target: MaskTarget;
  bool_op: BoolOp;
  brush_png: string; // base64 PNG
}

export interface ReplaceEdgeRegionOp {
  op: "replace_edge_region";
  top: number;
  left: number;
  patch_png: string; // base64 PNG
}

export type EditOp =
  | SetRowColorOp
  | SliderBlendOp
  | StripePatternOp
  | MaskBooleanOp
  | ReplaceEdgeRegionOp;

export interface EditScript {
  ops: EditOp[];
}

export interface PaletteEntryJson {
  rgb: RGB;
  fraction: number;
}

export interface PaletteRowJson {
  name: RowName;
  orientation: string;
  entries: PaletteEntryJson[];
}

export interface ConditionSummary {
  session_id: string;
  flags: string[];
  height: number;
  width: number;
  undo_depth: number;
  channels: Record<string, string>; // channel name -> base64 PNG
  palette?: { rows: PaletteRowJson[] };
}

export interface GenerateResult {
  /** PNG bytes of the generated portrait. */
  data: Uint8Array;
  checkpointId: string;
  latencyMs: number;
}

/** Client surface of the editing service; mocked in tests. */
export interface ServiceClient {
  extract(image: Blob, seg?: Blob): Promise<ConditionSummary>;
  edit(sessionId: string, script: EditScript): Promise<ConditionSummary>;
  generate(sessionId: string): Promise<GenerateResult>;
  undo(sessionId: string): Promise<ConditionSummary>;
}
