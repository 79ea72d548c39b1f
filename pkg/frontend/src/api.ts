/** HTTP client for the /v1 editing service. */

import type { ConditionSummary, EditScript, GenerateResult, ServiceClient } from "./types.js";

export class HttpServiceClient implements ServiceClient {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async extract(image: Blob, seg?: Blob): Promise<ConditionSummary> {
    const form = new FormData();
    form.append("image", image, "image.png");
    if (seg) {
      form.append("seg", seg, "seg.png");
    }
    const response = await fetch(this.url("/v1/extract"), {
      method: "POST",
      body: form,
    });
    if (!response.ok) {
      throw new Error(`extract failed: ${response.status}`);
    }
    return (await response.json()) as ConditionSummary;
  }

  async edit(sessionId: string, script: EditScript): Promise<ConditionSummary> {
    const response = await fetch(this.url(`/v1/sessions/${sessionId}/edit`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(script),
    });
    if (!response.ok) {
      throw new Error(`edit failed: ${response.status}`);
    }
    return (await response.json()) as ConditionSummary;
  }

  async generate(sessionId: string): Promise<GenerateResult> {
    const response = await fetch(this.url(`/v1/sessions/${sessionId}/generate`), {
      method: "POST",
    });
    if (!response.ok) {
      throw new Error(`generate failed: ${response.status}`);
    }
    const data = new Uint8Array(await response.arrayBuffer());
    return {
      data,
      checkpointId: response.headers.get("X-Checkpoint-Id") ?? "unknown",
      latencyMs: Number(response.headers.get("X-Latency-Ms") ?? "0"),
    };
  }

  async undo(sessionId: string): Promise<ConditionSummary> {
    const response = await fetch(this.url(`/v1/sessions/${sessionId}/undo`), {
      method: "POST",
    });
    if (!response.ok) {
      throw new Error(`undo failed: ${response.status}`);
    }
    return (await response.json()) as ConditionSummary;
  }
}
