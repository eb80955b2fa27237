import type {
  BoxAction,
  CreateBoxParams,
  FrameBundle,
  FrustumResponse,
  MutationResponse,
  ProjectionResponse,
  SequenceSummary,
  TransferResponse,
  WireBox,
} from "./types";

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed wrapper over the annotation service. The client never caches
 * or derives annotation state; callers feed responses into the store. */
export class ApiClient {
  private token: string | null = null;

  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const url = new URL(this.base + path, "http://placeholder.local");
    if (this.token && method !== "GET") {
      url.searchParams.set("token", this.token);
    }
    const target = this.base.startsWith("http")
      ? url.toString()
      : url.pathname + url.search;
    const resp = await this.fetchFn(target, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const parsed = await resp.json();
        detail = parsed.detail ?? JSON.stringify(parsed);
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  async sequences(): Promise<SequenceSummary[]> {
    return this.request("GET", "/sequences");
  }

  async openSession(sequenceId: string): Promise<string> {
    const resp = await this.request<{ token: string }>(
      "POST", `/sequences/${sequenceId}/session`);
    this.token = resp.token;
    return resp.token;
  }

  async frame(sequenceId: string, frame: number): Promise<FrameBundle> {
    return this.request("GET", `/sequences/${sequenceId}/frames/${frame}`);
  }

  async cloud(sequenceId: string, frame: number): Promise<ArrayBuffer> {
    const resp = await this.fetchFn(
      `${this.base}/sequences/${sequenceId}/frames/${frame}/cloud`, { method: "GET" });
    if (!resp.ok) {
      throw new ApiError(resp.status, resp.statusText);
    }
    return resp.arrayBuffer();
  }

  imageUrl(sequenceId: string, frame: number): string {
    return `${this.base}/sequences/${sequenceId}/frames/${frame}/image`;
  }

  async frustum(
    sequenceId: string, frame: number,
    rect: { u_min: number; v_min: number; u_max: number; v_max: number },
  ): Promise<FrustumResponse> {
    return this.request("POST", `/sequences/${sequenceId}/frames/${frame}/frustum`, rect);
  }

  async createBox(
    sequenceId: string, frame: number, params: CreateBoxParams,
  ): Promise<MutationResponse> {
    return this.request("POST", `/sequences/${sequenceId}/frames/${frame}/boxes`, params);
  }

  async mutateBox(
    sequenceId: string, frame: number, trackId: number, action: BoxAction,
  ): Promise<MutationResponse> {
    return this.request(
      "PATCH", `/sequences/${sequenceId}/frames/${frame}/boxes/${trackId}`, action);
  }

  async deleteBox(sequenceId: string, frame: number, trackId: number): Promise<void> {
    await this.request("DELETE", `/sequences/${sequenceId}/frames/${frame}/boxes/${trackId}`);
  }

  async projection(
    sequenceId: string, frame: number, trackId: number,
  ): Promise<ProjectionResponse> {
    return this.request(
      "GET", `/sequences/${sequenceId}/frames/${frame}/boxes/${trackId}/projection`);
  }

  async transferFrame(
    sequenceId: string, from: number, to: number,
  ): Promise<TransferResponse> {
    return this.request("POST", `/sequences/${sequenceId}/transfer`, { from, to });
  }

  async transferObject(
    sequenceId: string, frame: number, sourceTrackId: number,
    target: [number, number],
  ): Promise<{ box: WireBox; log_length: number }> {
    return this.request("POST", `/sequences/${sequenceId}/transfer_object`, {
      frame, source_track_id: sourceTrackId, target,
    });
  }

  async save(sequenceId: string): Promise<{ path: string }> {
    return this.request("POST", `/sequences/${sequenceId}/save`);
  }
}
