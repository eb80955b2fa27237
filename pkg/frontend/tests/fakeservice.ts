import type { WireBox } from "../src/types";

export interface RecordedRequest {
  method: string;
  path: string;
  query: URLSearchParams;
  body: any;
}

/** Scripted stand-in for the annotation service. It deliberately does NOT
 * reproduce the real engine's math: responses perturb geometry in ways a
 * client-side prediction could never guess (auto height, value rounding),
 * so an echo test passing proves the UI renders server responses verbatim
 * rather than its own arithmetic. */
export class FakeService {
  requests: RecordedRequest[] = [];
  boxes = new Map<number, WireBox>();
  nextTrack = 0;
  logLength = 0;
  saveCount = 0;
  /** forced error for the next matching route, e.g. {status: 409, detail} */
  failNext: { status: number; detail: string } | null = null;

  readonly fetch = async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, "http://fake.local");
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    this.requests.push({ method, path: url.pathname, query: url.searchParams, body });
    return this.route(method, url.pathname, body);
  };

  get lastRequest(): RecordedRequest {
    return this.requests[this.requests.length - 1];
  }

  private json(payload: unknown, status = 200): Response {
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private fail(): Response | null {
    if (!this.failNext) return null;
    const { status, detail } = this.failNext;
    this.failNext = null;
    return this.json({ detail }, status);
  }

  private mutation(box: WireBox): Response {
    this.boxes.set(box.track_id, box);
    this.logLength += 1;
    return this.json({ box, log_length: this.logLength });
  }

  private route(method: string, path: string, body: any): Response {
    if (path === "/sequences" && method === "GET") {
      return this.json([{ id: "seq", frame_count: 3, annotation_count: 0 }]);
    }
    if (path.endsWith("/session")) {
      return this.json({ token: "tok", sequence_id: "seq", log_length: this.logLength });
    }
    if (/\/frames\/\d+$/.test(path) && method === "GET") {
      const frame = Number(path.split("/").pop());
      return this.json({
        sequence_id: "seq",
        frame,
        calibration: { p_rect: [], r_rect: [], t_velo_cam: [] },
        cloud_url: `${path}/cloud`,
        image_url: null,
        boxes: [...this.boxes.values()],
      });
    }
    if (path.endsWith("/cloud")) {
      return new Response(new Float32Array([1, 0, 0, 0.5]).buffer, { status: 200 });
    }
    if (path.endsWith("/frustum")) {
      const forced = this.fail();
      if (forced) return forced;
      return this.json({
        indices: [2, 5, 8], count: 3,
        depth_min: body.u_min, depth_max: body.u_max,   // echoes, not physics
      });
    }
    if (path.endsWith("/boxes") && method === "POST") {
      const forced = this.fail();
      if (forced) return forced;
      // server-side auto height: values the client cannot predict
      const box: WireBox = {
        frame: Number(path.split("/")[4]),
        track_id: this.nextTrack++,
        center: [body.center[0], body.center[1], 0.777],
        size: [body.length, body.width, 1.234],
        yaw: body.yaw,
        category: body.category,
        height_locked: false,
        height_defaulted: true,
      };
      return this.mutation(box);
    }
    if (/\/boxes\/\d+$/.test(path) && method === "PATCH") {
      const forced = this.fail();
      if (forced) return forced;
      const trackId = Number(path.split("/").pop());
      const previous = this.boxes.get(trackId)!;
      const box: WireBox = structuredClone(previous);
      if (body.action === "shift") {
        // deliberate server-side snap the client must not anticipate
        box.center = [
          Math.round((box.center[0] + body.dx) * 100) / 100,
          Math.round((box.center[1] + body.dy) * 100) / 100,
          box.center[2],
        ];
      } else if (body.action === "rotate") {
        box.yaw += body.dtheta;
      } else if (body.action === "view_edit" || body.action === "resize_bev") {
        box.size = [box.size[0], box.size[1], box.size[2] + 0.001];
      } else if (body.action === "lock") {
        box.height_locked = body.locked;
      }
      return this.mutation(box);
    }
    if (/\/boxes\/\d+$/.test(path) && method === "DELETE") {
      const trackId = Number(path.split("/").pop());
      this.boxes.delete(trackId);
      this.logLength += 1;
      return this.json({ deleted: trackId, log_length: this.logLength });
    }
    if (path.endsWith("/projection")) {
      const forced = this.fail();
      if (forced) return forced;
      return this.json({
        points: [[10, 20, 5], [30, 20, 5], [30, 40, 5], [10, 40, 5],
                 [12, 18, 6], [28, 18, 6], [28, 38, 6], null],
        hull: [10, 18, 30, 40],
        behind_count: 1,
      });
    }
    if (path.endsWith("/transfer")) {
      const forced = this.fail();
      if (forced) return forced;
      const copied: WireBox[] = [{
        frame: body.to, track_id: 41,
        center: [9, 9, 0.9], size: [4, 2, 1.5], yaw: 0.3,
        category: "Car", height_locked: true, height_defaulted: false,
      }];
      for (const box of copied) this.boxes.set(box.track_id, box);
      this.logLength += 1 + copied.length;
      return this.json({ copied, conflicts: [7], log_length: this.logLength });
    }
    if (path.endsWith("/transfer_object")) {
      const source = this.boxes.get(body.source_track_id)!;
      const box: WireBox = {
        ...structuredClone(source),
        track_id: this.nextTrack++,
        center: [body.target[0], body.target[1], source.center[2]],
      };
      this.boxes.set(box.track_id, box);
      this.logLength += 1;
      return this.json({ box, log_length: this.logLength });
    }
    if (path.endsWith("/save")) {
      this.saveCount += 1;
      return this.json({ path: "/tmp/fake.session.json" });
    }
    return this.json({ detail: `unhandled ${method} ${path}` }, 500);
  }
}
