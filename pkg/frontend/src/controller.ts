import { ApiClient, ApiError } from "./api";
import {
  bevDrawToCreateParams,
  dragBevShiftAction,
  dragBoxAction,
  dragEdgeAction,
  imageRectToFrustum,
  rotateAction,
  type ProjectedEdge,
  type ProjectedView,
} from "./gestures";
import { MutationQueue } from "./queue";
import { AnnotationStore } from "./store";
import type { BoxAction, WireBox } from "./types";

/** Ties gestures, API and store together. Every mutation goes through the
 * queue (one in flight), and every response is fed verbatim into the store,
 * which is what the views render: the controller never predicts geometry. */
export class AnnotationController {
  cloud: Float32Array | null = null;
  onCloud: ((cloud: Float32Array) => void) | null = null;

  constructor(
    readonly api: ApiClient,
    readonly store: AnnotationStore,
    readonly queue: MutationQueue = new MutationQueue(),
  ) {}

  private mutate(action: BoxAction): Promise<WireBox | null> {
    const { sequenceId, frame, selected } = this.store.state;
    if (sequenceId === null || selected === null) {
      return Promise.resolve(null);
    }
    return this.queue.submit(async () => {
      try {
        const resp = await this.api.mutateBox(sequenceId, frame, selected, action);
        return this.store.applyMutation(resp);
      } catch (err) {
        if (err instanceof ApiError) {
          this.store.setNotice(err.detail);
          return null;
        }
        throw err;
      }
    });
  }

  // -- session / frames -------------------------------------------------------

  async loadSequence(sequenceId: string): Promise<void> {
    const summaries = await this.api.sequences();
    const summary = summaries.find((s) => s.id === sequenceId);
    if (!summary) {
      this.store.setNotice(`unknown sequence ${sequenceId}`);
      return;
    }
    await this.api.openSession(sequenceId);
    await this.loadFrame(sequenceId, 0, summary.frame_count);
  }

  async loadFrame(sequenceId: string, frame: number, frameCount?: number): Promise<void> {
    const bundle = await this.api.frame(sequenceId, frame);
    this.store.applyFrame(bundle, frameCount ?? this.store.state.frameCount);
    const raw = await this.api.cloud(sequenceId, frame);
    this.cloud = new Float32Array(raw);
    if (this.onCloud) {
      this.onCloud(this.cloud);
    }
  }

  /** Frame switches save first, so no work is older than the last switch. */
  async switchFrame(delta: number): Promise<void> {
    const { sequenceId, frame, frameCount, dirty } = this.store.state;
    if (sequenceId === null) return;
    const target = frame + delta;
    if (target < 0 || target >= frameCount) return;
    if (dirty) {
      await this.save();
    }
    await this.loadFrame(sequenceId, target);
  }

  // -- find --------------------------------------------------------------------

  /** Rectangle drawn on the image -> frustum highlight plus depth readout. */
  async find(x1: number, y1: number, x2: number, y2: number,
             zoom: number, panX: number, panY: number): Promise<void> {
    const { sequenceId, frame } = this.store.state;
    if (sequenceId === null) return;
    const rect = imageRectToFrustum(x1, y1, x2, y2, zoom, panX, panY);
    try {
      const resp = await this.api.frustum(sequenceId, frame, rect);
      this.store.applyFrustum(resp);
    } catch (err) {
      if (err instanceof ApiError) {
        this.store.setNotice(err.detail);
        return;
      }
      throw err;
    }
  }

  // -- localize ----------------------------------------------------------------

  /** Bird-view draw -> box creation with server-side automatic height. */
  localizeDraw(
    u1: number, v1: number, u2: number, v2: number,
    canvasToWorld: (u: number, v: number) => [number, number],
    category: string,
  ): Promise<WireBox | null> {
    const { sequenceId, frame } = this.store.state;
    if (sequenceId === null) return Promise.resolve(null);
    const params = bevDrawToCreateParams(u1, v1, u2, v2, canvasToWorld);
    return this.queue.submit(async () => {
      try {
        const resp = await this.api.createBox(sequenceId, frame, {
          ...params, category,
        });
        const box = this.store.applyMutation(resp);
        this.store.select(box.track_id);
        return box;
      } catch (err) {
        if (err instanceof ApiError) {
          this.store.setNotice(err.detail);
          return null;
        }
        throw err;
      }
    });
  }

  shiftSelected(duPixels: number, dvPixels: number, metersPerPixel: number) {
    return this.mutate(dragBevShiftAction(duPixels, dvPixels, metersPerPixel));
  }

  rotateSelected(centerU: number, centerV: number,
                 fromU: number, fromV: number, toU: number, toV: number) {
    return this.mutate(rotateAction(centerU, centerV, fromU, fromV, toU, toV));
  }

  resizeSelectedBev(edge: "Front" | "Rear" | "Left" | "Right", deltaMeters: number) {
    return this.mutate({ action: "resize_bev", edge, delta: deltaMeters });
  }

  // -- adjust ------------------------------------------------------------------

  adjustEdge(view: ProjectedView, edge: ProjectedEdge,
             outwardPixels: number, metersPerPixel: number) {
    return this.mutate(dragEdgeAction(view, edge, outwardPixels, metersPerPixel));
  }

  adjustShift(view: ProjectedView, dxPixels: number, dyPixels: number,
              metersPerPixel: number) {
    return this.mutate(dragBoxAction(view, dxPixels, dyPixels, metersPerPixel));
  }

  // -- verify ------------------------------------------------------------------

  /** Project the selected box's corners onto the image; behind-camera boxes
   * suppress the overlay with a notice instead of drawing garbage. */
  async verifyOverlay(): Promise<void> {
    const { sequenceId, frame, selected } = this.store.state;
    if (sequenceId === null || selected === null) return;
    try {
      const resp = await this.api.projection(sequenceId, frame, selected);
      this.store.applyProjection(resp);
    } catch (err) {
      if (err instanceof ApiError) {
        this.store.applyProjection(null, err.detail);
        return;
      }
      throw err;
    }
  }

  lockSelected(locked: boolean) {
    return this.mutate({ action: "lock", locked });
  }

  // -- transfer ----------------------------------------------------------------

  transferObject(targetX: number, targetY: number): Promise<WireBox | null> {
    const { sequenceId, frame, selected } = this.store.state;
    if (sequenceId === null || selected === null) return Promise.resolve(null);
    return this.queue.submit(async () => {
      try {
        const resp = await this.api.transferObject(
          sequenceId, frame, selected, [targetX, targetY]);
        const box = this.store.applyMutation(
          { box: resp.box, log_length: resp.log_length });
        return box;
      } catch (err) {
        if (err instanceof ApiError) {
          this.store.setNotice(err.detail);
          return null;
        }
        throw err;
      }
    });
  }

  /** Copy the previous frame's boxes into the current frame. */
  transferFromPrevious(): Promise<void> {
    const { sequenceId, frame } = this.store.state;
    if (sequenceId === null || frame === 0) return Promise.resolve();
    return this.queue.submit(async () => {
      try {
        const resp = await this.api.transferFrame(sequenceId, frame - 1, frame);
        this.store.applyTransfer(resp, frame);
      } catch (err) {
        if (err instanceof ApiError) {
          this.store.setNotice(err.detail);
          return;
        }
        throw err;
      }
    });
  }

  // -- chrome ------------------------------------------------------------------

  deleteSelected(): Promise<void> {
    const { sequenceId, frame, selected } = this.store.state;
    if (sequenceId === null || selected === null) return Promise.resolve();
    return this.queue.submit(async () => {
      try {
        await this.api.deleteBox(sequenceId, frame, selected);
        this.store.applyDelete(selected);
      } catch (err) {
        if (err instanceof ApiError) {
          this.store.setNotice(err.detail);
          return;
        }
        throw err;
      }
    });
  }

  async save(): Promise<void> {
    const { sequenceId } = this.store.state;
    if (sequenceId === null) return;
    try {
      await this.api.save(sequenceId);
      this.store.markSaved();
    } catch (err) {
      if (err instanceof ApiError) {
        this.store.setNotice(`save failed: ${err.detail}`);
        return;
      }
      throw err;
    }
  }
}
