import type {
  FrameBundle,
  FrustumResponse,
  MutationResponse,
  ProjectionResponse,
  Stage,
  TransferResponse,
  ViewId,
  WireBox,
} from "./types";

export interface ViewPose {
  zoom: number;
  panX: number;
  panY: number;
}

/** Fraction of the layout each view holds by default. The bird view gets the
 * largest area; the others share the rest. */
export const DEFAULT_LAYOUT_WEIGHTS: Record<ViewId, number> = {
  bird: 0.5,
  image: 0.2,
  perspective: 0.14,
  front: 0.08,
  side: 0.08,
};

export interface StoreState {
  sequenceId: string | null;
  frame: number;
  frameCount: number;
  /** current frame's boxes, exactly as the server last sent them */
  boxes: Map<number, WireBox>;
  selected: number | null;
  stage: Stage;
  highlight: Set<number>;
  depthRange: [number, number] | null;
  overlay: ProjectionResponse | null;
  conflicts: number[];
  views: Record<ViewId, ViewPose>;
  imageMode: 1 | 2;
  dirty: boolean;
  logLength: number;
  notice: string | null;
}

function initialViews(): Record<ViewId, ViewPose> {
  return {
    bird: { zoom: 1, panX: 0, panY: 0 },
    perspective: { zoom: 1, panX: 0, panY: 0 },
    front: { zoom: 1, panX: 0, panY: 0 },
    side: { zoom: 1, panX: 0, panY: 0 },
    image: { zoom: 1, panX: 0, panY: 0 },
  };
}

type Listener = (state: StoreState) => void;

/** Single source of truth for rendering. The store never computes box fields
 * itself: every box it holds is byte-for-byte a server response (the echo
 * property), so the UI can never drift from the service. */
export class AnnotationStore {
  readonly state: StoreState = {
    sequenceId: null,
    frame: 0,
    frameCount: 0,
    boxes: new Map(),
    selected: null,
    stage: "find",
    highlight: new Set(),
    depthRange: null,
    overlay: null,
    conflicts: [],
    views: initialViews(),
    imageMode: 1,
    dirty: false,
    logLength: 0,
    notice: null,
  };

  private listeners: Listener[] = [];

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  getBox(trackId: number): WireBox | undefined {
    return this.state.boxes.get(trackId);
  }

  get selectedBox(): WireBox | undefined {
    return this.state.selected === null
      ? undefined
      : this.state.boxes.get(this.state.selected);
  }

  applyFrame(bundle: FrameBundle, frameCount: number): void {
    this.state.sequenceId = bundle.sequence_id;
    this.state.frame = bundle.frame;
    this.state.frameCount = frameCount;
    this.state.boxes = new Map(bundle.boxes.map((b) => [b.track_id, b]));
    if (this.state.selected !== null && !this.state.boxes.has(this.state.selected)) {
      this.state.selected = null;
    }
    this.state.highlight = new Set();
    this.state.depthRange = null;
    this.state.overlay = null;
    this.emit();
  }

  /** Install the exact box object the server returned. */
  applyMutation(resp: MutationResponse): WireBox {
    this.state.boxes.set(resp.box.track_id, resp.box);
    this.state.logLength = resp.log_length;
    this.state.dirty = true;
    // a mutation invalidates any image overlay computed for the old geometry
    this.state.overlay = null;
    this.emit();
    return resp.box;
  }

  applyDelete(trackId: number, logLength?: number): void {
    this.state.boxes.delete(trackId);
    if (this.state.selected === trackId) {
      this.state.selected = null;
    }
    if (logLength !== undefined) {
      this.state.logLength = logLength;
    }
    this.state.dirty = true;
    this.emit();
  }

  applyTransfer(resp: TransferResponse, toFrame: number): void {
    if (toFrame === this.state.frame) {
      for (const box of resp.copied) {
        this.state.boxes.set(box.track_id, box);
      }
    }
    this.state.conflicts = resp.conflicts;
    this.state.logLength = resp.log_length;
    this.state.dirty = true;
    this.emit();
  }

  applyFrustum(resp: FrustumResponse): void {
    this.state.highlight = new Set(resp.indices);
    this.state.depthRange =
      resp.depth_min === null || resp.depth_max === null
        ? null
        : [resp.depth_min, resp.depth_max];
    this.state.notice = resp.count === 0 ? "no points in the selected region" : null;
    this.emit();
  }

  applyProjection(overlay: ProjectionResponse | null, notice: string | null = null): void {
    this.state.overlay = overlay;
    this.state.notice = notice;
    this.emit();
  }

  select(trackId: number | null): void {
    this.state.selected = trackId;
    this.state.overlay = null;
    this.emit();
  }

  setStage(stage: Stage): void {
    this.state.stage = stage;
    this.emit();
  }

  setNotice(notice: string | null): void {
    this.state.notice = notice;
    this.emit();
  }

  dismissConflicts(): void {
    this.state.conflicts = [];
    this.emit();
  }

  toggleImageMode(): void {
    this.state.imageMode = this.state.imageMode === 1 ? 2 : 1;
    this.emit();
  }

  markSaved(): void {
    this.state.dirty = false;
    this.emit();
  }
}
