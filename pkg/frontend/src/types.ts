/** Wire types mirroring the annotation service JSON bodies. All numbers are
 * SI: meters, radians, seconds. */

export interface WireBox {
  frame: number;
  track_id: number;
  /** [x, y, z] velodyne frame, z up */
  center: [number, number, number];
  /** [length, width, height] */
  size: [number, number, number];
  yaw: number;
  category: string;
  height_locked: boolean;
  height_defaulted: boolean;
}

export interface CalibrationWire {
  p_rect: number[];
  r_rect: number[];
  t_velo_cam: number[];
}

export interface FrameBundle {
  sequence_id: string;
  frame: number;
  calibration: CalibrationWire;
  cloud_url: string;
  image_url: string | null;
  boxes: WireBox[];
}

export interface SequenceSummary {
  id: string;
  frame_count: number;
  annotation_count: number;
}

export interface FrustumResponse {
  indices: number[];
  count: number;
  depth_min: number | null;
  depth_max: number | null;
}

export interface MutationResponse {
  box: WireBox;
  log_length: number;
}

export interface TransferResponse {
  copied: WireBox[];
  conflicts: number[];
  log_length: number;
}

export interface ProjectionResponse {
  /** one entry per corner: [u, v, depth] or null when behind the camera */
  points: ([number, number, number] | null)[];
  /** [u_min, v_min, u_max, v_max] over the in-front corners */
  hull: [number, number, number, number];
  behind_count: number;
}

export type ViewId = "bird" | "perspective" | "front" | "side" | "image";

export type Stage = "find" | "localize" | "adjust" | "verify";

export type BoxAction =
  | { action: "shift"; dx: number; dy: number }
  | { action: "rotate"; dtheta: number }
  | { action: "resize_bev"; edge: "Front" | "Rear" | "Left" | "Right"; delta: number }
  | {
      action: "view_edit";
      view: "Front" | "Side";
      edge?: "Left" | "Right" | "Top" | "Bottom";
      delta?: number;
      shift?: [number, number];
    }
  | { action: "lock"; locked: boolean };

export interface CreateBoxParams {
  center: [number, number];
  length: number;
  width: number;
  yaw: number;
  category: string;
}
