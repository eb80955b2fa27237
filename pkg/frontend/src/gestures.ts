import type { BoxAction } from "./types";

/** Pixel-to-meter conversions for each 2D view. Every function here is the
 * single multiplication k * metersPerPixel; API deltas must equal it exactly
 * (no rounding, no quantization). Screen v grows downward, so vertical
 * screen deltas negate into up-positive meters. */

export function pixelsToMeters(pixels: number, metersPerPixel: number): number {
  return pixels * metersPerPixel;
}

export type ProjectedView = "front" | "side";
export type ProjectedEdge = "Left" | "Right" | "Top" | "Bottom";

/** Outward pixel drag on a projected-view edge -> view_edit action.
 * `outwardPixels` is positive when the edge is dragged away from the box
 * center (the caller resolves screen direction to outwardness). */
export function dragEdgeAction(
  view: ProjectedView,
  edge: ProjectedEdge,
  outwardPixels: number,
  metersPerPixel: number,
): BoxAction {
  return {
    action: "view_edit",
    view: view === "front" ? "Front" : "Side",
    edge,
    delta: pixelsToMeters(outwardPixels, metersPerPixel),
  };
}

/** Whole-box drag in a projected view -> view_edit shift. */
export function dragBoxAction(
  view: ProjectedView,
  dxPixels: number,
  dyPixels: number,
  metersPerPixel: number,
): BoxAction {
  return {
    action: "view_edit",
    view: view === "front" ? "Front" : "Side",
    shift: [
      pixelsToMeters(dxPixels, metersPerPixel),
      pixelsToMeters(-dyPixels, metersPerPixel),
    ],
  };
}

/** Bird-view canvas orientation: forward (+x world) points screen-up and
 * left (+y world) points screen-left. */
export function birdCanvasDeltaToWorld(
  duPixels: number,
  dvPixels: number,
  metersPerPixel: number,
): { dx: number; dy: number } {
  return {
    dx: pixelsToMeters(-dvPixels, metersPerPixel),
    dy: pixelsToMeters(-duPixels, metersPerPixel),
  };
}

export function dragBevShiftAction(
  duPixels: number,
  dvPixels: number,
  metersPerPixel: number,
): BoxAction {
  const { dx, dy } = birdCanvasDeltaToWorld(duPixels, dvPixels, metersPerPixel);
  return { action: "shift", dx, dy };
}

/** Rotation handle: angle swept around the box center between two canvas
 * points, counter-clockwise positive in world terms. Canvas y points down,
 * which mirrors orientation, hence the sign flip. */
export function rotateHandleAngle(
  centerU: number, centerV: number,
  fromU: number, fromV: number,
  toU: number, toV: number,
): number {
  const a0 = Math.atan2(fromV - centerV, fromU - centerU);
  const a1 = Math.atan2(toV - centerV, toU - centerU);
  let delta = -(a1 - a0);
  if (delta > Math.PI) delta -= 2 * Math.PI;
  if (delta <= -Math.PI) delta += 2 * Math.PI;
  return delta;
}

export function rotateAction(
  centerU: number, centerV: number,
  fromU: number, fromV: number,
  toU: number, toV: number,
): BoxAction {
  return {
    action: "rotate",
    dtheta: rotateHandleAngle(centerU, centerV, fromU, fromV, toU, toV),
  };
}

/** A rectangle drawn on the displayed image, mapped back to native image
 * pixels through the current zoom/pan; exact division by zoom. */
export function imageRectToFrustum(
  x1: number, y1: number, x2: number, y2: number,
  zoom: number, panX: number, panY: number,
): { u_min: number; v_min: number; u_max: number; v_max: number } {
  const toImage = (x: number, y: number) => [(x - panX) / zoom, (y - panY) / zoom];
  const [u1, v1] = toImage(x1, y1);
  const [u2, v2] = toImage(x2, y2);
  return {
    u_min: Math.min(u1, u2),
    v_min: Math.min(v1, v2),
    u_max: Math.max(u1, u2),
    v_max: Math.max(v1, v2),
  };
}

/** Bird-view draw rectangle -> box creation parameters (axis-aligned draw,
 * yaw 0; the annotator rotates afterwards, per the localize workflow). */
export function bevDrawToCreateParams(
  u1: number, v1: number, u2: number, v2: number,
  canvasToWorld: (u: number, v: number) => [number, number],
): { center: [number, number]; length: number; width: number; yaw: number } {
  const [xa, ya] = canvasToWorld(u1, v1);
  const [xb, yb] = canvasToWorld(u2, v2);
  return {
    center: [(xa + xb) / 2, (ya + yb) / 2],
    length: Math.abs(xb - xa),
    width: Math.abs(yb - ya),
    yaw: 0,
  };
}
