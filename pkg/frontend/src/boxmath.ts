import type { WireBox } from "./types";

/** Client-side copy of the box corner contract, used only for drawing.
 * Velodyne frame: x forward, y left, z up; yaw counter-clockwise about +z,
 * zero along +x; length runs along the heading. Corner order matches the
 * service: bottom face counter-clockwise from (+l/2, +w/2), then the top
 * face in the same x/y order. Rendered geometry must agree with the
 * server's projections within half a pixel. */

const CORNER_SIGNS: [number, number, number][] = [
  [+1, +1, -1], [-1, +1, -1], [-1, -1, -1], [+1, -1, -1],
  [+1, +1, +1], [-1, +1, +1], [-1, -1, +1], [+1, -1, +1],
];

export function boxCorners(box: WireBox): [number, number, number][] {
  const [cx, cy, cz] = box.center;
  const [l, w, h] = box.size;
  const c = Math.cos(box.yaw);
  const s = Math.sin(box.yaw);
  return CORNER_SIGNS.map(([sx, sy, sz]) => {
    const bx = (sx * l) / 2;
    const by = (sy * w) / 2;
    return [cx + bx * c - by * s, cy + bx * s + by * c, cz + (sz * h) / 2];
  });
}

/** Bird-view footprint: the 4 bottom corners' (x, y), counter-clockwise. */
export function bevFootprint(box: WireBox): [number, number][] {
  return boxCorners(box).slice(0, 4).map(([x, y]) => [x, y]);
}

/** World point -> box body frame (x along heading, y lateral, z up). */
export function worldToBody(
  box: WireBox, x: number, y: number, z: number,
): [number, number, number] {
  const [cx, cy, cz] = box.center;
  const c = Math.cos(-box.yaw);
  const s = Math.sin(-box.yaw);
  const dx = x - cx;
  const dy = y - cy;
  return [dx * c - dy * s, dx * s + dy * c, z - cz];
}

export function pointInFootprint(box: WireBox, x: number, y: number): boolean {
  const [bx, by] = worldToBody(box, x, y, 0);
  return Math.abs(bx) <= box.size[0] / 2 && Math.abs(by) <= box.size[1] / 2;
}

export function pointInBox(box: WireBox, x: number, y: number, z: number): boolean {
  const [bx, by, bz] = worldToBody(box, x, y, z);
  return (
    Math.abs(bx) <= box.size[0] / 2 &&
    Math.abs(by) <= box.size[1] / 2 &&
    Math.abs(bz) <= box.size[2] / 2
  );
}

/** Per-category reference sizes (length, width, height) shown beside the
 * annotator's box for comparison while adjusting. */
export const ANCHOR_SIZES: Record<string, [number, number, number]> = {
  Car: [3.9, 1.6, 1.56],
  Van: [5.0, 1.9, 2.1],
  Pedestrian: [0.8, 0.6, 1.73],
  Cyclist: [1.76, 0.6, 1.73],
};

export function anchorFor(category: string): [number, number, number] {
  return ANCHOR_SIZES[category] ?? ANCHOR_SIZES.Car;
}
