import { anchorFor, bevFootprint, pointInBox, worldToBody } from "./boxmath";
import type { AnnotationController } from "./controller";
import type { AnnotationStore, StoreState } from "./store";
import type { WireBox } from "./types";

export const COLORS = {
  background: "#10141a",
  point: "#8a93a0",
  frustum: "#ffb347",     // frustum-highlighted points
  inBox: "#4cd964",       // points inside the selected box
  box: "#5ac8fa",
  selected: "#ffffff",
  anchor: "#6b7280",
  label: "#e5e7eb",
  grid: "#1f2630",
};

const POINT_BUDGET = 40000;

function strideFor(count: number): number {
  return Math.max(1, Math.ceil(count / POINT_BUDGET));
}

interface DragState {
  kind: "draw" | "shift" | "rotate" | "edge";
  startX: number;
  startY: number;
  lastX: number;
  lastY: number;
  edge?: "Left" | "Right" | "Top" | "Bottom";
}

/** Bird's-eye canvas: world +x (forward) points up, +y (left) points left.
 * Drag on empty ground draws a new box, drag inside the selected footprint
 * shifts it, drag on the heading handle rotates it. */
export class BirdView {
  metersPerPixel = 0.15;
  centerX = 15;   // world meters at the canvas center
  centerY = 0;
  private drag: DragState | null = null;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly store: AnnotationStore,
    private readonly controller: AnnotationController,
  ) {
    canvas.addEventListener("mousedown", (e) => this.onDown(e));
    canvas.addEventListener("mousemove", (e) => this.onMove(e));
    window.addEventListener("mouseup", () => this.onUp());
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.metersPerPixel *= e.deltaY > 0 ? 1.15 : 1 / 1.15;
      this.render();
    });
  }

  worldToCanvas(x: number, y: number): [number, number] {
    const u = this.canvas.width / 2 - (y - this.centerY) / this.metersPerPixel;
    const v = this.canvas.height / 2 - (x - this.centerX) / this.metersPerPixel;
    return [u, v];
  }

  canvasToWorld = (u: number, v: number): [number, number] => {
    const x = this.centerX + (this.canvas.height / 2 - v) * this.metersPerPixel;
    const y = this.centerY + (this.canvas.width / 2 - u) * this.metersPerPixel;
    return [x, y];
  };

  private local(e: MouseEvent): [number, number] {
    const r = this.canvas.getBoundingClientRect();
    return [e.clientX - r.left, e.clientY - r.top];
  }

  private rotateHandleCanvas(box: WireBox): [number, number] {
    const reach = box.size[0] / 2 + 0.8;
    const hx = box.center[0] + reach * Math.cos(box.yaw);
    const hy = box.center[1] + reach * Math.sin(box.yaw);
    return this.worldToCanvas(hx, hy);
  }

  private onDown(e: MouseEvent): void {
    const [u, v] = this.local(e);
    const state = this.store.state;
    const selected = this.store.selectedBox;
    if (selected) {
      const [hu, hv] = this.rotateHandleCanvas(selected);
      if (Math.hypot(u - hu, v - hv) < 10) {
        this.drag = { kind: "rotate", startX: u, startY: v, lastX: u, lastY: v };
        return;
      }
    }
    const [wx, wy] = this.canvasToWorld(u, v);
    for (const box of state.boxes.values()) {
      const [bx, by] = worldToBody(box, wx, wy, 0);
      if (Math.abs(bx) <= box.size[0] / 2 && Math.abs(by) <= box.size[1] / 2) {
        this.store.select(box.track_id);
        this.drag = { kind: "shift", startX: u, startY: v, lastX: u, lastY: v };
        return;
      }
    }
    this.drag = { kind: "draw", startX: u, startY: v, lastX: u, lastY: v };
  }

  private onMove(e: MouseEvent): void {
    if (!this.drag) return;
    const [u, v] = this.local(e);
    const drag = this.drag;
    if (drag.kind === "shift") {
      void this.controller.shiftSelected(
        u - drag.lastX, v - drag.lastY, this.metersPerPixel);
    } else if (drag.kind === "rotate") {
      const selected = this.store.selectedBox;
      if (selected) {
        const [cu, cv] = this.worldToCanvas(selected.center[0], selected.center[1]);
        void this.controller.rotateSelected(cu, cv, drag.lastX, drag.lastY, u, v);
      }
    }
    drag.lastX = u;
    drag.lastY = v;
    if (drag.kind === "draw") {
      this.render();
      const ctx = this.canvas.getContext("2d")!;
      ctx.strokeStyle = COLORS.selected;
      ctx.setLineDash([4, 3]);
      ctx.strokeRect(Math.min(drag.startX, u), Math.min(drag.startY, v),
                     Math.abs(u - drag.startX), Math.abs(v - drag.startY));
      ctx.setLineDash([]);
    }
  }

  private onUp(): void {
    const drag = this.drag;
    this.drag = null;
    if (!drag || drag.kind !== "draw") return;
    const wpx = Math.abs(drag.lastX - drag.startX);
    const hpx = Math.abs(drag.lastY - drag.startY);
    if (wpx < 6 || hpx < 6) {
      this.render();
      return;   // click, not a draw
    }
    const category =
      (document.getElementById("category") as HTMLSelectElement | null)?.value ?? "Car";
    void this.controller.localizeDraw(
      drag.startX, drag.startY, drag.lastX, drag.lastY, this.canvasToWorld, category);
  }

  render(cloud: Float32Array | null = this.controller.cloud,
         state: StoreState = this.store.state): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.fillStyle = COLORS.background;
    ctx.fillRect(0, 0, width, height);

    ctx.strokeStyle = COLORS.grid;
    for (let r = 10; r <= 80; r += 10) {
      ctx.beginPath();
      const [cu, cv] = this.worldToCanvas(0, 0);
      ctx.arc(cu, cv, r / this.metersPerPixel, 0, 2 * Math.PI);
      ctx.stroke();
    }

    if (cloud) {
      const selected = this.store.selectedBox;
      const n = Math.floor(cloud.length / 4);
      const step = strideFor(n);
      for (let i = 0; i < n; i += step) {
        const x = cloud[i * 4];
        const y = cloud[i * 4 + 1];
        const z = cloud[i * 4 + 2];
        const [u, v] = this.worldToCanvas(x, y);
        if (u < 0 || v < 0 || u >= width || v >= height) continue;
        if (selected && pointInBox(selected, x, y, z)) {
          ctx.fillStyle = COLORS.inBox;
        } else if (state.highlight.has(i)) {
          ctx.fillStyle = COLORS.frustum;
        } else {
          ctx.fillStyle = COLORS.point;
        }
        ctx.fillRect(u, v, 2, 2);
      }
    }

    for (const box of state.boxes.values()) {
      const isSelected = box.track_id === state.selected;
      ctx.strokeStyle = isSelected ? COLORS.selected : COLORS.box;
      ctx.lineWidth = isSelected ? 2 : 1;
      const poly = bevFootprint(box).map(([x, y]) => this.worldToCanvas(x, y));
      ctx.beginPath();
      ctx.moveTo(poly[0][0], poly[0][1]);
      for (const [u, v] of poly.slice(1)) ctx.lineTo(u, v);
      ctx.closePath();
      ctx.stroke();
      // heading tick from center through the front face
      const [cu, cv] = this.worldToCanvas(box.center[0], box.center[1]);
      const [fu, fv] = this.worldToCanvas(
        box.center[0] + (box.size[0] / 2) * Math.cos(box.yaw),
        box.center[1] + (box.size[0] / 2) * Math.sin(box.yaw));
      ctx.beginPath();
      ctx.moveTo(cu, cv);
      ctx.lineTo(fu, fv);
      ctx.stroke();
      if (isSelected) {
        const [hu, hv] = this.rotateHandleCanvas(box);
        ctx.beginPath();
        ctx.arc(hu, hv, 5, 0, 2 * Math.PI);
        ctx.stroke();
        ctx.fillStyle = COLORS.label;
        ctx.font = "11px sans-serif";
        ctx.fillText(
          `#${box.track_id} ${box.category} ${box.size[0].toFixed(2)}x` +
          `${box.size[1].toFixed(2)}x${box.size[2].toFixed(2)} m`,
          cu + 8, cv - 8);
      }
    }
    ctx.lineWidth = 1;
  }
}

export function formatMeters(value: number): string {
  return `${value.toFixed(2)} m`;
}

type ViewKind = "front" | "side";

/** Front/side orthographic panels of the selected box's local cloud.
 * Front: screen-right is the width axis; side: screen-right is the length
 * axis with the heading pointing right (a correct annotation faces right).
 * Dragging an edge moves that face outward; dragging inside shifts the box.
 * Every edge is labeled with its current length in meters, with the
 * category's reference (anchor) size shown for comparison. */
export class ProjectedView {
  metersPerPixel = 0.02;
  private drag: DragState | null = null;

  constructor(
    private readonly kind: ViewKind,
    private readonly canvas: HTMLCanvasElement,
    private readonly store: AnnotationStore,
    private readonly controller: AnnotationController,
  ) {
    canvas.addEventListener("mousedown", (e) => this.onDown(e));
    canvas.addEventListener("mousemove", (e) => this.onMove(e));
    window.addEventListener("mouseup", () => {
      this.drag = null;
    });
  }

  private local(e: MouseEvent): [number, number] {
    const r = this.canvas.getBoundingClientRect();
    return [e.clientX - r.left, e.clientY - r.top];
  }

  /** Box half extents on this view's (horizontal, vertical) axes, meters. */
  private halfExtents(box: WireBox): [number, number] {
    const [l, w, h] = box.size;
    return [this.kind === "front" ? w / 2 : l / 2, h / 2];
  }

  private boxRectPixels(box: WireBox): { cx: number; cy: number; hw: number; hh: number } {
    const [hwM, hhM] = this.halfExtents(box);
    return {
      cx: this.canvas.width / 2,
      cy: this.canvas.height / 2,
      hw: hwM / this.metersPerPixel,
      hh: hhM / this.metersPerPixel,
    };
  }

  private hitEdge(u: number, v: number, box: WireBox): DragState["edge"] | null {
    const { cx, cy, hw, hh } = this.boxRectPixels(box);
    const margin = 6;
    const withinH = v > cy - hh - margin && v < cy + hh + margin;
    const withinW = u > cx - hw - margin && u < cx + hw + margin;
    if (withinH && Math.abs(u - (cx + hw)) < margin) return "Right";
    if (withinH && Math.abs(u - (cx - hw)) < margin) return "Left";
    if (withinW && Math.abs(v - (cy - hh)) < margin) return "Top";
    if (withinW && Math.abs(v - (cy + hh)) < margin) return "Bottom";
    return null;
  }

  private onDown(e: MouseEvent): void {
    const box = this.store.selectedBox;
    if (!box) return;
    const [u, v] = this.local(e);
    const edge = this.hitEdge(u, v, box);
    if (edge) {
      this.drag = { kind: "edge", startX: u, startY: v, lastX: u, lastY: v, edge };
      return;
    }
    const { cx, cy, hw, hh } = this.boxRectPixels(box);
    if (Math.abs(u - cx) < hw && Math.abs(v - cy) < hh) {
      this.drag = { kind: "shift", startX: u, startY: v, lastX: u, lastY: v };
    }
  }

  private onMove(e: MouseEvent): void {
    if (!this.drag || !this.store.selectedBox) return;
    const [u, v] = this.local(e);
    const drag = this.drag;
    const du = u - drag.lastX;
    const dv = v - drag.lastY;
    drag.lastX = u;
    drag.lastY = v;
    if (drag.kind === "edge" && drag.edge) {
      // outward pixels: away from the box center along the edge normal
      const outward =
        drag.edge === "Right" ? du :
        drag.edge === "Left" ? -du :
        drag.edge === "Top" ? -dv : dv;
      void this.controller.adjustEdge(this.kind, drag.edge, outward, this.metersPerPixel);
    } else if (drag.kind === "shift") {
      void this.controller.adjustShift(this.kind, du, dv, this.metersPerPixel);
    }
  }

  render(cloud: Float32Array | null = this.controller.cloud): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.fillStyle = COLORS.background;
    ctx.fillRect(0, 0, width, height);
    ctx.fillStyle = COLORS.label;
    ctx.font = "11px sans-serif";
    ctx.fillText(this.kind === "front" ? "front view" : "side view (facing right)", 6, 14);

    const box = this.store.selectedBox;
    if (!box) return;

    // fit the box plus margin into the panel
    const [hwM, hhM] = this.halfExtents(box);
    const fit = Math.max((2 * hwM + 2) / width, (2 * hhM + 1.5) / height);
    this.metersPerPixel = fit;
    const { cx, cy, hw, hh } = this.boxRectPixels(box);

    if (cloud) {
      const n = Math.floor(cloud.length / 4);
      const margin = 1.5;
      ctx.fillStyle = COLORS.point;
      for (let i = 0; i < n; i++) {
        const [bx, by, bz] = worldToBody(
          box, cloud[i * 4], cloud[i * 4 + 1], cloud[i * 4 + 2]);
        if (Math.abs(bx) > box.size[0] / 2 + margin ||
            Math.abs(by) > box.size[1] / 2 + margin ||
            Math.abs(bz) > box.size[2] / 2 + margin) continue;
        const horiz = this.kind === "front" ? by : bx;
        const u = cx + horiz / this.metersPerPixel;
        const v = cy - bz / this.metersPerPixel;
        const inside = Math.abs(bx) <= box.size[0] / 2 &&
          Math.abs(by) <= box.size[1] / 2 && Math.abs(bz) <= box.size[2] / 2;
        ctx.fillStyle = inside ? COLORS.inBox : COLORS.point;
        ctx.fillRect(u, v, 2, 2);
      }
    }

    // anchor reference rectangle, centered like the box
    const anchor = anchorFor(box.category);
    const ahw = (this.kind === "front" ? anchor[1] : anchor[0]) / 2 / this.metersPerPixel;
    const ahh = anchor[2] / 2 / this.metersPerPixel;
    ctx.strokeStyle = COLORS.anchor;
    ctx.setLineDash([3, 3]);
    ctx.strokeRect(cx - ahw, cy - ahh, 2 * ahw, 2 * ahh);
    ctx.setLineDash([]);

    ctx.strokeStyle = box.height_locked ? COLORS.frustum : COLORS.selected;
    ctx.lineWidth = 2;
    ctx.strokeRect(cx - hw, cy - hh, 2 * hw, 2 * hh);
    ctx.lineWidth = 1;

    // length specification on every edge
    const horizontalDim = this.kind === "front" ? box.size[1] : box.size[0];
    ctx.fillStyle = COLORS.label;
    ctx.fillText(formatMeters(horizontalDim), cx - 14, cy + hh + 14);
    ctx.fillText(formatMeters(box.size[2]), cx + hw + 6, cy + 4);
    const anchorDims = this.kind === "front"
      ? `anchor ${anchor[1].toFixed(2)} x ${anchor[2].toFixed(2)} m`
      : `anchor ${anchor[0].toFixed(2)} x ${anchor[2].toFixed(2)} m`;
    ctx.fillStyle = COLORS.anchor;
    ctx.fillText(anchorDims, 6, height - 8);
    if (box.height_locked) {
      ctx.fillStyle = COLORS.frustum;
      ctx.fillText("height locked", 6, 28);
    }
  }
}
