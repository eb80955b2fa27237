import type { AnnotationController } from "./controller";
import { COLORS } from "./render2d";
import type { AnnotationStore } from "./store";

// box corner wireframe: bottom loop, top loop, four pillars
const WIRE_EDGES: [number, number][] = [
  [0, 1], [1, 2], [2, 3], [3, 0],
  [4, 5], [5, 6], [6, 7], [7, 4],
  [0, 4], [1, 5], [2, 6], [3, 7],
];

/** RGB panel: draw a rectangle to run the find stage (frustum highlight),
 * and render the verify-stage wireframe of the selected box. Image mode 1
 * shows overlays, mode 2 the bare image. */
export class ImageView {
  zoom = 1;
  panX = 0;
  panY = 0;
  private image: HTMLImageElement | null = null;
  private drag: { startX: number; startY: number; lastX: number; lastY: number } | null =
    null;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly store: AnnotationStore,
    private readonly controller: AnnotationController,
  ) {
    canvas.addEventListener("mousedown", (e) => {
      const [u, v] = this.local(e);
      this.drag = { startX: u, startY: v, lastX: u, lastY: v };
    });
    canvas.addEventListener("mousemove", (e) => {
      if (!this.drag) return;
      const [u, v] = this.local(e);
      this.drag.lastX = u;
      this.drag.lastY = v;
      this.render();
    });
    window.addEventListener("mouseup", () => {
      const drag = this.drag;
      this.drag = null;
      if (!drag) return;
      if (Math.abs(drag.lastX - drag.startX) < 5 ||
          Math.abs(drag.lastY - drag.startY) < 5) {
        return;
      }
      void this.controller.find(
        drag.startX, drag.startY, drag.lastX, drag.lastY,
        this.zoom, this.panX, this.panY);
    });
  }

  private local(e: MouseEvent): [number, number] {
    const r = this.canvas.getBoundingClientRect();
    return [e.clientX - r.left, e.clientY - r.top];
  }

  setImage(url: string | null): void {
    if (url === null) {
      this.image = null;
      this.render();
      return;
    }
    const img = new Image();
    img.onload = () => {
      this.image = img;
      this.zoom = Math.min(this.canvas.width / img.width,
                           this.canvas.height / img.height);
      this.render();
    };
    img.src = url;
  }

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.fillStyle = COLORS.background;
    ctx.fillRect(0, 0, width, height);
    if (this.image) {
      ctx.drawImage(this.image, this.panX, this.panY,
                    this.image.width * this.zoom, this.image.height * this.zoom);
    } else {
      ctx.fillStyle = COLORS.label;
      ctx.font = "11px sans-serif";
      ctx.fillText("no image for this frame", 6, 14);
    }

    const state = this.store.state;
    if (state.imageMode === 2) return;   // mode 2: bare image

    if (this.drag) {
      ctx.strokeStyle = COLORS.frustum;
      ctx.setLineDash([4, 3]);
      ctx.strokeRect(
        Math.min(this.drag.startX, this.drag.lastX),
        Math.min(this.drag.startY, this.drag.lastY),
        Math.abs(this.drag.lastX - this.drag.startX),
        Math.abs(this.drag.lastY - this.drag.startY));
      ctx.setLineDash([]);
    }

    if (state.depthRange) {
      ctx.fillStyle = COLORS.frustum;
      ctx.font = "11px sans-serif";
      ctx.fillText(
        `depth ${state.depthRange[0].toFixed(1)} to ${state.depthRange[1].toFixed(1)} m`,
        6, height - 8);
    }

    const overlay = state.overlay;
    if (overlay) {
      const toCanvas = (u: number, v: number): [number, number] =>
        [u * this.zoom + this.panX, v * this.zoom + this.panY];
      ctx.strokeStyle = COLORS.inBox;
      ctx.beginPath();
      for (const [a, b] of WIRE_EDGES) {
        const pa = overlay.points[a];
        const pb = overlay.points[b];
        if (!pa || !pb) continue;   // behind-camera corners are flagged null
        const [ua, va] = toCanvas(pa[0], pa[1]);
        const [ub, vb] = toCanvas(pb[0], pb[1]);
        ctx.moveTo(ua, va);
        ctx.lineTo(ub, vb);
      }
      ctx.stroke();
      if (overlay.behind_count > 0) {
        ctx.fillStyle = COLORS.frustum;
        ctx.fillText(`${overlay.behind_count} corner(s) behind camera`, 6, 28);
      }
    }
  }
}
