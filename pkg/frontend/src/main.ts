import { ApiClient } from "./api";
import { AnnotationController } from "./controller";
import { ImageView } from "./imageview";
import { PerspectiveView } from "./perspective";
import { BirdView, ProjectedView } from "./render2d";
import { AnnotationStore } from "./store";
import type { Stage } from "./types";

const STAGES: Stage[] = ["find", "localize", "adjust", "verify"];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function sizeCanvas(canvas: HTMLCanvasElement): void {
  const rect = canvas.getBoundingClientRect();
  canvas.width = Math.max(50, Math.floor(rect.width));
  canvas.height = Math.max(50, Math.floor(rect.height));
}

async function boot(): Promise<void> {
  const api = new ApiClient("");
  const store = new AnnotationStore();
  const controller = new AnnotationController(api, store);

  const birdCanvas = el<HTMLCanvasElement>("bird");
  const imageCanvas = el<HTMLCanvasElement>("image");
  const frontCanvas = el<HTMLCanvasElement>("front");
  const sideCanvas = el<HTMLCanvasElement>("side");
  const perspectiveCanvas = el<HTMLCanvasElement>("perspective");
  for (const canvas of [birdCanvas, imageCanvas, frontCanvas,
                        sideCanvas, perspectiveCanvas]) {
    sizeCanvas(canvas);
  }

  const bird = new BirdView(birdCanvas, store, controller);
  const image = new ImageView(imageCanvas, store, controller);
  const front = new ProjectedView("front", frontCanvas, store, controller);
  const side = new ProjectedView("side", sideCanvas, store, controller);
  const perspective = new PerspectiveView(perspectiveCanvas, store);

  const renderAll = () => {
    bird.render();
    front.render();
    side.render();
    perspective.render(controller.cloud);
    image.render();
    el<HTMLSpanElement>("frame-label").textContent =
      store.state.sequenceId === null
        ? "no sequence"
        : `${store.state.sequenceId} frame ${store.state.frame + 1}` +
          `/${store.state.frameCount}`;
    el<HTMLSpanElement>("dirty").textContent = store.state.dirty ? "unsaved" : "saved";
    el<HTMLSpanElement>("notice").textContent = store.state.notice ?? "";
    const conflicts = el<HTMLDivElement>("conflicts");
    conflicts.textContent = store.state.conflicts.length
      ? `transfer skipped existing tracks: ${store.state.conflicts.join(", ")}`
      : "";
    for (const stage of STAGES) {
      el(`stage-${stage}`).classList.toggle("active", store.state.stage === stage);
    }
    const box = store.selectedBox;
    el<HTMLButtonElement>("lock").textContent =
      box?.height_locked ? "unlock height" : "lock height";
  };
  store.subscribe(renderAll);

  controller.onCloud = (cloud) => {
    perspective.setCloud(cloud);
    const seq = store.state.sequenceId;
    if (seq !== null) {
      image.setImage(api.imageUrl(seq, store.state.frame));
    }
    renderAll();
  };

  // toolbar
  el<HTMLButtonElement>("prev").onclick = () => void controller.switchFrame(-1);
  el<HTMLButtonElement>("next").onclick = () => void controller.switchFrame(+1);
  el<HTMLButtonElement>("save").onclick = () => void controller.save();
  el<HTMLButtonElement>("delete").onclick = () => void controller.deleteSelected();
  el<HTMLButtonElement>("verify").onclick = () => void controller.verifyOverlay();
  el<HTMLButtonElement>("lock").onclick = () => {
    const box = store.selectedBox;
    if (box) void controller.lockSelected(!box.height_locked);
  };
  el<HTMLButtonElement>("copy-frame").onclick =
    () => void controller.transferFromPrevious();
  el<HTMLButtonElement>("copy-object").onclick = () => {
    const box = store.selectedBox;
    if (box) {
      // drop the copy one box-length ahead on the same lane
      const dx = box.size[0] * 1.5 * Math.cos(box.yaw);
      const dy = box.size[0] * 1.5 * Math.sin(box.yaw);
      void controller.transferObject(box.center[0] + dx, box.center[1] + dy);
    }
  };
  for (const stage of STAGES) {
    el(`stage-${stage}`).onclick = () => store.setStage(stage);
  }

  // function keys: save / 3D view / bird view / image mode (letters as aliases)
  window.addEventListener("keydown", (e) => {
    if (e.target instanceof HTMLInputElement || e.target instanceof HTMLSelectElement) {
      return;
    }
    const key = e.key.toLowerCase();
    if (key === "f1" || key === "s") {
      e.preventDefault();
      void controller.save();
    } else if (key === "f2" || key === "p") {
      e.preventDefault();
      document.body.classList.toggle("zoom-perspective");
      renderAll();
    } else if (key === "f3" || key === "b") {
      e.preventDefault();
      document.body.classList.remove("zoom-perspective");
      renderAll();
    } else if (key === "f4" || key === "i") {
      e.preventDefault();
      store.toggleImageMode();
    } else if (key === "delete" || key === "x") {
      void controller.deleteSelected();
    }
  });

  window.addEventListener("beforeunload", (e) => {
    if (store.state.dirty) {
      e.preventDefault();
    }
  });

  window.addEventListener("resize", () => {
    for (const canvas of [birdCanvas, imageCanvas, frontCanvas,
                          sideCanvas, perspectiveCanvas]) {
      sizeCanvas(canvas);
    }
    renderAll();
  });

  // sequence picker
  const picker = el<HTMLSelectElement>("sequence");
  const summaries = await api.sequences();
  for (const summary of summaries) {
    const option = document.createElement("option");
    option.value = summary.id;
    option.textContent =
      `${summary.id} (${summary.frame_count} frames, ` +
      `${summary.annotation_count} boxes)`;
    picker.appendChild(option);
  }
  picker.onchange = () => void controller.loadSequence(picker.value);
  if (summaries.length > 0) {
    picker.value = summaries[0].id;
    await controller.loadSequence(summaries[0].id);
  }
  renderAll();
}

void boot();
