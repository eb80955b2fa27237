import { describe, expect, it } from "vitest";

import { AnnotationStore, DEFAULT_LAYOUT_WEIGHTS } from "../src/store";
import type { FrameBundle, WireBox } from "../src/types";

function wbox(trackId: number, overrides: Partial<WireBox> = {}): WireBox {
  return {
    frame: 0, track_id: trackId, center: [1, 2, 3], size: [4, 2, 1.5],
    yaw: 0.2, category: "Car", height_locked: false, height_defaulted: false,
    ...overrides,
  };
}

function bundle(boxes: WireBox[], frame = 0): FrameBundle {
  return {
    sequence_id: "seq", frame,
    calibration: { p_rect: [], r_rect: [], t_velo_cam: [] },
    cloud_url: "x", image_url: null, boxes,
  };
}

describe("annotation store", () => {
  it("holds frame boxes exactly as served", () => {
    const store = new AnnotationStore();
    const served = [wbox(0), wbox(3, { height_locked: true })];
    store.applyFrame(bundle(served), 5);
    expect(store.getBox(0)).toBe(served[0]);
    expect(store.getBox(3)).toBe(served[1]);
    expect(store.state.frameCount).toBe(5);
  });

  it("mutations replace the stored object with the response object", () => {
    const store = new AnnotationStore();
    store.applyFrame(bundle([wbox(0)]), 1);
    const response = wbox(0, { center: [9, 9, 9] });
    store.applyMutation({ box: response, log_length: 7 });
    expect(store.getBox(0)).toBe(response);
    expect(store.state.logLength).toBe(7);
    expect(store.state.dirty).toBe(true);
  });

  it("selection survives frames that still contain the box", () => {
    const store = new AnnotationStore();
    store.applyFrame(bundle([wbox(2)]), 3);
    store.select(2);
    store.applyFrame(bundle([wbox(2)], 1), 3);
    expect(store.state.selected).toBe(2);
    store.applyFrame(bundle([], 2), 3);
    expect(store.state.selected).toBeNull();
  });

  it("mutations invalidate a stale image overlay", () => {
    const store = new AnnotationStore();
    store.applyFrame(bundle([wbox(0)]), 1);
    store.applyProjection({ points: [], hull: [0, 0, 1, 1], behind_count: 0 });
    store.applyMutation({ box: wbox(0), log_length: 1 });
    expect(store.state.overlay).toBeNull();
  });

  it("transfer only inserts copies when viewing the target frame", () => {
    const store = new AnnotationStore();
    store.applyFrame(bundle([], 2), 3);
    store.applyTransfer(
      { copied: [wbox(5, { frame: 2 })], conflicts: [1], log_length: 4 }, 2);
    expect(store.getBox(5)).toBeDefined();
    expect(store.state.conflicts).toEqual([1]);
    store.applyTransfer(
      { copied: [wbox(6, { frame: 1 })], conflicts: [], log_length: 5 }, 1);
    expect(store.getBox(6)).toBeUndefined();
  });

  it("notifies subscribers and supports unsubscribe", () => {
    const store = new AnnotationStore();
    let calls = 0;
    const off = store.subscribe(() => {
      calls += 1;
    });
    store.setStage("adjust");
    off();
    store.setStage("verify");
    expect(calls).toBe(1);
  });

  it("bird view owns the largest default layout share", () => {
    const weights = Object.entries(DEFAULT_LAYOUT_WEIGHTS);
    const max = weights.reduce((a, b) => (b[1] > a[1] ? b : a));
    expect(max[0]).toBe("bird");
  });

  it("image mode toggles between 1 and 2", () => {
    const store = new AnnotationStore();
    expect(store.state.imageMode).toBe(1);
    store.toggleImageMode();
    expect(store.state.imageMode).toBe(2);
    store.toggleImageMode();
    expect(store.state.imageMode).toBe(1);
  });
});
