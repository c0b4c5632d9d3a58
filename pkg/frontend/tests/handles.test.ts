import { describe, expect, it } from "vitest";

import { HandleStore } from "../src/handles";

describe("handle marker store", () => {
  it("shows a marker only after the add is acknowledged", () => {
    const store = new HandleStore();
    expect(store.beginAdd(4)).toBe(true);
    expect(store.markers()).toEqual([]);
    expect(store.isHandle(4)).toBe(false);
    store.resolveAdd(4, [0.1, 0.2, 0.3]);
    expect(store.markers()).toEqual([{ vertex: 4, position: [0.1, 0.2, 0.3] }]);
    expect(store.isHandle(4)).toBe(true);
  });

  it("allows at most one add/remove in flight", () => {
    const store = new HandleStore();
    expect(store.beginAdd(1)).toBe(true);
    expect(store.beginAdd(2)).toBe(false);
    expect(store.beginRemove(1)).toBe(false);
    store.resolveAdd(1, [0, 0, 0]);
    expect(store.beginAdd(2)).toBe(true);
    store.failAdd(2);
    expect(store.beginRemove(1)).toBe(true);
  });

  it("keeps the marker when an add fails", () => {
    const store = new HandleStore();
    store.beginAdd(3);
    store.failAdd(3);
    expect(store.markers()).toEqual([]);
    expect(store.busy).toBe(false);
  });

  it("removes the marker only after the remove is acknowledged", () => {
    const store = new HandleStore();
    store.beginAdd(5);
    store.resolveAdd(5, [1, 1, 1]);
    expect(store.beginRemove(5)).toBe(true);
    expect(store.isHandle(5)).toBe(true); // still pinned until the Ack
    store.resolveRemove(5);
    expect(store.isHandle(5)).toBe(false);
    expect(store.markers()).toEqual([]);
  });

  it("keeps the marker when a remove fails", () => {
    const store = new HandleStore();
    store.beginAdd(5);
    store.resolveAdd(5, [1, 1, 1]);
    store.beginRemove(5);
    store.failRemove(5);
    expect(store.isHandle(5)).toBe(true);
    expect(store.busy).toBe(false);
  });

  it("refuses to add an existing handle or remove a non-handle", () => {
    const store = new HandleStore();
    store.beginAdd(7);
    store.resolveAdd(7, [0, 0, 0]);
    expect(store.beginAdd(7)).toBe(false);
    expect(store.beginRemove(8)).toBe(false);
  });

  it("canMove requires an acknowledged handle with no pending removal", () => {
    const store = new HandleStore();
    expect(store.canMove(2)).toBe(false);
    store.beginAdd(2);
    expect(store.canMove(2)).toBe(false); // not acked yet
    store.resolveAdd(2, [0, 0, 0]);
    expect(store.canMove(2)).toBe(true);
    store.beginRemove(2);
    expect(store.canMove(2)).toBe(false); // removal in flight
    store.failRemove(2);
    expect(store.canMove(2)).toBe(true);
  });

  it("setTarget updates only existing handles", () => {
    const store = new HandleStore();
    store.beginAdd(1);
    store.resolveAdd(1, [0, 0, 0]);
    expect(store.setTarget(1, [9, 9, 9])).toBe(true);
    expect(store.target(1)).toEqual([9, 9, 9]);
    expect(store.setTarget(2, [1, 1, 1])).toBe(false);
  });

  it("markers are sorted by vertex for stable rendering", () => {
    const store = new HandleStore();
    for (const vertex of [9, 2, 5]) {
      store.beginAdd(vertex);
      store.resolveAdd(vertex, [vertex, 0, 0]);
    }
    expect(store.markers().map((m) => m.vertex)).toEqual([2, 5, 9]);
  });

  it("reset clears markers and in-flight state", () => {
    const store = new HandleStore();
    store.beginAdd(1);
    store.resolveAdd(1, [0, 0, 0]);
    store.beginAdd(2);
    store.reset();
    expect(store.markers()).toEqual([]);
    expect(store.busy).toBe(false);
    expect(store.beginAdd(3)).toBe(true);
  });
});
