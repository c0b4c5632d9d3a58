import { describe, expect, it } from "vitest";

import { FrameGate } from "../src/frames";

describe("frame ordering gate", () => {
  it("accepts strictly increasing iterations", () => {
    const gate = new FrameGate();
    expect(gate.accept(1)).toBe(true);
    expect(gate.accept(2)).toBe(true);
    expect(gate.accept(7)).toBe(true);
    expect(gate.lastApplied).toBe(7);
  });

  it("drops a stale frame arriving after a newer one", () => {
    const gate = new FrameGate();
    expect(gate.accept(5)).toBe(true);
    expect(gate.accept(3)).toBe(false);
    expect(gate.accept(5)).toBe(false);
    expect(gate.lastApplied).toBe(5);
    expect(gate.accept(6)).toBe(true);
  });

  it("rejects non-finite iteration counters", () => {
    const gate = new FrameGate();
    expect(gate.accept(Number.NaN)).toBe(false);
    expect(gate.accept(Number.POSITIVE_INFINITY)).toBe(false);
    expect(gate.accept(1)).toBe(true);
  });

  it("reset lets a new session reuse low iteration numbers", () => {
    const gate = new FrameGate();
    gate.accept(40);
    expect(gate.accept(1)).toBe(false);
    gate.reset();
    expect(gate.accept(1)).toBe(true);
  });
});
