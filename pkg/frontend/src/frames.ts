/**
 * Frame ordering: the service stamps every Frame with a session-wide,
 * strictly increasing iteration counter. Rendering must apply frames in
 * that order and drop anything stale.
 */
export class FrameGate {
  private last = 0;

  /** True when the frame is fresh and its counter was consumed. */
  accept(iteration: number): boolean {
    if (!Number.isFinite(iteration) || iteration <= this.last) return false;
    this.last = iteration;
    return true;
  }

  get lastApplied(): number {
    return this.last;
  }

  /** Forget all progress (new mesh, new connection). */
  reset(): void {
    this.last = 0;
  }
}
