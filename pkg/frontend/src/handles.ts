/**
 * Client-side mirror of the server's constraint set.
 *
 * Markers reflect only *acknowledged* handles: an add or remove first goes
 * in flight (at most one at a time) and the marker set changes when the Ack
 * lands. Move targets are tracked per handle so markers sit where the server
 * pins the vertex.
 */

export type Vec3 = readonly [number, number, number];

export interface HandleMarker {
  vertex: number;
  position: Vec3;
}

interface InFlight {
  kind: "add" | "remove";
  vertex: number;
}

export class HandleStore {
  private acked = new Map<number, Vec3>();
  private inFlight: InFlight | null = null;

  /** True while an add/remove awaits its Ack; no second mutation may start. */
  get busy(): boolean {
    return this.inFlight !== null;
  }

  get pending(): InFlight | null {
    return this.inFlight;
  }

  isHandle(vertex: number): boolean {
    return this.acked.has(vertex);
  }

  /** A handle may be retargeted unless its removal is already in flight. */
  canMove(vertex: number): boolean {
    return this.acked.has(vertex) && this.inFlight?.vertex !== vertex;
  }

  /** Acknowledged handles only, in vertex order. */
  markers(): HandleMarker[] {
    return [...this.acked.entries()]
      .sort((a, b) => a[0] - b[0])
      .map(([vertex, position]) => ({ vertex, position }));
  }

  target(vertex: number): Vec3 | undefined {
    return this.acked.get(vertex);
  }

  /** Start adding; false when busy or the vertex is already a handle. */
  beginAdd(vertex: number): boolean {
    if (this.inFlight !== null || this.acked.has(vertex)) return false;
    this.inFlight = { kind: "add", vertex };
    return true;
  }

  /** The server pinned the vertex (at its current position). */
  resolveAdd(vertex: number, position: Vec3): void {
    this.clearInFlight("add", vertex);
    this.acked.set(vertex, position);
  }

  failAdd(vertex: number): void {
    this.clearInFlight("add", vertex);
  }

  /** Start removing; false when busy or the vertex is not a handle. */
  beginRemove(vertex: number): boolean {
    if (this.inFlight !== null || !this.acked.has(vertex)) return false;
    this.inFlight = { kind: "remove", vertex };
    return true;
  }

  resolveRemove(vertex: number): void {
    this.clearInFlight("remove", vertex);
    this.acked.delete(vertex);
  }

  failRemove(vertex: number): void {
    this.clearInFlight("remove", vertex);
  }

  /** Record an acknowledged retarget; false for non-handles. */
  setTarget(vertex: number, position: Vec3): boolean {
    if (!this.acked.has(vertex)) return false;
    this.acked.set(vertex, position);
    return true;
  }

  /** Drop everything (new mesh or new connection: the server set is empty). */
  reset(): void {
    this.acked.clear();
    this.inFlight = null;
  }

  private clearInFlight(kind: InFlight["kind"], vertex: number): void {
    if (this.inFlight?.kind === kind && this.inFlight.vertex === vertex) {
      this.inFlight = null;
    }
  }
}
