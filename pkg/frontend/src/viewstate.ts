/**
 * UI-level state: connection, hover/selection, the single active drag, and
 * the lambda slider. Kept apart from rendering so the transitions are plain
 * functions.
 */

export const LAMBDA_DEFAULT = 0.95;
/** Quick preset for taming artifacts at very sparse constraints. */
export const LAMBDA_ARTIFACT_PRESET = 0.7;
export const LAMBDA_MAX = 0.999;

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface DragState {
  vertex: number;
  pointerId: number;
}

export interface ViewState {
  connection: ConnectionStatus;
  hovered: number | null;
  drag: DragState | null;
  lambda: number;
  wireframe: boolean;
}

export function initialViewState(): ViewState {
  return {
    connection: "connecting",
    hovered: null,
    drag: null,
    lambda: LAMBDA_DEFAULT,
    wireframe: false,
  };
}

export function clampLambda(value: number): number {
  if (!Number.isFinite(value)) return LAMBDA_DEFAULT;
  return Math.min(Math.max(value, 0), LAMBDA_MAX);
}

/** At most one drag at a time; false when one is already active. */
export function beginDrag(state: ViewState, vertex: number, pointerId: number): boolean {
  if (state.drag !== null) return false;
  state.drag = { vertex, pointerId };
  return true;
}

/** Ends the drag owned by `pointerId`; false for any other pointer. */
export function endDrag(state: ViewState, pointerId: number): boolean {
  if (state.drag === null || state.drag.pointerId !== pointerId) return false;
  state.drag = null;
  return true;
}
