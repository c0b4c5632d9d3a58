/**
 * Screen-space vertex picking: project every vertex with the current camera
 * and take the nearest one within a pixel radius of the cursor. Pure math —
 * the renderer supplies a projector (or a view-projection matrix), so the
 * result is exactly reproducible in tests.
 */

export interface ScreenPoint {
  x: number;
  y: number;
}

export interface ProjectedPoint {
  x: number;
  y: number;
  /** NDC depth in [-1, 1]; used to break pixel-distance ties. */
  depth: number;
}

/** Maps a world position to pixels, or null when off-frustum. */
export type Projector = (x: number, y: number, z: number) => ProjectedPoint | null;

/**
 * Build a projector from a column-major 4x4 view-projection matrix (the
 * layout of `THREE.Matrix4.elements`) and the viewport size in CSS pixels.
 * Screen y grows downward, matching pointer-event coordinates.
 */
export function projectorFromMatrix(
  viewProjection: ArrayLike<number>,
  width: number,
  height: number,
): Projector {
  const m = viewProjection;
  return (x, y, z) => {
    const clipX = m[0]! * x + m[4]! * y + m[8]! * z + m[12]!;
    const clipY = m[1]! * x + m[5]! * y + m[9]! * z + m[13]!;
    const clipZ = m[2]! * x + m[6]! * y + m[10]! * z + m[14]!;
    const clipW = m[3]! * x + m[7]! * y + m[11]! * z + m[15]!;
    if (clipW <= 0) return null; // behind the camera
    const ndcX = clipX / clipW;
    const ndcY = clipY / clipW;
    const ndcZ = clipZ / clipW;
    if (ndcZ < -1 || ndcZ > 1) return null; // outside near/far
    return {
      x: ((ndcX + 1) / 2) * width,
      y: ((1 - ndcY) / 2) * height,
      depth: ndcZ,
    };
  };
}

/**
 * Nearest projected vertex within `radiusPx` of `point`, or null (empty
 * background, or everything too far). Ties on pixel distance go to the
 * vertex nearer the camera, then to the lower index, so hovering is stable.
 */
export function pickVertex(
  positions: ArrayLike<number>,
  project: Projector,
  point: ScreenPoint,
  radiusPx: number,
): number | null {
  const count = Math.floor(positions.length / 3);
  const radiusSq = radiusPx * radiusPx;
  let best: number | null = null;
  let bestDistSq = Infinity;
  let bestDepth = Infinity;
  for (let v = 0; v < count; v++) {
    const p = project(positions[3 * v]!, positions[3 * v + 1]!, positions[3 * v + 2]!);
    if (p === null) continue;
    const dx = p.x - point.x;
    const dy = p.y - point.y;
    const distSq = dx * dx + dy * dy;
    if (distSq > radiusSq) continue;
    if (distSq < bestDistSq || (distSq === bestDistSq && p.depth < bestDepth)) {
      best = v;
      bestDistSq = distSq;
      bestDepth = p.depth;
    }
  }
  return best;
}
