/**
 * Dragging lifts 2D pointer motion into 3D by intersecting the pointer ray
 * with the camera-parallel plane through the handle's current position —
 * the handle follows the cursor without jumping in depth.
 */

import type { Vec3 } from "./handles";

export interface Ray {
  origin: Vec3;
  /** Direction; need not be normalized. */
  dir: Vec3;
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/**
 * Intersect `ray` with the plane through `handle` whose normal is the camera
 * view direction. Returns null when the ray runs parallel to the plane or
 * the hit lies behind the ray origin.
 */
export function liftToCameraPlane(handle: Vec3, viewDir: Vec3, ray: Ray): Vec3 | null {
  const denom = dot(viewDir, ray.dir);
  if (Math.abs(denom) < 1e-12) return null;
  const toPlane: Vec3 = [
    handle[0] - ray.origin[0],
    handle[1] - ray.origin[1],
    handle[2] - ray.origin[2],
  ];
  const t = dot(viewDir, toPlane) / denom;
  if (t < 0) return null;
  return [
    ray.origin[0] + t * ray.dir[0],
    ray.origin[1] + t * ray.dir[1],
    ray.origin[2] + t * ray.dir[2],
  ];
}
