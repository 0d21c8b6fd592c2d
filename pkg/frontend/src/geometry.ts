/** Client-side polygon helpers: hit testing with the same even-odd
 * convention the server's rasterizer uses, snap-to-close for sketching,
 * and simple self-intersection detection (warn-only; the server accepts
 * self-intersecting rings and fills them even-odd). */

import type { InstanceJson, Point } from "./types.js";

export const SNAP_RADIUS_PX = 8;

/** Even-odd crossing test; matches the server rule that a boundary
 * crossing at-or-left of the query x toggles parity. */
export function pointInRing(x: number, y: number, ring: Point[]): boolean {
  let inside = false;
  const n = ring.length;
  for (let i = 0; i < n; i++) {
    const [x0, y0] = ring[i];
    const [x1, y1] = ring[(i + 1) % n];
    const [ylo, yhi] = y0 <= y1 ? [y0, y1] : [y1, y0];
    if (ylo <= y && y < yhi) {
      const t = (y - y0) / (y1 - y0);
      const xc = x0 + t * (x1 - x0);
      if (xc <= x) inside = !inside;
    }
  }
  return inside;
}

export function pointInRings(x: number, y: number, rings: Point[][]): boolean {
  let inside = false;
  for (const ring of rings) {
    if (pointInRing(x, y, ring)) inside = !inside;
  }
  return inside;
}

export function ringArea(ring: Point[]): number {
  let acc = 0;
  for (let i = 0; i < ring.length; i++) {
    const [x0, y0] = ring[i];
    const [x1, y1] = ring[(i + 1) % ring.length];
    acc += x0 * y1 - x1 * y0;
  }
  return Math.abs(acc) / 2;
}

/** Smallest instance (by polygon area) whose rings contain the point;
 * mirrors the server's painter ordering so clicks select what is drawn
 * on top. Returns null on background. */
export function hitTest(
  instances: InstanceJson[],
  x: number,
  y: number,
): number | null {
  let best: { area: number; id: number } | null = null;
  for (const inst of instances) {
    if (!pointInRings(x, y, inst.rings)) continue;
    const area = inst.rings.reduce((s, r) => s + ringArea(r), 0);
    if (
      best === null ||
      area < best.area ||
      (area === best.area && inst.id > best.id)
    ) {
      best = { area, id: inst.id };
    }
  }
  return best ? best.id : null;
}

/** True when a click at (x, y) should close the draft polygon: within
 * the snap radius of the first vertex and at least 3 points drawn. */
export function shouldClose(points: Point[], x: number, y: number): boolean {
  if (points.length < 3) return false;
  const [x0, y0] = points[0];
  return Math.hypot(x - x0, y - y0) <= SNAP_RADIUS_PX;
}

function segmentsIntersect(a: Point, b: Point, c: Point, d: Point): boolean {
  const cross = (o: Point, p: Point, q: Point) =>
    (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0]);
  const d1 = cross(c, d, a);
  const d2 = cross(c, d, b);
  const d3 = cross(a, b, c);
  const d4 = cross(a, b, d);
  return ((d1 > 0) !== (d2 > 0)) && ((d3 > 0) !== (d4 > 0));
}

/** Non-adjacent edge pair intersection check for the sketch warning. */
export function isSelfIntersecting(ring: Point[]): boolean {
  const n = ring.length;
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      if (j === i || (j + 1) % n === i || (i + 1) % n === j) continue;
      if (
        segmentsIntersect(
          ring[i],
          ring[(i + 1) % n],
          ring[j],
          ring[(j + 1) % n],
        )
      ) {
        return true;
      }
    }
  }
  return false;
}
