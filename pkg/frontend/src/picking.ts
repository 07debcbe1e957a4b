// Ray-based picking: nearest boundary polyline within a pixel threshold
// for per-edge edits, and ray/triangle tests for region picking.

export interface Ray {
  origin: [number, number, number];
  direction: [number, number, number]; // unit
}

type V3 = [number, number, number];

function sub(a: ArrayLike<number>, b: ArrayLike<number>): V3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function dot(a: ArrayLike<number>, b: ArrayLike<number>): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

function cross(a: ArrayLike<number>, b: ArrayLike<number>): V3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

/** Shortest distance between a ray and a segment [p, q]. */
export function raySegmentDistance(ray: Ray, p: ArrayLike<number>, q: ArrayLike<number>): number {
  const u = ray.direction;
  const v = sub(q, p);
  const w = sub(ray.origin, p);
  const a = dot(u, u);
  const b = dot(u, v);
  const c = dot(v, v);
  const d = dot(u, w);
  const e = dot(v, w);
  const denom = a * c - b * b;
  let s: number; // along the ray
  let t: number; // along the segment
  if (denom > 1e-12) {
    s = (b * e - c * d) / denom;
    t = (a * e - b * d) / denom;
  } else {
    s = -d / a; // parallel: project segment start onto the ray
    t = 0;
  }
  s = Math.max(s, 0);
  t = Math.min(Math.max(t, 0), 1);
  // refine the clamped coordinate pair once
  s = Math.max((b * t - d) / a, 0);
  const closestRay: V3 = [
    ray.origin[0] + s * u[0],
    ray.origin[1] + s * u[1],
    ray.origin[2] + s * u[2],
  ];
  const closestSeg: V3 = [p[0] + t * v[0], p[1] + t * v[1], p[2] + t * v[2]];
  const diff = sub(closestRay, closestSeg);
  return Math.sqrt(dot(diff, diff));
}

export interface Polyline {
  pair: [number, number];
  points: number[][];
  closed: boolean;
}

/** Nearest polyline to the ray, or null when none is within threshold. */
export function pickBoundary(
  ray: Ray,
  polylines: Polyline[],
  threshold: number,
): { pair: [number, number]; distance: number } | null {
  let best: { pair: [number, number]; distance: number } | null = null;
  for (const pl of polylines) {
    const n = pl.points.length;
    const last = pl.closed ? n : n - 1;
    for (let i = 0; i < last; i++) {
      const d = raySegmentDistance(ray, pl.points[i], pl.points[(i + 1) % n]);
      if (d <= threshold && (best === null || d < best.distance)) {
        best = { pair: pl.pair, distance: d };
      }
    }
  }
  return best;
}

/** Moller-Trumbore ray/triangle intersection; returns t or null. */
export function rayTriangle(
  ray: Ray,
  a: ArrayLike<number>,
  b: ArrayLike<number>,
  c: ArrayLike<number>,
): number | null {
  const e1 = sub(b, a);
  const e2 = sub(c, a);
  const p = cross(ray.direction, e2);
  const det = dot(e1, p);
  if (Math.abs(det) < 1e-12) return null;
  const inv = 1 / det;
  const tvec = sub(ray.origin, a);
  const u = dot(tvec, p) * inv;
  if (u < 0 || u > 1) return null;
  const q = cross(tvec, e1);
  const v = dot(ray.direction, q) * inv;
  if (v < 0 || u + v > 1) return null;
  const t = dot(e2, q) * inv;
  return t > 1e-9 ? t : null;
}

/** Front-most face hit by the ray; returns its region label or null. */
export function pickRegion(
  ray: Ray,
  positions: Float32Array,
  triangles: Int32Array,
  faceLabels: Int32Array,
): { face: number; region: number; t: number } | null {
  let best: { face: number; region: number; t: number } | null = null;
  const m = triangles.length / 3;
  for (let f = 0; f < m; f++) {
    const ia = triangles[3 * f] * 3;
    const ib = triangles[3 * f + 1] * 3;
    const ic = triangles[3 * f + 2] * 3;
    const t = rayTriangle(
      ray,
      positions.subarray(ia, ia + 3),
      positions.subarray(ib, ib + 3),
      positions.subarray(ic, ic + 3),
    );
    if (t !== null && (best === null || t < best.t)) {
      best = { face: f, region: faceLabels[f], t };
    }
  }
  return best;
}
