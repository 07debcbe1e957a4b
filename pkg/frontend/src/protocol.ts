// Wire protocol shared with the session server.
//
// Control messages are JSON; mesh frames are binary little-endian:
//   [revision: u64][count: u32][positions: f32 x 3 x count]

export interface SessionInit {
  kind: 'session_init';
  revision: number;
  vertex_count: number;
  triangle_count: number;
  region_count: number;
  connectivity_hash: string;
  triangles_b64: string;
  face_labels_b64: string;
  boundaries: [number, number][];
  polylines: { pair: [number, number]; points: number[][]; closed: boolean }[];
  params: ParamState;
  bbox: [number[], number[]];
  pyramid_levels: number;
}

export interface ParamState {
  lambda_d: number;
  lambda_f: number;
  lambda_a: number;
  lambda_e: number;
  lambda_v: number;
  lambda_n: number;
  mu: number;
  smoothing_default: number;
  use_lanteri: boolean;
  mu_per_region: Record<string, number>;
  edge_scales: Record<string, number>;
  edge_smoothing: Record<string, number>;
}

export interface EnergyReport {
  kind: 'energy_report';
  revision: number;
  energy: number;
  cost: number;
  iterations: number;
  converged: boolean;
}

export interface Ack {
  kind: 'ack';
  revision: number;
  changed: boolean;
  exported?: string;
}

export interface ErrorMessage {
  kind: 'error';
  message: string;
}

export type ServerMessage = SessionInit | EnergyReport | Ack | ErrorMessage;

export type ClientMessage =
  | { kind: 'set_global'; param: string; value: number }
  | { kind: 'set_edge_weight'; region_a: number; region_b: number; scale: number }
  | { kind: 'set_edge_smoothing'; region_a: number; region_b: number; scale: number }
  | { kind: 'set_face_planarization'; region: number; mu: number }
  | { kind: 'toggle_lanteri'; enabled: boolean }
  | { kind: 'request_export'; path: string };

export interface MeshFrame {
  revision: number;
  positions: Float32Array; // 3 * count
  count: number;
}

export function decodeFrame(buffer: ArrayBuffer): MeshFrame {
  if (buffer.byteLength < 12) {
    throw new Error(`frame too short: ${buffer.byteLength} bytes`);
  }
  const view = new DataView(buffer);
  const revision = Number(view.getBigUint64(0, true));
  const count = view.getUint32(8, true);
  if (buffer.byteLength !== 12 + 12 * count) {
    throw new Error(`frame length mismatch: ${buffer.byteLength} for count ${count}`);
  }
  const positions = new Float32Array(buffer, 12, 3 * count);
  return { revision, count, positions };
}

export function encodeFrame(revision: number, positions: Float32Array): ArrayBuffer {
  const count = positions.length / 3;
  const out = new ArrayBuffer(12 + positions.byteLength);
  const view = new DataView(out);
  view.setBigUint64(0, BigInt(revision), true);
  view.setUint32(8, count, true);
  new Float32Array(out, 12).set(positions);
  return out;
}

const B64 = 'ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/';
const B64_INDEX = new Map([...B64].map((c, i) => [c, i]));

export function decodeBase64(text: string): Uint8Array {
  const clean = text.replace(/=+$/, '');
  const out = new Uint8Array(Math.floor((clean.length * 3) / 4));
  let acc = 0;
  let bits = 0;
  let j = 0;
  for (const ch of clean) {
    const v = B64_INDEX.get(ch);
    if (v === undefined) throw new Error(`bad base64 character ${ch}`);
    acc = (acc << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out[j++] = (acc >> bits) & 0xff;
    }
  }
  return out;
}

export function decodeTriangles(init: SessionInit): Int32Array {
  const bytes = decodeBase64(init.triangles_b64);
  return new Int32Array(bytes.buffer, bytes.byteOffset, init.triangle_count * 3);
}

export function decodeFaceLabels(init: SessionInit): Int32Array {
  const bytes = decodeBase64(init.face_labels_b64);
  return new Int32Array(bytes.buffer, bytes.byteOffset, init.triangle_count);
}

export function pairKey(a: number, b: number): string {
  return a < b ? `${a}-${b}` : `${b}-${a}`;
}
