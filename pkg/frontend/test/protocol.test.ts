import { describe, expect, it } from 'vitest';

import {
  decodeBase64,
  decodeFrame,
  encodeFrame,
  pairKey,
} from '../src/protocol.js';

describe('binary frame codec', () => {
  it('round-trips a frame', () => {
    const positions = new Float32Array([0, 1, 2, 3.5, -4, 5, 6, 7, 8]);
    const buf = encodeFrame(42, positions);
    expect(buf.byteLength).toBe(12 + 12 * 3);
    const frame = decodeFrame(buf);
    expect(frame.revision).toBe(42);
    expect(frame.count).toBe(3);
    expect([...frame.positions]).toEqual([...positions]);
  });

  it('parses the documented little-endian layout', () => {
    // [revision u64][count u32][f32 x 3n], all little-endian
    const buf = new ArrayBuffer(12 + 12);
    const view = new DataView(buf);
    view.setBigUint64(0, 7n, true);
    view.setUint32(8, 1, true);
    view.setFloat32(12, 1.5, true);
    view.setFloat32(16, -2.0, true);
    view.setFloat32(20, 0.25, true);
    const frame = decodeFrame(buf);
    expect(frame.revision).toBe(7);
    expect([...frame.positions]).toEqual([1.5, -2.0, 0.25]);
  });

  it('rejects truncated and mismatched payloads', () => {
    expect(() => decodeFrame(new ArrayBuffer(4))).toThrow(/too short/);
    const bad = new ArrayBuffer(12 + 11);
    new DataView(bad).setUint32(8, 1, true);
    expect(() => decodeFrame(bad)).toThrow(/mismatch/);
  });
});

describe('base64', () => {
  it('decodes reference vectors', () => {
    expect([...decodeBase64('AQID')]).toEqual([1, 2, 3]);
    expect([...decodeBase64('AA==')]).toEqual([0]);
    expect([...decodeBase64('')]).toEqual([]);
  });

  it('decodes int32 triangle payloads', () => {
    const tri = new Int32Array([0, 1, 2, 2, 1, 3]);
    const b64 = Buffer.from(new Uint8Array(tri.buffer)).toString('base64');
    const bytes = decodeBase64(b64);
    const back = new Int32Array(bytes.buffer, bytes.byteOffset, 6);
    expect([...back]).toEqual([...tri]);
  });

  it('rejects garbage', () => {
    expect(() => decodeBase64('@@')).toThrow(/bad base64/);
  });
});

describe('pair keys', () => {
  it('normalizes order', () => {
    expect(pairKey(3, 1)).toBe('1-3');
    expect(pairKey(1, 3)).toBe('1-3');
  });
});
