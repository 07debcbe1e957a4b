import { describe, expect, it } from 'vitest';

import { encodeFrame, SessionInit } from '../src/protocol.js';
import { UiSessionModel } from '../src/state.js';

function makeInit(overrides: Partial<SessionInit> = {}): SessionInit {
  return {
    kind: 'session_init',
    revision: 0,
    vertex_count: 2,
    triangle_count: 1,
    region_count: 2,
    connectivity_hash: 'abc',
    triangles_b64: '',
    face_labels_b64: '',
    boundaries: [[1, 2]],
    polylines: [],
    params: {
      lambda_d: 1,
      lambda_f: 1,
      lambda_a: 10,
      lambda_e: 4,
      lambda_v: 60,
      lambda_n: 1,
      mu: 0,
      smoothing_default: 0,
      use_lanteri: true,
      mu_per_region: {},
      edge_scales: {},
      edge_smoothing: {},
    },
    bbox: [
      [0, 0, 0],
      [1, 1, 1],
    ],
    pyramid_levels: 8,
    ...overrides,
  };
}

describe('UiSessionModel', () => {
  it('applies frames in order and keeps the revision invariant', () => {
    const m = new UiSessionModel();
    m.applyInit(makeInit());
    const f0 = encodeFrame(0, new Float32Array(6));
    expect(m.applyFrameBuffer(f0)).not.toBeNull();
    expect(m.renderedRevision).toBe(0);
    const f2 = encodeFrame(2, new Float32Array([1, 0, 0, 0, 1, 0]));
    m.applyFrameBuffer(f2);
    expect(m.renderedRevision).toBe(2);
    // stale frame is ignored, geometry stays at revision 2
    const f1 = encodeFrame(1, new Float32Array(6));
    expect(m.applyFrameBuffer(f1)).toBeNull();
    expect(m.renderedRevision).toBe(2);
    expect(m.invariantHolds()).toBe(true);
  });

  it('keeps the revision-0 frame for the original/stylized toggle', () => {
    const m = new UiSessionModel();
    m.applyInit(makeInit());
    const original = new Float32Array([0, 0, 0, 1, 0, 0]);
    m.applyFrameBuffer(encodeFrame(0, original));
    m.applyFrameBuffer(encodeFrame(1, new Float32Array([5, 5, 5, 6, 6, 6])));
    expect([...m.originalPositions!]).toEqual([...original]);
    expect(m.positions![0]).toBe(5);
  });

  it('requests a resync when the frame no longer matches connectivity', () => {
    const m = new UiSessionModel();
    m.applyInit(makeInit({ vertex_count: 3 }));
    m.applyFrameBuffer(encodeFrame(0, new Float32Array(9)));
    expect(m.needsResync).toBe(false);
    m.applyFrameBuffer(encodeFrame(1, new Float32Array(6))); // 2 verts != 3
    expect(m.needsResync).toBe(true);
  });

  it('mirrors parameter edits until acknowledged', () => {
    const m = new UiSessionModel();
    m.applyInit(makeInit());
    m.mirrorEdit('set_global', { param: 'lambda_d', value: 2.2 });
    expect(m.params!.lambda_d).toBe(2.2);
    m.mirrorEdit('set_edge_weight', { region_a: 2, region_b: 1, scale: 1.5 });
    expect(m.params!.edge_scales['1-2']).toBe(1.5);
    m.mirrorEdit('set_face_planarization', { region: 2, mu: 0.7 });
    expect(m.params!.mu_per_region['2']).toBe(0.7);
    m.mirrorEdit('toggle_lanteri', { enabled: false });
    expect(m.params!.use_lanteri).toBe(false);
  });

  it('collects server errors and energy reports', () => {
    const m = new UiSessionModel();
    m.applyInit(makeInit());
    m.applyServerMessage({ kind: 'error', message: 'nope' });
    expect(m.errors).toEqual(['nope']);
    m.applyServerMessage({
      kind: 'energy_report', revision: 3, energy: 1.5, cost: 2.0,
      iterations: 4, converged: false,
    });
    expect(m.serverRevision).toBe(3);
    expect(m.lastEnergy).toBe(1.5);
    expect(m.converged).toBe(false);
  });
});
