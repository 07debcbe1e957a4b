// Client-side session model. Geometry is never mutated locally: the
// rendered positions always come from server frames; edits only adjust
// the parameter mirror, which converges to the server state via acks.

import {
  MeshFrame,
  ParamState,
  SessionInit,
  ServerMessage,
  decodeFrame,
  pairKey,
} from './protocol.js';

export interface Selection {
  kind: 'boundary' | 'region' | 'none';
  pair?: [number, number];
  region?: number;
}

export class UiSessionModel {
  init: SessionInit | null = null;
  originalPositions: Float32Array | null = null; // revision-0 frame for A/B
  positions: Float32Array | null = null;
  renderedRevision = -1;
  serverRevision = -1;
  params: ParamState | null = null;
  selection: Selection = { kind: 'none' };
  needsResync = false;
  lastEnergy: number | null = null;
  converged = true;
  errors: string[] = [];

  applyInit(init: SessionInit): void {
    this.init = init;
    this.serverRevision = init.revision;
    this.params = init.params;
    this.needsResync = false;
  }

  applyServerMessage(msg: ServerMessage): void {
    switch (msg.kind) {
      case 'session_init':
        this.applyInit(msg);
        break;
      case 'energy_report':
        this.serverRevision = Math.max(this.serverRevision, msg.revision);
        this.lastEnergy = msg.energy;
        this.converged = msg.converged;
        break;
      case 'ack':
        this.serverRevision = Math.max(this.serverRevision, msg.revision);
        break;
      case 'error':
        this.errors.push(msg.message);
        break;
    }
  }

  applyFrameBuffer(buffer: ArrayBuffer): MeshFrame | null {
    return this.applyFrame(decodeFrame(buffer));
  }

  applyFrame(frame: MeshFrame): MeshFrame | null {
    if (this.init && frame.count !== this.init.vertex_count) {
      // connectivity no longer matches the streamed frames
      this.needsResync = true;
      return null;
    }
    if (frame.revision < this.renderedRevision) {
      return null; // stale frame out of order; ignore
    }
    if (frame.revision === 0 || this.originalPositions === null) {
      this.originalPositions = frame.positions.slice();
    }
    this.positions = frame.positions;
    this.renderedRevision = frame.revision;
    this.serverRevision = Math.max(this.serverRevision, frame.revision);
    return frame;
  }

  // local mirror of an outgoing edit (server remains authoritative)
  mirrorEdit(kind: string, payload: Record<string, unknown>): void {
    if (!this.params) return;
    if (kind === 'set_global') {
      (this.params as unknown as Record<string, number>)[payload.param as string] =
        payload.value as number;
    } else if (kind === 'set_edge_weight') {
      this.params.edge_scales[pairKey(payload.region_a as number, payload.region_b as number)] =
        payload.scale as number;
    } else if (kind === 'set_edge_smoothing') {
      this.params.edge_smoothing[pairKey(payload.region_a as number, payload.region_b as number)] =
        payload.scale as number;
    } else if (kind === 'set_face_planarization') {
      this.params.mu_per_region[String(payload.region)] = payload.mu as number;
    } else if (kind === 'toggle_lanteri') {
      this.params.use_lanteri = payload.enabled as boolean;
    }
  }

  invariantHolds(): boolean {
    return this.renderedRevision <= this.serverRevision;
  }
}
