// Studio entry point: connect to the live service, render streamed
// frames, and wire the parameter controls.

import { StudioClient, parseServerJson } from './client.js';
import { pickBoundary, pickRegion } from './picking.js';
import {
  ClientMessage,
  decodeFaceLabels,
  decodeTriangles,
} from './protocol.js';
import { Camera, MeshRenderer, overlaySegments, rayFromScreen } from './renderer.js';
import { UiSessionModel } from './state.js';
import { Throttle } from './throttle.js';

const SERVICE_URL = `ws://${location.hostname || 'localhost'}:7870/ws`;
const MAX_MESSAGE_RATE_MS = 50; // <= 20 messages per second

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function main(): void {
  const canvas = el<HTMLCanvasElement>('viewport');
  const renderer = new MeshRenderer(canvas);
  const model = new UiSessionModel();
  const banner = el<HTMLDivElement>('banner');
  const client = new StudioClient(null, (dropped) => {
    banner.textContent = `disconnected: ${dropped} edits dropped`;
    banner.style.display = 'block';
  });
  let triangles: Int32Array | null = null;
  let faceLabels: Int32Array | null = null;
  let showOriginal = false;
  const camera: Camera = { theta: 0, phi: 0.15, distance: 4, target: [0, 0, 0] };

  const sendEdit = (msg: ClientMessage) => {
    model.mirrorEdit(msg.kind, msg as unknown as Record<string, unknown>);
    client.send(msg);
  };
  const globalThrottles = new Map<string, Throttle<number>>();
  const throttledGlobal = (param: string, value: number) => {
    let t = globalThrottles.get(param);
    if (!t) {
      t = new Throttle<number>(
        (v) => sendEdit({ kind: 'set_global', param, value: v }),
        MAX_MESSAGE_RATE_MS,
      );
      globalThrottles.set(param, t);
    }
    t.push(value);
  };

  function connect(): void {
    const ws = new WebSocket(SERVICE_URL);
    ws.binaryType = 'arraybuffer';
    ws.onopen = () => {
      banner.style.display = 'none';
      client.attach({ send: (d) => ws.send(d), get readyState() { return ws.readyState; } });
    };
    ws.onmessage = (ev: MessageEvent) => {
      if (ev.data instanceof ArrayBuffer) {
        const frame = model.applyFrameBuffer(ev.data);
        if (frame && !showOriginal) renderer.updatePositions(frame.positions);
        if (model.needsResync) {
          ws.close(); // reconnect replays connectivity + latest frame
        }
        updateHud();
        return;
      }
      const msg = parseServerJson(ev.data as string);
      model.applyServerMessage(msg);
      if (msg.kind === 'session_init') {
        triangles = decodeTriangles(msg);
        faceLabels = decodeFaceLabels(msg);
        renderer.setConnectivity(triangles, msg.vertex_count);
        renderer.setOverlay(overlaySegments(msg.polylines));
        const [lo, hi] = msg.bbox;
        camera.target = [(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2];
        camera.distance = 2.5 * Math.hypot(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]);
        syncSliders();
      } else if (msg.kind === 'error') {
        banner.textContent = msg.message;
        banner.style.display = 'block';
      }
      updateHud();
    };
    ws.onclose = () => {
      client.detach();
      banner.textContent = 'disconnected, retrying...';
      banner.style.display = 'block';
      setTimeout(connect, 1000);
    };
  }

  function updateHud(): void {
    el<HTMLSpanElement>('revision').textContent = String(model.renderedRevision);
    el<HTMLSpanElement>('energy').textContent =
      model.lastEnergy === null ? '-' : model.lastEnergy.toFixed(4);
    el<HTMLSpanElement>('converged').textContent = model.converged ? 'settled' : 'optimizing';
    const sel = model.selection;
    el<HTMLSpanElement>('selection').textContent =
      sel.kind === 'boundary' ? `boundary ${sel.pair![0]}|${sel.pair![1]}`
        : sel.kind === 'region' ? `region ${sel.region}` : 'none';
  }

  function syncSliders(): void {
    if (!model.params) return;
    el<HTMLInputElement>('lambda-d').value = String(model.params.lambda_d);
    el<HTMLInputElement>('mu').value = String(model.params.mu);
    el<HTMLInputElement>('smooth').value = String(model.params.smoothing_default);
    el<HTMLInputElement>('lanteri').checked = model.params.use_lanteri;
  }

  // global sliders (clamped client-side to the parameter ranges)
  el<HTMLInputElement>('lambda-d').addEventListener('input', (e) => {
    const v = Math.min(Math.max((e.target as HTMLInputElement).valueAsNumber, 0), 2.999);
    throttledGlobal('lambda_d', v);
  });
  el<HTMLInputElement>('mu').addEventListener('input', (e) => {
    const v = Math.min(Math.max((e.target as HTMLInputElement).valueAsNumber, 0), 1);
    throttledGlobal('mu', v);
  });
  el<HTMLInputElement>('smooth').addEventListener('input', (e) => {
    const v = Math.max((e.target as HTMLInputElement).valueAsNumber, 0);
    throttledGlobal('smoothing_default', v);
  });
  el<HTMLInputElement>('lanteri').addEventListener('change', (e) => {
    sendEdit({ kind: 'toggle_lanteri', enabled: (e.target as HTMLInputElement).checked });
  });
  el<HTMLInputElement>('overlay').addEventListener('change', (e) => {
    renderer.overlayVisible = (e.target as HTMLInputElement).checked;
  });
  el<HTMLInputElement>('show-original').addEventListener('change', (e) => {
    showOriginal = (e.target as HTMLInputElement).checked;
    const pos = showOriginal ? model.originalPositions : model.positions;
    if (pos) renderer.updatePositions(pos);
  });
  el<HTMLInputElement>('selection-value').addEventListener('input', (e) => {
    const v = (e.target as HTMLInputElement).valueAsNumber;
    const sel = model.selection;
    const mode = el<HTMLSelectElement>('edge-mode').value;
    if (sel.kind === 'boundary' && sel.pair) {
      const [a, b] = sel.pair;
      if (mode === 'smoothing') {
        sendEdit({ kind: 'set_edge_smoothing', region_a: a, region_b: b, scale: Math.max(v, 0) });
      } else {
        sendEdit({ kind: 'set_edge_weight', region_a: a, region_b: b, scale: Math.max(v, 0) });
      }
    } else if (sel.kind === 'region' && sel.region !== undefined) {
      sendEdit({
        kind: 'set_face_planarization',
        region: sel.region,
        mu: Math.min(Math.max(v, 0), 1),
      });
    }
  });

  // picking: boundaries near the pointer win; otherwise pick the region
  canvas.addEventListener('click', (ev) => {
    if (!model.init || !model.positions || !triangles || !faceLabels) return;
    const rect = canvas.getBoundingClientRect();
    const xNdc = (2 * (ev.clientX - rect.left)) / rect.width - 1;
    const yNdc = 1 - (2 * (ev.clientY - rect.top)) / rect.height;
    const ray = rayFromScreen(camera, canvas.width / canvas.height, xNdc, yNdc);
    const pixelWorld = (camera.distance * Math.tan(Math.PI / 8) * 2) / canvas.height;
    const hit = pickBoundary(ray, model.init.polylines, 8 * pixelWorld);
    if (hit) {
      model.selection = { kind: 'boundary', pair: hit.pair };
    } else {
      const region = pickRegion(ray, model.positions, triangles, faceLabels);
      model.selection =
        region && region.region > 0
          ? { kind: 'region', region: region.region }
          : { kind: 'none' };
    }
    updateHud();
  });

  // orbit camera
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  canvas.addEventListener('mousedown', (e) => {
    dragging = true;
    lastX = e.clientX;
    lastY = e.clientY;
  });
  window.addEventListener('mouseup', () => (dragging = false));
  window.addEventListener('mousemove', (e) => {
    if (!dragging) return;
    camera.theta += (e.clientX - lastX) * 0.01;
    camera.phi = Math.min(Math.max(camera.phi + (e.clientY - lastY) * 0.01, -1.4), 1.4);
    lastX = e.clientX;
    lastY = e.clientY;
  });
  canvas.addEventListener('wheel', (e) => {
    camera.distance *= Math.exp(e.deltaY * 0.001);
    e.preventDefault();
  });

  function frameLoop(): void {
    const dpr = window.devicePixelRatio || 1;
    const w = Math.floor(canvas.clientWidth * dpr);
    const h = Math.floor(canvas.clientHeight * dpr);
    if (canvas.width !== w || canvas.height !== h) {
      canvas.width = w;
      canvas.height = h;
    }
    if (model.positions) renderer.draw(camera);
    requestAnimationFrame(frameLoop);
  }

  connect();
  requestAnimationFrame(frameLoop);
}

main();
