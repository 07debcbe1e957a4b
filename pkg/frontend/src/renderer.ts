// Minimal WebGL2 renderer: flat-shaded triangle mesh with a dynamic
// position buffer (updated in place per frame) plus a line overlay for
// the abstracted-mesh boundaries. No external engine.

export interface Camera {
  theta: number;
  phi: number;
  distance: number;
  target: [number, number, number];
}

const VERT = `#version 300 es
uniform mat4 u_mvp;
in vec3 a_position;
out vec3 v_world;
void main() {
  v_world = a_position;
  gl_Position = u_mvp * vec4(a_position, 1.0);
}`;

const FRAG = `#version 300 es
precision highp float;
in vec3 v_world;
uniform vec3 u_eye;
uniform vec3 u_color;
out vec4 outColor;
void main() {
  vec3 n = normalize(cross(dFdx(v_world), dFdy(v_world)));
  vec3 l = normalize(u_eye - v_world);
  float diffuse = abs(dot(n, l));
  float shade = 0.15 + 0.85 * diffuse;
  outColor = vec4(u_color * shade, 1.0);
}`;

const LINE_VERT = `#version 300 es
uniform mat4 u_mvp;
in vec3 a_position;
void main() { gl_Position = u_mvp * vec4(a_position, 1.0); gl_PointSize = 3.0; }`;

const LINE_FRAG = `#version 300 es
precision highp float;
uniform vec3 u_color;
out vec4 outColor;
void main() { outColor = vec4(u_color, 1.0); }`;

function compile(gl: WebGL2RenderingContext, kind: number, src: string): WebGLShader {
  const sh = gl.createShader(kind)!;
  gl.shaderSource(sh, src);
  gl.compileShader(sh);
  if (!gl.getShaderParameter(sh, gl.COMPILE_STATUS)) {
    throw new Error(gl.getShaderInfoLog(sh) ?? 'shader compile failed');
  }
  return sh;
}

function link(gl: WebGL2RenderingContext, vs: string, fs: string): WebGLProgram {
  const prog = gl.createProgram()!;
  gl.attachShader(prog, compile(gl, gl.VERTEX_SHADER, vs));
  gl.attachShader(prog, compile(gl, gl.FRAGMENT_SHADER, fs));
  gl.linkProgram(prog);
  if (!gl.getProgramParameter(prog, gl.LINK_STATUS)) {
    throw new Error(gl.getProgramInfoLog(prog) ?? 'program link failed');
  }
  return prog;
}

export function perspective(fovY: number, aspect: number, near: number, far: number): Float32Array {
  const f = 1 / Math.tan(fovY / 2);
  const out = new Float32Array(16);
  out[0] = f / aspect;
  out[5] = f;
  out[10] = (far + near) / (near - far);
  out[11] = -1;
  out[14] = (2 * far * near) / (near - far);
  return out;
}

export function lookAtMvp(cam: Camera, aspect: number): { mvp: Float32Array; eye: [number, number, number] } {
  const ct = Math.cos(cam.theta), st = Math.sin(cam.theta);
  const cp = Math.cos(cam.phi), sp = Math.sin(cam.phi);
  const eye: [number, number, number] = [
    cam.target[0] + cam.distance * cp * st,
    cam.target[1] + cam.distance * sp,
    cam.target[2] + cam.distance * cp * ct,
  ];
  const zx = eye[0] - cam.target[0], zy = eye[1] - cam.target[1], zz = eye[2] - cam.target[2];
  const zl = Math.hypot(zx, zy, zz);
  const z = [zx / zl, zy / zl, zz / zl];
  const up = [0, 1, 0];
  const x = [up[1] * z[2] - up[2] * z[1], up[2] * z[0] - up[0] * z[2], up[0] * z[1] - up[1] * z[0]];
  const xl = Math.hypot(x[0], x[1], x[2]) || 1;
  x[0] /= xl; x[1] /= xl; x[2] /= xl;
  const y = [z[1] * x[2] - z[2] * x[1], z[2] * x[0] - z[0] * x[2], z[0] * x[1] - z[1] * x[0]];
  const view = new Float32Array([
    x[0], y[0], z[0], 0,
    x[1], y[1], z[1], 0,
    x[2], y[2], z[2], 0,
    -(x[0] * eye[0] + x[1] * eye[1] + x[2] * eye[2]),
    -(y[0] * eye[0] + y[1] * eye[1] + y[2] * eye[2]),
    -(z[0] * eye[0] + z[1] * eye[1] + z[2] * eye[2]),
    1,
  ]);
  const proj = perspective(Math.PI / 4, aspect, 0.01, 100.0);
  const mvp = new Float32Array(16);
  for (let r = 0; r < 4; r++) {
    for (let c = 0; c < 4; c++) {
      let acc = 0;
      for (let k = 0; k < 4; k++) acc += proj[k * 4 + r] * view[c * 4 + k];
      mvp[c * 4 + r] = acc;
    }
  }
  return { mvp, eye };
}

export class MeshRenderer {
  private gl: WebGL2RenderingContext;
  private meshProgram: WebGLProgram;
  private lineProgram: WebGLProgram;
  private positionBuffer: WebGLBuffer;
  private indexBuffer: WebGLBuffer;
  private overlayBuffer: WebGLBuffer;
  private indexCount = 0;
  private overlayCount = 0;
  overlayVisible = false;
  color: [number, number, number] = [0.78, 0.73, 0.68];

  constructor(private canvas: HTMLCanvasElement) {
    const gl = canvas.getContext('webgl2');
    if (!gl) throw new Error('WebGL2 is required');
    this.gl = gl;
    this.meshProgram = link(gl, VERT, FRAG);
    this.lineProgram = link(gl, LINE_VERT, LINE_FRAG);
    this.positionBuffer = gl.createBuffer()!;
    this.indexBuffer = gl.createBuffer()!;
    this.overlayBuffer = gl.createBuffer()!;
    gl.enable(gl.DEPTH_TEST);
  }

  setConnectivity(triangles: Int32Array, vertexCount: number): void {
    const gl = this.gl;
    gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.indexBuffer);
    gl.bufferData(gl.ELEMENT_ARRAY_BUFFER, new Uint32Array(triangles), gl.STATIC_DRAW);
    this.indexCount = triangles.length;
    gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, vertexCount * 12, gl.DYNAMIC_DRAW);
  }

  updatePositions(positions: Float32Array): void {
    const gl = this.gl;
    gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
    gl.bufferSubData(gl.ARRAY_BUFFER, 0, positions);
  }

  setOverlay(segments: Float32Array): void {
    const gl = this.gl;
    gl.bindBuffer(gl.ARRAY_BUFFER, this.overlayBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, segments, gl.STATIC_DRAW);
    this.overlayCount = segments.length / 3;
  }

  draw(cam: Camera): void {
    const gl = this.gl;
    const aspect = this.canvas.width / Math.max(this.canvas.height, 1);
    const { mvp, eye } = lookAtMvp(cam, aspect);
    gl.viewport(0, 0, this.canvas.width, this.canvas.height);
    gl.clearColor(0.09, 0.09, 0.11, 1);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);

    gl.useProgram(this.meshProgram);
    gl.uniformMatrix4fv(gl.getUniformLocation(this.meshProgram, 'u_mvp'), false, mvp);
    gl.uniform3fv(gl.getUniformLocation(this.meshProgram, 'u_eye'), eye);
    gl.uniform3fv(gl.getUniformLocation(this.meshProgram, 'u_color'), this.color);
    gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
    const loc = gl.getAttribLocation(this.meshProgram, 'a_position');
    gl.enableVertexAttribArray(loc);
    gl.vertexAttribPointer(loc, 3, gl.FLOAT, false, 0, 0);
    gl.bindBuffer(gl.ELEMENT_ARRAY_BUFFER, this.indexBuffer);
    gl.drawElements(gl.TRIANGLES, this.indexCount, gl.UNSIGNED_INT, 0);

    if (this.overlayVisible && this.overlayCount) {
      gl.useProgram(this.lineProgram);
      gl.uniformMatrix4fv(gl.getUniformLocation(this.lineProgram, 'u_mvp'), false, mvp);
      gl.uniform3fv(gl.getUniformLocation(this.lineProgram, 'u_color'), [1.0, 0.45, 0.1]);
      gl.bindBuffer(gl.ARRAY_BUFFER, this.overlayBuffer);
      const lloc = gl.getAttribLocation(this.lineProgram, 'a_position');
      gl.enableVertexAttribArray(lloc);
      gl.vertexAttribPointer(lloc, 3, gl.FLOAT, false, 0, 0);
      gl.disable(gl.DEPTH_TEST);
      gl.drawArrays(gl.LINES, 0, this.overlayCount);
      gl.enable(gl.DEPTH_TEST);
    }
  }
}

/** Pack boundary polylines into GL_LINES segment soup. */
export function overlaySegments(
  polylines: { points: number[][]; closed: boolean }[],
): Float32Array {
  let count = 0;
  for (const pl of polylines) count += (pl.closed ? pl.points.length : pl.points.length - 1) * 2;
  const out = new Float32Array(count * 3);
  let j = 0;
  for (const pl of polylines) {
    const n = pl.points.length;
    const last = pl.closed ? n : n - 1;
    for (let i = 0; i < last; i++) {
      const a = pl.points[i];
      const b = pl.points[(i + 1) % n];
      out.set(a, j); j += 3;
      out.set(b, j); j += 3;
    }
  }
  return out;
}

/** Pixel-space ray for picking from a mouse event position. */
export function rayFromScreen(
  cam: Camera,
  aspect: number,
  xNdc: number,
  yNdc: number,
): { origin: [number, number, number]; direction: [number, number, number] } {
  const { eye } = lookAtMvp(cam, aspect);
  const f = Math.tan(Math.PI / 8); // half fov
  // camera basis
  const ct = Math.cos(cam.theta), st = Math.sin(cam.theta);
  const cp = Math.cos(cam.phi), sp = Math.sin(cam.phi);
  const back = [cp * st, sp, cp * ct];
  const right = [ct, 0, -st];
  const up = [
    back[1] * right[2] - back[2] * right[1],
    back[2] * right[0] - back[0] * right[2],
    back[0] * right[1] - back[1] * right[0],
  ];
  const dir: [number, number, number] = [
    -back[0] + xNdc * f * aspect * right[0] + yNdc * f * up[0],
    -back[1] + xNdc * f * aspect * right[1] + yNdc * f * up[1],
    -back[2] + xNdc * f * aspect * right[2] + yNdc * f * up[2],
  ];
  const l = Math.hypot(dir[0], dir[1], dir[2]);
  return { origin: eye, direction: [dir[0] / l, dir[1] / l, dir[2] / l] };
}
