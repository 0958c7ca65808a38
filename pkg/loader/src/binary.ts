/** Binary payload readers for format version 1.
 *
 * CSI: 32-byte header (magic "NFCS", u32 version, u32 M, u32 K, u32 T,
 * 12 reserved bytes), then little-endian float32 in C order (M, K, T, 2).
 * Cloud: 16-byte header (magic "NFPC", u32 version, u32 count, 4 reserved),
 * then little-endian float32 (count, 3).
 * Depth/semantic maps are binary PGMs; depth stores centimeters as 16-bit
 * big-endian words (0 = no hit).
 */

import { readFileSync } from "node:fs";

import { FormatVersionError, ShapeMismatchError } from "./errors.js";

export const FORMAT_VERSION = 1;

const CSI_HEADER_BYTES = 32;
const CLOUD_HEADER_BYTES = 16;

export interface CsiTensor {
  m: number;
  k: number;
  t: number;
  /** Full payload, C order (M, K, T, 2). */
  data: Float32Array;
}

export function readCsi(path: string): CsiTensor {
  const raw = readFileSync(path);
  if (raw.length < CSI_HEADER_BYTES) {
    throw new ShapeMismatchError(`${path}: truncated CSI header`);
  }
  if (raw.toString("latin1", 0, 4) !== "NFCS") {
    throw new FormatVersionError(`${path}: bad CSI magic`);
  }
  const version = raw.readUInt32LE(4);
  if (version !== FORMAT_VERSION) {
    throw new FormatVersionError(`${path}: CSI format version ${version}, expected ${FORMAT_VERSION}`);
  }
  const m = raw.readUInt32LE(8);
  const k = raw.readUInt32LE(12);
  const t = raw.readUInt32LE(16);
  const expected = CSI_HEADER_BYTES + m * k * t * 2 * 4;
  if (raw.length !== expected) {
    throw new ShapeMismatchError(`${path}: CSI payload is ${raw.length} bytes, header implies ${expected}`);
  }
  const body = raw.subarray(CSI_HEADER_BYTES);
  const data = new Float32Array(m * k * t * 2);
  for (let i = 0; i < data.length; i++) {
    data[i] = body.readFloatLE(i * 4);
  }
  return { m, k, t, data };
}

/** Extract one frame as split (M, K) planes from the (M, K, T, 2) payload. */
export function csiFrame(tensor: CsiTensor, frame: number): { real: Float32Array; imag: Float32Array } {
  const { m, k, t, data } = tensor;
  if (frame < 0 || frame >= t) {
    throw new ShapeMismatchError(`frame ${frame} outside 0..${t - 1}`);
  }
  const real = new Float32Array(m * k);
  const imag = new Float32Array(m * k);
  for (let i = 0; i < m; i++) {
    for (let j = 0; j < k; j++) {
      const base = ((i * k + j) * t + frame) * 2;
      real[i * k + j] = data[base];
      imag[i * k + j] = data[base + 1];
    }
  }
  return { real, imag };
}

export function readCloud(path: string): Float32Array {
  const raw = readFileSync(path);
  if (raw.length < CLOUD_HEADER_BYTES) {
    throw new ShapeMismatchError(`${path}: truncated cloud header`);
  }
  if (raw.toString("latin1", 0, 4) !== "NFPC") {
    throw new FormatVersionError(`${path}: bad cloud magic`);
  }
  const version = raw.readUInt32LE(4);
  if (version !== FORMAT_VERSION) {
    throw new FormatVersionError(`${path}: cloud format version ${version}, expected ${FORMAT_VERSION}`);
  }
  const count = raw.readUInt32LE(8);
  const expected = CLOUD_HEADER_BYTES + count * 12;
  if (raw.length !== expected) {
    throw new ShapeMismatchError(`${path}: cloud payload is ${raw.length} bytes, header implies ${expected}`);
  }
  const out = new Float32Array(count * 3);
  for (let i = 0; i < out.length; i++) {
    out[i] = raw.readFloatLE(CLOUD_HEADER_BYTES + i * 4);
  }
  return out;
}

export interface Pgm {
  width: number;
  height: number;
  maxval: number;
  /** Row-major samples (16-bit words already byte-swapped to host order). */
  data: Uint16Array | Uint8Array;
}

export function readPgm(path: string): Pgm {
  const raw = readFileSync(path);
  // header: "P5\n{w} {h}\n{maxval}\n"
  let pos = 0;
  const line = () => {
    const nl = raw.indexOf(0x0a, pos);
    if (nl < 0) throw new ShapeMismatchError(`${path}: malformed PGM header`);
    const s = raw.toString("latin1", pos, nl);
    pos = nl + 1;
    return s;
  };
  if (line() !== "P5") {
    throw new ShapeMismatchError(`${path}: not a binary PGM`);
  }
  const [w, h] = line().split(/\s+/).map(Number);
  const maxval = Number(line());
  const count = w * h;
  if (maxval > 255) {
    if (raw.length - pos !== count * 2) {
      throw new ShapeMismatchError(`${path}: PGM payload shorter than ${w}x${h}`);
    }
    const data = new Uint16Array(count);
    for (let i = 0; i < count; i++) {
      data[i] = raw.readUInt16BE(pos + i * 2); // PGM stores MSB first
    }
    return { width: w, height: h, maxval, data };
  }
  if (raw.length - pos !== count) {
    throw new ShapeMismatchError(`${path}: PGM payload shorter than ${w}x${h}`);
  }
  return { width: w, height: h, maxval, data: new Uint8Array(raw.subarray(pos, pos + count)) };
}

export const DEPTH_UNITS_PER_METER = 100;

export function readDepthMeters(path: string): Float64Array {
  const pgm = readPgm(path);
  const out = new Float64Array(pgm.data.length);
  for (let i = 0; i < out.length; i++) {
    out[i] = pgm.data[i] / DEPTH_UNITS_PER_METER;
  }
  return out;
}
