/**
 * The .lat latent container: "TOMLAT1" magic line, an ASCII "C H W" dims
 * line, then little-endian float32 samples in C,H,W row-major order.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { FormatError } from "./pfm.js";

export interface Latent {
  channels: number;
  height: number;
  width: number;
  /** C,H,W row-major */
  data: Float32Array;
}

const MAGIC = "TOMLAT1\n";

export function writeLat(lat: Latent, path: string): void {
  const { channels, height, width, data } = lat;
  if (data.length !== channels * height * width) {
    throw new FormatError("latent sample count does not match dims");
  }
  const header = Buffer.from(`${MAGIC}${channels} ${height} ${width}\n`, "ascii");
  const payload = Buffer.alloc(data.length * 4);
  for (let i = 0; i < data.length; i++) payload.writeFloatLE(data[i], i * 4);
  writeFileSync(path, Buffer.concat([header, payload]));
}

export function readLat(path: string): Latent {
  const buf = readFileSync(path);
  if (buf.subarray(0, MAGIC.length).toString("ascii") !== MAGIC) {
    throw new FormatError(`${path}: missing latent magic line`);
  }
  const nl = buf.indexOf(0x0a, MAGIC.length);
  if (nl < 0) throw new FormatError(`${path}: truncated latent header`);
  const dims = buf.subarray(MAGIC.length, nl).toString("ascii").trim().split(/\s+/).map(Number);
  if (dims.length !== 3 || dims.some((d) => !Number.isInteger(d) || d < 1)) {
    throw new FormatError(`${path}: malformed latent dims line`);
  }
  const [channels, height, width] = dims;
  const count = channels * height * width;
  const payload = buf.subarray(nl + 1);
  if (payload.length !== count * 4) {
    throw new FormatError(`${path}: latent payload holds ${payload.length} bytes, expected ${count * 4}`);
  }
  const view = new DataView(payload.buffer, payload.byteOffset, count * 4);
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) data[i] = view.getFloat32(i * 4, true);
  return { channels, height, width, data };
}
