/**
 * Minimal PFM reader/writer.
 *
 * Header: "PF" (RGB) or "Pf" (grayscale), a "<width> <height>" line and a
 * scale line whose sign selects payload endianness (negative =
 * little-endian). Rows are stored bottom-up in the file; this module returns
 * and accepts top-down, channel-interleaved row-major samples.
 */

import { readFileSync, writeFileSync } from "node:fs";

export interface PfmImage {
  width: number;
  height: number;
  channels: 1 | 3;
  /** top-down row-major, channel-interleaved */
  data: Float32Array;
}

export class FormatError extends Error {}

const WHITESPACE = new Set([0x20, 0x09, 0x0a, 0x0d, 0x0c, 0x0b]);

function nextToken(buf: Buffer, pos: number): [string, number] {
  while (pos < buf.length && WHITESPACE.has(buf[pos])) pos++;
  const start = pos;
  while (pos < buf.length && !WHITESPACE.has(buf[pos])) pos++;
  if (start === pos) throw new FormatError("truncated PFM header");
  return [buf.subarray(start, pos).toString("ascii"), pos];
}

export function readPfm(path: string): PfmImage {
  const buf = readFileSync(path);
  let pos = 0;
  let magic: string, wTok: string, hTok: string, sTok: string;
  [magic, pos] = nextToken(buf, pos);
  if (magic !== "PF" && magic !== "Pf") {
    throw new FormatError(`not a PFM file (magic ${JSON.stringify(magic)})`);
  }
  const channels = magic === "PF" ? 3 : 1;
  [wTok, pos] = nextToken(buf, pos);
  [hTok, pos] = nextToken(buf, pos);
  [sTok, pos] = nextToken(buf, pos);
  const width = Number(wTok);
  const height = Number(hTok);
  const scale = Number(sTok);
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new FormatError(`invalid PFM dimensions ${wTok}x${hTok}`);
  }
  if (!Number.isFinite(scale) || scale === 0) {
    throw new FormatError(`invalid PFM scale line ${sTok}`);
  }
  pos += 1; // single whitespace byte after the scale token
  const count = width * height * channels;
  if (buf.length - pos !== count * 4) {
    throw new FormatError(`PFM payload holds ${buf.length - pos} bytes, expected ${count * 4}`);
  }
  const littleEndian = scale < 0;
  const view = new DataView(buf.buffer, buf.byteOffset + pos, count * 4);
  const data = new Float32Array(count);
  const rowLen = width * channels;
  for (let row = 0; row < height; row++) {
    const srcRow = height - 1 - row; // bottom-up storage
    for (let i = 0; i < rowLen; i++) {
      data[row * rowLen + i] = view.getFloat32((srcRow * rowLen + i) * 4, littleEndian);
    }
  }
  return { width, height, channels: channels as 1 | 3, data };
}

export function writePfm(img: PfmImage, path: string): void {
  const { width, height, channels, data } = img;
  if (data.length !== width * height * channels) {
    throw new FormatError("PFM sample count does not match dimensions");
  }
  const header = Buffer.from(`${channels === 3 ? "PF" : "Pf"}\n${width} ${height}\n-1.0\n`, "ascii");
  const payload = Buffer.alloc(data.length * 4);
  const rowLen = width * channels;
  for (let row = 0; row < height; row++) {
    const dstRow = height - 1 - row;
    for (let i = 0; i < rowLen; i++) {
      payload.writeFloatLE(data[row * rowLen + i], (dstRow * rowLen + i) * 4);
    }
  }
  writeFileSync(path, Buffer.concat([header, payload]));
}
