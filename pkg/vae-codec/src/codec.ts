/**
 * Image <-> latent transform behind the subprocess protocol.
 *
 * Encoding maps pixel values from [0, 1] to [-1, 1], reflect-pads the
 * spatial dims to the model stride, and runs the model's deterministic
 * encode (no sampling). The bundled model is a weight-free analytic
 * bottleneck: per channel, each 8x8 block is transformed with the
 * orthonormal DCT and only the low-frequency 4x4 corner is kept, giving a
 * stride-8 latent with 16 channels per image channel. Decoding inverts the
 * path, crops the recorded padding, maps back to [0, 1] and clamps.
 *
 * The original spatial size is recorded in a `<latent>.meta.json` sidecar;
 * decode crops when the sidecar is present and otherwise emits the full
 * padded size (the case for latents synthesized by fusion averaging).
 */

import { BLOCK, dct2d, idct2d } from "./dct.js";
import type { Latent } from "./lat.js";
import type { PfmImage } from "./pfm.js";

export const PAD_MULTIPLE = BLOCK;
export const KEEP = 4; // low-frequency corner kept per block, KEEP x KEEP
export const BUILTIN_MODEL = "builtin-dct8";

export interface SidecarMeta {
  model: string;
  origHeight: number;
  origWidth: number;
  imageChannels: number;
}

export class ModelError extends Error {}

export function resolveModel(id: string | undefined): string {
  const model = id ?? BUILTIN_MODEL;
  if (model !== BUILTIN_MODEL) {
    throw new ModelError(
      `model ${JSON.stringify(model)} is not available; bundled model is ${BUILTIN_MODEL}`,
    );
  }
  return model;
}

function reflectIndex(i: number, n: number): number {
  // reflect without repeating the edge sample; degenerate for n == 1
  if (n === 1) return 0;
  const period = 2 * n - 2;
  let j = i % period;
  if (j < 0) j += period;
  return j < n ? j : period - j;
}

/** [0,1] -> [-1,1], reflect-padded to the stride, channel-planar float64. */
function toPaddedPlanes(img: PfmImage): { planes: Float64Array[]; ph: number; pw: number } {
  const { width, height, channels, data } = img;
  const ph = Math.ceil(height / PAD_MULTIPLE) * PAD_MULTIPLE;
  const pw = Math.ceil(width / PAD_MULTIPLE) * PAD_MULTIPLE;
  const planes: Float64Array[] = [];
  for (let c = 0; c < channels; c++) {
    const plane = new Float64Array(ph * pw);
    for (let y = 0; y < ph; y++) {
      const sy = reflectIndex(y, height);
      for (let x = 0; x < pw; x++) {
        const sx = reflectIndex(x, width);
        plane[y * pw + x] = 2 * data[(sy * width + sx) * channels + c] - 1;
      }
    }
    planes.push(plane);
  }
  return { planes, ph, pw };
}

export function encodeImage(img: PfmImage): { latent: Latent; meta: SidecarMeta } {
  const { planes, ph, pw } = toPaddedPlanes(img);
  const lh = ph / BLOCK;
  const lw = pw / BLOCK;
  const channels = planes.length * KEEP * KEEP;
  const data = new Float32Array(channels * lh * lw);
  const block = new Float64Array(BLOCK * BLOCK);
  const coeffs = new Float64Array(BLOCK * BLOCK);
  for (let c = 0; c < planes.length; c++) {
    const plane = planes[c];
    for (let by = 0; by < lh; by++) {
      for (let bx = 0; bx < lw; bx++) {
        for (let y = 0; y < BLOCK; y++) {
          for (let x = 0; x < BLOCK; x++) {
            block[y * BLOCK + x] = plane[(by * BLOCK + y) * pw + bx * BLOCK + x];
          }
        }
        dct2d(block, coeffs);
        for (let u = 0; u < KEEP; u++) {
          for (let v = 0; v < KEEP; v++) {
            const lc = c * KEEP * KEEP + u * KEEP + v;
            data[(lc * lh + by) * lw + bx] = coeffs[u * BLOCK + v];
          }
        }
      }
    }
  }
  return {
    latent: { channels, height: lh, width: lw, data },
    meta: {
      model: BUILTIN_MODEL,
      origHeight: img.height,
      origWidth: img.width,
      imageChannels: img.channels,
    },
  };
}

export function decodeLatent(lat: Latent, meta?: SidecarMeta): PfmImage {
  const perChannel = KEEP * KEEP;
  if (lat.channels % perChannel !== 0) {
    throw new ModelError(
      `latent has ${lat.channels} channels, expected a multiple of ${perChannel}`,
    );
  }
  const imageChannels = lat.channels / perChannel;
  if (imageChannels !== 1 && imageChannels !== 3) {
    throw new ModelError(`latent decodes to ${imageChannels} image channels, expected 1 or 3`);
  }
  const ph = lat.height * BLOCK;
  const pw = lat.width * BLOCK;
  const outH = meta ? meta.origHeight : ph;
  const outW = meta ? meta.origWidth : pw;
  if (outH > ph || outW > pw) {
    throw new ModelError("sidecar size exceeds the padded latent size");
  }
  const data = new Float32Array(outH * outW * imageChannels);
  const coeffs = new Float64Array(BLOCK * BLOCK);
  const block = new Float64Array(BLOCK * BLOCK);
  for (let c = 0; c < imageChannels; c++) {
    for (let by = 0; by < lat.height; by++) {
      for (let bx = 0; bx < lat.width; bx++) {
        coeffs.fill(0);
        for (let u = 0; u < KEEP; u++) {
          for (let v = 0; v < KEEP; v++) {
            const lc = c * perChannel + u * KEEP + v;
            coeffs[u * BLOCK + v] = lat.data[(lc * lat.height + by) * lat.width + bx];
          }
        }
        idct2d(coeffs, block);
        for (let y = 0; y < BLOCK; y++) {
          const iy = by * BLOCK + y;
          if (iy >= outH) continue;
          for (let x = 0; x < BLOCK; x++) {
            const ix = bx * BLOCK + x;
            if (ix >= outW) continue;
            const v = (block[y * BLOCK + x] + 1) / 2;
            data[(iy * outW + ix) * imageChannels + c] = Math.min(1, Math.max(0, v));
          }
        }
      }
    }
  }
  return { width: outW, height: outH, channels: imageChannels as 1 | 3, data };
}
