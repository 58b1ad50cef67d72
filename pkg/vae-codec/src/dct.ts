/**
 * Orthonormal 8x8 2-D DCT-II and its inverse, as separable matrix products.
 * Orthonormality makes truncation in the transform domain an orthogonal
 * projection, so the reconstruction error is exactly the discarded energy.
 */

export const BLOCK = 8;

// basis[u][x] = s(u) * cos((2x + 1) * u * pi / 16)
const basis: number[][] = [];
for (let u = 0; u < BLOCK; u++) {
  const s = u === 0 ? Math.sqrt(1 / BLOCK) : Math.sqrt(2 / BLOCK);
  basis.push(
    Array.from({ length: BLOCK }, (_, x) => s * Math.cos(((2 * x + 1) * u * Math.PI) / (2 * BLOCK))),
  );
}

/** F = C * B * C^T; `block` and `out` are 64-element row-major buffers. */
export function dct2d(block: Float64Array, out: Float64Array): void {
  const tmp = new Float64Array(BLOCK * BLOCK);
  for (let u = 0; u < BLOCK; u++) {
    for (let x = 0; x < BLOCK; x++) {
      let acc = 0;
      for (let y = 0; y < BLOCK; y++) acc += basis[u][y] * block[y * BLOCK + x];
      tmp[u * BLOCK + x] = acc;
    }
  }
  for (let u = 0; u < BLOCK; u++) {
    for (let v = 0; v < BLOCK; v++) {
      let acc = 0;
      for (let x = 0; x < BLOCK; x++) acc += tmp[u * BLOCK + x] * basis[v][x];
      out[u * BLOCK + v] = acc;
    }
  }
}

/** B = C^T * F * C */
export function idct2d(coeffs: Float64Array, out: Float64Array): void {
  const tmp = new Float64Array(BLOCK * BLOCK);
  for (let y = 0; y < BLOCK; y++) {
    for (let v = 0; v < BLOCK; v++) {
      let acc = 0;
      for (let u = 0; u < BLOCK; u++) acc += basis[u][y] * coeffs[u * BLOCK + v];
      tmp[y * BLOCK + v] = acc;
    }
  }
  for (let y = 0; y < BLOCK; y++) {
    for (let x = 0; x < BLOCK; x++) {
      let acc = 0;
      for (let v = 0; v < BLOCK; v++) acc += tmp[y * BLOCK + v] * basis[v][x];
      out[y * BLOCK + x] = acc;
    }
  }
}
