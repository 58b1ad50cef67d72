#!/usr/bin/env node
/**
 * Codec protocol entry point:
 *
 *   vae-codec encode <in.pfm> <out.lat>
 *   vae-codec decode <in.lat> <out.pfm>
 *
 * Exit codes: 0 success, 1 malformed input or usage, 3 model unavailable.
 * The model id is taken from VAE_CODEC_MODEL (default: the bundled one).
 * Encode writes a `<out.lat>.meta.json` sidecar recording the pre-padding
 * size; decode crops with it when present.
 */

import { existsSync, readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import process from "node:process";

import { decodeLatent, encodeImage, ModelError, resolveModel, type SidecarMeta } from "./codec.js";
import { readLat, writeLat } from "./lat.js";
import { FormatError, readPfm, writePfm } from "./pfm.js";

function sidecarPath(latPath: string): string {
  return `${latPath}.meta.json`;
}

export function main(argv: string[]): number {
  const [mode, src, dst] = argv;
  if (!mode || !src || !dst || (mode !== "encode" && mode !== "decode")) {
    console.error("usage: vae-codec encode <in.pfm> <out.lat> | decode <in.lat> <out.pfm>");
    return 1;
  }
  try {
    resolveModel(process.env.VAE_CODEC_MODEL);
    if (mode === "encode") {
      const img = readPfm(src);
      const { latent, meta } = encodeImage(img);
      writeLat(latent, dst);
      writeFileSync(sidecarPath(dst), JSON.stringify(meta) + "\n");
    } else {
      const lat = readLat(src);
      let meta: SidecarMeta | undefined;
      if (existsSync(sidecarPath(src))) {
        meta = JSON.parse(readFileSync(sidecarPath(src), "utf-8")) as SidecarMeta;
      }
      writePfm(decodeLatent(lat, meta), dst);
    }
    return 0;
  } catch (err) {
    if (err instanceof ModelError) {
      console.error(`vae-codec: ${err.message}`);
      return 3;
    }
    if (err instanceof FormatError || err instanceof SyntaxError || isFsError(err)) {
      console.error(`vae-codec: ${(err as Error).message}`);
      return 1;
    }
    throw err;
  }
}

function isFsError(err: unknown): boolean {
  return typeof err === "object" && err !== null && "code" in err;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
