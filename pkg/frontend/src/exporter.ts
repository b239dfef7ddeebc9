/** Batch export: encode every manifest text and write one EMB1 file. */

import { writeFileSync } from "node:fs";

import { encodeEmb1, emb1Size, type Entry } from "./emb1.js";
import { makeEncoder, type TextEncoder } from "./encoders.js";
import type { Manifest } from "./manifest.js";

export interface ExportResult {
  path: string;
  count: number;
  dim: number;
  bytes: number;
  encoder: string;
}

export async function exportManifest(
  manifest: Manifest,
  outPath: string,
  encoder?: TextEncoder,
): Promise<ExportResult> {
  const enc = encoder ?? makeEncoder(manifest.encoder, manifest.dim);
  if (enc.dim !== manifest.dim) {
    throw new Error(`encoder dim ${enc.dim} does not match manifest dim ${manifest.dim}`);
  }
  const entries: Entry[] = [];
  for (const item of manifest.items) {
    entries.push({ key: item.key, vector: await enc.encode(item.text) });
  }
  const buf = encodeEmb1(entries, manifest.dim);
  const expected = emb1Size(manifest.items.map((i) => i.key), manifest.dim);
  if (buf.length !== expected) {
    throw new Error(`internal size mismatch: wrote ${buf.length}, formula says ${expected}`);
  }
  writeFileSync(outPath, buf);
  return {
    path: outPath,
    count: entries.length,
    dim: manifest.dim,
    bytes: buf.length,
    encoder: enc.id,
  };
}
