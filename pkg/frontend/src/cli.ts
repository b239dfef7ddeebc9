/**
 * Usage:
 *   node dist/cli.js <manifest.json> <out.emb1> [--encoder ID] [--dim N]
 *
 * Encoder IDs: hashed-ngram-<dim> (built in) or transformers:<model-dir>
 * (pretrained model from a local directory). Flags override manifest
 * fields, which override the defaults (hashed-ngram-768, dim 768).
 */

import { readFileSync } from "node:fs";

import { exportManifest } from "./exporter.js";
import { parseManifest } from "./manifest.js";

export async function main(argv: string[]): Promise<number> {
  const positional: string[] = [];
  const overrides: { encoder?: string; dim?: number } = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--encoder") {
      overrides.encoder = argv[++i];
    } else if (arg === "--dim") {
      overrides.dim = Number(argv[++i]);
    } else if (arg === "--help" || arg === "-h") {
      console.log("usage: exporter <manifest.json> <out.emb1> [--encoder ID] [--dim N]");
      return 0;
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 2) {
    console.error("usage: exporter <manifest.json> <out.emb1> [--encoder ID] [--dim N]");
    return 2;
  }
  const [manifestPath, outPath] = positional;
  try {
    const raw = JSON.parse(readFileSync(manifestPath, "utf-8"));
    const manifest = parseManifest(raw, overrides);
    const result = await exportManifest(manifest, outPath);
    console.log(
      `wrote ${result.count} vectors (dim ${result.dim}, ${result.bytes} bytes) ` +
        `to ${result.path} using ${result.encoder}`,
    );
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
