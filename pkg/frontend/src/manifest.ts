/**
 * Export manifest: which texts to encode under which keys.
 *
 * Two accepted shapes:
 *   - a bare JSON array:  [{"key": "...", "text": "..."}, ...]
 *   - an object:          {"encoder": "...", "dim": 768, "entries": [...]}
 *
 * Duplicate keys are rejected here, before any encoding or writing.
 */

export interface ManifestItem {
  key: string;
  text: string;
}

export interface Manifest {
  encoder: string;
  dim: number;
  items: ManifestItem[];
}

export class ManifestError extends Error {}

export const DEFAULT_ENCODER = "hashed-ngram-768";
export const DEFAULT_DIM = 768;

export function parseManifest(
  raw: unknown,
  overrides: { encoder?: string; dim?: number } = {},
): Manifest {
  let encoder = DEFAULT_ENCODER;
  let dim = DEFAULT_DIM;
  let itemsRaw: unknown;
  if (Array.isArray(raw)) {
    itemsRaw = raw;
  } else if (raw !== null && typeof raw === "object") {
    const obj = raw as Record<string, unknown>;
    if (typeof obj.encoder === "string") encoder = obj.encoder;
    if (typeof obj.dim === "number") dim = obj.dim;
    itemsRaw = obj.entries ?? obj.items;
  } else {
    throw new ManifestError("manifest must be a JSON array or object");
  }
  if (!Array.isArray(itemsRaw)) {
    throw new ManifestError("manifest has no entries array");
  }
  if (overrides.encoder !== undefined) encoder = overrides.encoder;
  if (overrides.dim !== undefined) dim = overrides.dim;
  if (!Number.isInteger(dim) || dim <= 0) {
    throw new ManifestError(`dim must be a positive integer, got ${dim}`);
  }

  const items: ManifestItem[] = [];
  const seen = new Set<string>();
  itemsRaw.forEach((item, i) => {
    if (item === null || typeof item !== "object") {
      throw new ManifestError(`entry ${i} is not an object`);
    }
    const { key, text } = item as Record<string, unknown>;
    if (typeof key !== "string" || key.length === 0) {
      throw new ManifestError(`entry ${i} needs a non-empty string key`);
    }
    if (typeof text !== "string") {
      throw new ManifestError(`entry ${i} (${JSON.stringify(key)}) needs a string text`);
    }
    if (seen.has(key)) {
      throw new ManifestError(`duplicate key ${JSON.stringify(key)}`);
    }
    seen.add(key);
    items.push({ key, text });
  });
  return { encoder, dim, items };
}
