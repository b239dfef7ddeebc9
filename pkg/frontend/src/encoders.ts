/**
 * Text encoders. Two implementations:
 *
 *  - HashedNgramEncoder: dependency-free, deterministic character-trigram
 *    feature hashing into a unit vector. Always available; used by the
 *    tests and as the offline fallback.
 *  - TransformersEncoder: a pretrained feature-extraction model loaded
 *    from a local directory via @huggingface/transformers (mean pooling,
 *    L2-normalized). Selected with "transformers:<model-path>".
 */

export interface TextEncoder {
  readonly id: string;
  readonly dim: number;
  encode(text: string): Promise<Float32Array>;
}

export class EncoderError extends Error {}

/** FNV-1a 32-bit hash; stable across platforms. */
function fnv1a(text: string, seed: number): number {
  let h = (0x811c9dc5 ^ seed) >>> 0;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h;
}

export class HashedNgramEncoder implements TextEncoder {
  readonly id: string;
  constructor(readonly dim: number = 768, private readonly n: number = 3) {
    this.id = `hashed-ngram-${dim}`;
  }

  async encode(text: string): Promise<Float32Array> {
    const acc = new Float64Array(this.dim);
    const padded = `${text.toLowerCase()}`;
    const grams = Math.max(1, padded.length - this.n + 1);
    for (let i = 0; i < grams; i++) {
      const gram = padded.slice(i, i + this.n);
      const idx = fnv1a(gram, 0) % this.dim;
      const sign = fnv1a(gram, 0x9e3779b9) & 1 ? 1.0 : -1.0;
      acc[idx] += sign;
    }
    let norm = 0;
    for (let i = 0; i < this.dim; i++) norm += acc[i] * acc[i];
    norm = Math.sqrt(norm) || 1.0;
    const out = new Float32Array(this.dim);
    for (let i = 0; i < this.dim; i++) out[i] = acc[i] / norm;
    return out;
  }
}

export class TransformersEncoder implements TextEncoder {
  readonly id: string;
  private pipe: ((text: string, opts: object) => Promise<{ data: Float32Array }>) | null = null;

  constructor(readonly modelPath: string, readonly dim: number = 768) {
    this.id = `transformers:${modelPath}`;
  }

  private async load() {
    if (this.pipe) return;
    let mod: any;
    try {
      // @ts-ignore -- optional peer dependency, resolved only at runtime
      mod = await import("@huggingface/transformers");
    } catch (err) {
      throw new EncoderError(
        "@huggingface/transformers is not installed; install it or use the " +
          `hashed-ngram encoder (${(err as Error).message})`,
      );
    }
    try {
      mod.env.allowRemoteModels = false; // offline adapter: local files only
      this.pipe = await mod.pipeline("feature-extraction", this.modelPath, {
        local_files_only: true,
      });
    } catch (err) {
      throw new EncoderError(
        `cannot load local model at ${this.modelPath}: ${(err as Error).message}`,
      );
    }
  }

  async encode(text: string): Promise<Float32Array> {
    await this.load();
    const out = await this.pipe!(text, { pooling: "mean", normalize: true });
    const vec = Float32Array.from(out.data);
    if (vec.length !== this.dim) {
      throw new EncoderError(
        `model produced ${vec.length} dims, manifest expects ${this.dim}`,
      );
    }
    return vec;
  }
}

export function makeEncoder(id: string, dim: number): TextEncoder {
  if (id.startsWith("hashed-ngram")) {
    return new HashedNgramEncoder(dim);
  }
  if (id.startsWith("transformers:")) {
    return new TransformersEncoder(id.slice("transformers:".length), dim);
  }
  throw new EncoderError(
    `unknown encoder ${JSON.stringify(id)}; use "hashed-ngram-<dim>" or "transformers:<model-path>"`,
  );
}
