export { MAGIC, HEADER_SIZE, emb1Size, encodeEmb1, decodeEmb1, Emb1FormatError } from "./emb1.js";
export type { Entry } from "./emb1.js";
export { parseManifest, ManifestError, DEFAULT_DIM, DEFAULT_ENCODER } from "./manifest.js";
export type { Manifest, ManifestItem } from "./manifest.js";
export { HashedNgramEncoder, TransformersEncoder, makeEncoder, EncoderError } from "./encoders.js";
export type { TextEncoder } from "./encoders.js";
export { exportManifest } from "./exporter.js";
export type { ExportResult } from "./exporter.js";
