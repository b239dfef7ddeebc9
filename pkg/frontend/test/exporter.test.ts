import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { decodeEmb1, emb1Size } from "../src/emb1.js";
import { EncoderError, HashedNgramEncoder, makeEncoder } from "../src/encoders.js";
import { exportManifest } from "../src/exporter.js";
import { parseManifest } from "../src/manifest.js";

const FIXTURE_DIR = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

const SAMPLE_TEXTS = [
  { key: "cat:mug", text: "mug" },
  { key: "instr:demo:basic", text: "I need something to drink from." },
  { key: "attr:cat:mug:0", text: "holds liquid" },
];

function tmp(name: string): string {
  return join(mkdtempSync(join(tmpdir(), "emb-")), name);
}

describe("hashed n-gram encoder", () => {
  it("is deterministic, unit-norm and dim-correct", async () => {
    const enc = new HashedNgramEncoder(768);
    const a = await enc.encode("I need a comfortable place to read");
    const b = await enc.encode("I need a comfortable place to read");
    expect(Buffer.from(a.buffer)).toEqual(Buffer.from(b.buffer));
    expect(a).toHaveLength(768);
    const norm = Math.sqrt(a.reduce((s, v) => s + v * v, 0));
    expect(norm).toBeCloseTo(1.0, 6);
  });

  it("separates different texts", async () => {
    const enc = new HashedNgramEncoder(768);
    const a = await enc.encode("a reading lamp");
    const b = await enc.encode("a kettle for tea");
    let dot = 0;
    for (let i = 0; i < a.length; i++) dot += a[i] * b[i];
    expect(Math.abs(dot)).toBeLessThan(0.9);
  });

  it("registry resolves ids and rejects unknown ones", () => {
    expect(makeEncoder("hashed-ngram-768", 768).dim).toBe(768);
    expect(() => makeEncoder("quantum-vibes", 768)).toThrow(EncoderError);
  });
});

describe("export pipeline", () => {
  it("3 keys at dim 768: size formula holds exactly", async () => {
    const manifest = parseManifest(SAMPLE_TEXTS);
    const out = tmp("sample.emb1");
    const result = await exportManifest(manifest, out);
    const expected =
      12 +
      SAMPLE_TEXTS.reduce((s, e) => s + 2 + Buffer.byteLength(e.key, "utf-8"), 0) +
      3 * 768 * 4;
    expect(result.bytes).toBe(expected);
    expect(readFileSync(out).length).toBe(expected);
    expect(emb1Size(SAMPLE_TEXTS.map((e) => e.key), 768)).toBe(expected);
  });

  it("round-trips through its own reader bit-exactly", async () => {
    const manifest = parseManifest(SAMPLE_TEXTS);
    const out = tmp("rt.emb1");
    await exportManifest(manifest, out);
    const back = decodeEmb1(readFileSync(out));
    const enc = new HashedNgramEncoder(768);
    for (const item of SAMPLE_TEXTS) {
      const entry = back.entries.find((e) => e.key === item.key)!;
      const expected = await enc.encode(item.text);
      expect(Buffer.from(entry.vector.buffer)).toEqual(Buffer.from(expected.buffer));
    }
  });

  it("empty manifest writes a valid count-0 file", async () => {
    const out = tmp("empty.emb1");
    const result = await exportManifest(parseManifest([]), out);
    expect(result.count).toBe(0);
    expect(readFileSync(out).length).toBe(12);
  });

  it("transformers encoder fails with a clear error when no local model exists", async () => {
    const manifest = parseManifest(SAMPLE_TEXTS, { encoder: "transformers:/no/such/model" });
    await expect(exportManifest(manifest, tmp("x.emb1"))).rejects.toThrow(EncoderError);
  });

  it("emits the cross-language fixture consumed by the Python loader", async () => {
    const manifest = parseManifest(SAMPLE_TEXTS);
    const out = join(FIXTURE_DIR, "sample_768.emb1");
    await exportManifest(manifest, out);
    const enc = new HashedNgramEncoder(768);
    const sidecar: Record<string, unknown> = {
      dim: 768,
      encoder: enc.id,
      size: readFileSync(out).length,
      entries: {} as Record<string, string>,
    };
    for (const item of SAMPLE_TEXTS) {
      const v = await enc.encode(item.text);
      (sidecar.entries as Record<string, string>)[item.key] = Buffer.from(v.buffer).toString("hex");
    }
    writeFileSync(join(FIXTURE_DIR, "sample_768.expected.json"), JSON.stringify(sidecar, null, 1));
    expect(readFileSync(out).length).toBe(emb1Size(SAMPLE_TEXTS.map((e) => e.key), 768));
  });
});

describe("cli", () => {
  it("exports from a manifest file and reports the summary", async () => {
    const manifestPath = tmp("manifest.json");
    writeFileSync(manifestPath, JSON.stringify(SAMPLE_TEXTS));
    const out = tmp("cli.emb1");
    expect(await main([manifestPath, out])).toBe(0);
    expect(decodeEmb1(readFileSync(out)).entries).toHaveLength(3);
  });

  it("fails cleanly on duplicate keys and bad usage", async () => {
    const manifestPath = tmp("dup.json");
    writeFileSync(
      manifestPath,
      JSON.stringify([
        { key: "k", text: "a" },
        { key: "k", text: "b" },
      ]),
    );
    expect(await main([manifestPath, tmp("no.emb1")])).toBe(1);
    expect(await main([])).toBe(2);
  });

  it("honors --dim for the hashed encoder", async () => {
    const manifestPath = tmp("m.json");
    writeFileSync(manifestPath, JSON.stringify(SAMPLE_TEXTS));
    const out = tmp("d64.emb1");
    expect(await main([manifestPath, out, "--encoder", "hashed-ngram-64", "--dim", "64"])).toBe(0);
    expect(decodeEmb1(readFileSync(out)).dim).toBe(64);
  });
});
